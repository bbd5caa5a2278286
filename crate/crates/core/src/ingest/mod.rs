//! Gaze recording ingestion: the CSV cohort schema, trial concatenation,
//! screen geometry, and the synthetic cohort generator.

mod csv_io;
mod geometry;
mod synth;

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{GazeError, Result};

pub use csv_io::{load_cohort, read_cohort, write_cohort, LoadOptions, CSV_HEADER};
pub use geometry::{Rect, ScreenGeometry};
pub use synth::{generate_synthetic_cohort, ClassEffect, CohortSpec, FaceLayout, KinematicOffsets};

/// Default recording cap: two minutes.
pub const DEFAULT_CAP_MS: f64 = 120_000.0;

/// Default sampling rate of the reference recordings.
pub const DEFAULT_SAMPLE_RATE_HZ: f64 = 250.0;

/// One gaze sample: time in ms from recording start, position in screen pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GazeSample {
    pub t: f64,
    pub x: f64,
    pub y: f64,
}

impl GazeSample {
    pub fn new(t: f64, x: f64, y: f64) -> Self {
        GazeSample { t, x, y }
    }
}

/// Binary class label. Female is the positive class throughout the crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Gender {
    Female,
    Male,
}

impl Gender {
    pub fn code(self) -> &'static str {
        match self {
            Gender::Female => "F",
            Gender::Male => "M",
        }
    }

    pub fn from_code(code: &str) -> Option<Gender> {
        match code.trim() {
            "F" => Some(Gender::Female),
            "M" => Some(Gender::Male),
            _ => None,
        }
    }

    /// 1.0 for the positive (female) class, 0.0 otherwise.
    pub fn target(self) -> f64 {
        match self {
            Gender::Female => 1.0,
            Gender::Male => 0.0,
        }
    }

    pub fn from_probability(p_female: f64) -> Gender {
        if p_female >= 0.5 {
            Gender::Female
        } else {
            Gender::Male
        }
    }
}

impl fmt::Display for Gender {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

/// Time-ordered gaze samples of one participant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GazeTrajectory {
    pub participant_id: String,
    pub gender: Gender,
    pub samples: Vec<GazeSample>,
    pub sample_rate_hz: f64,
}

impl GazeTrajectory {
    /// Builds a trajectory, checking ordering and finiteness of every sample.
    pub fn new(
        participant_id: impl Into<String>,
        gender: Gender,
        samples: Vec<GazeSample>,
        sample_rate_hz: f64,
    ) -> Result<Self> {
        let participant_id = participant_id.into();
        if !(sample_rate_hz > 0.0 && sample_rate_hz.is_finite()) {
            return Err(GazeError::InvalidConfig(format!(
                "sample rate must be positive, got {sample_rate_hz}"
            )));
        }
        for (i, s) in samples.iter().enumerate() {
            if !(s.t.is_finite() && s.t >= 0.0 && s.x.is_finite() && s.y.is_finite()) {
                return Err(GazeError::NonFinite(format!(
                    "sample {i} of participant {participant_id}"
                )));
            }
        }
        if samples.windows(2).any(|w| w[1].t <= w[0].t) {
            return Err(GazeError::InvalidConfig(format!(
                "samples of participant {participant_id} are not strictly increasing in time"
            )));
        }
        Ok(GazeTrajectory {
            participant_id,
            gender,
            samples,
            sample_rate_hz,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn sample_period_ms(&self) -> f64 {
        1000.0 / self.sample_rate_hz
    }

    pub fn timestamps(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }

    pub fn xs(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.x).collect()
    }

    pub fn ys(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.y).collect()
    }

    /// Duration covered by the samples, counting the final sampling period.
    pub fn duration_ms(&self) -> f64 {
        match (self.samples.first(), self.samples.last()) {
            (Some(a), Some(b)) => b.t - a.t + self.sample_period_ms(),
            _ => 0.0,
        }
    }

    /// Same trajectory with positions replaced; timestamps kept.
    pub fn with_positions(&self, xs: &[f64], ys: &[f64]) -> GazeTrajectory {
        let samples = self
            .samples
            .iter()
            .zip(xs.iter().zip(ys))
            .map(|(s, (&x, &y))| GazeSample { t: s.t, x, y })
            .collect();
        GazeTrajectory {
            participant_id: self.participant_id.clone(),
            gender: self.gender,
            samples,
            sample_rate_hz: self.sample_rate_hz,
        }
    }
}

/// Orders identifiers numerically when both parse as integers, lexically otherwise.
pub(crate) fn natural_cmp(a: &str, b: &str) -> Ordering {
    match (a.parse::<i64>(), b.parse::<i64>()) {
        (Ok(x), Ok(y)) => x.cmp(&y).then_with(|| a.cmp(b)),
        _ => a.cmp(b),
    }
}

/// Concatenates trials onto one continuous timeline.
///
/// The first trial keeps its timestamps. Each later trial is shifted so that
/// its first sample lands one sampling period after the last emitted sample.
/// Samples at or beyond `cap_ms` after the first sample are dropped.
#[allow(clippy::neg_cmp_op_on_partial_ord)] // NaN must fail the checks
pub fn concat_trials(trials: &[Vec<GazeSample>], cap_ms: f64, sample_rate_hz: f64) -> Result<Vec<GazeSample>> {
    if trials.is_empty() {
        return Err(GazeError::EmptyTrialList);
    }
    if !(sample_rate_hz > 0.0) {
        return Err(GazeError::InvalidConfig(format!(
            "sample rate must be positive, got {sample_rate_hz}"
        )));
    }
    if !(cap_ms > 0.0) {
        return Err(GazeError::InvalidConfig(format!(
            "duration cap must be positive, got {cap_ms}"
        )));
    }
    if trials.iter().any(|t| t.is_empty()) {
        return Err(GazeError::InvalidConfig("trial with no samples".into()));
    }
    let period = 1000.0 / sample_rate_hz;
    let t0 = trials[0][0].t;
    let limit = t0 + cap_ms;
    let mut out: Vec<GazeSample> = Vec::with_capacity(trials.iter().map(Vec::len).sum());

    'trials: for trial in trials {
        let shift = match out.last() {
            Some(last) => last.t + period - trial[0].t,
            None => 0.0,
        };
        for s in trial {
            let t = s.t + shift;
            if t >= limit {
                break 'trials;
            }
            out.push(GazeSample { t, x: s.x, y: s.y });
        }
    }
    Ok(out)
}
