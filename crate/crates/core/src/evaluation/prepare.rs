use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{GazeError, Result};
use crate::features::{
    extract_channel_features, extract_sota_features, saccade_amplitude_deg, segment_shape, Aggregation, Channel,
    DensityGrid, FeatureTable, FeatureVector, ParticipantView,
};
use crate::ingest::{GazeTrajectory, Gender, ScreenGeometry};
use crate::segmentation::{segment_series, select_vt, IvtParams, SegmentKind, DEFAULT_MFD_MS, DEFAULT_VT_GRID};
use crate::signal::{deg_per_px, kinematics, smooth_trajectory, SmoothingConfig};

/// Everything between raw trajectories and feature vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub smoothing: SmoothingConfig,
    pub geometry: ScreenGeometry,
    /// Fixed velocity threshold in deg/s; `None` selects one from `vt_grid`.
    pub vt: Option<f64>,
    pub vt_grid: Vec<f64>,
    pub mfd_ms: f64,
    pub aggregation: Aggregation,
    pub density_grid: DensityGrid,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            smoothing: SmoothingConfig::default(),
            geometry: ScreenGeometry::default(),
            vt: None,
            vt_grid: DEFAULT_VT_GRID.to_vec(),
            mfd_ms: DEFAULT_MFD_MS,
            aggregation: Aggregation::default(),
            density_grid: DensityGrid::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreparedParticipant {
    pub id: String,
    pub gender: Gender,
    /// `None` when the participant has no segment of that kind.
    pub fixation: Option<FeatureVector>,
    pub saccade: Option<FeatureVector>,
    pub sota: Option<FeatureVector>,
    pub path_length_px: f64,
    pub mean_saccade_amplitude_deg: Option<f64>,
    pub fixation_centroids: Vec<(f64, f64)>,
}

impl PreparedParticipant {
    pub fn vector(&self, channel: Channel) -> Option<&FeatureVector> {
        match channel {
            Channel::Fixation => self.fixation.as_ref(),
            Channel::Saccade => self.saccade.as_ref(),
            Channel::Sota => self.sota.as_ref(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreparedCohort {
    pub vt: f64,
    pub mfd_ms: f64,
    pub participants: Vec<PreparedParticipant>,
}

impl PreparedCohort {
    /// Participants that have every listed channel, in cohort order.
    pub fn eligible(&self, channels: &[Channel]) -> Vec<&PreparedParticipant> {
        self.participants
            .iter()
            .filter(|p| channels.iter().all(|&c| p.vector(c).is_some()))
            .collect()
    }

    /// Full-catalog table of a channel over participants that have it.
    pub fn table(&self, channel: Channel) -> Result<FeatureTable> {
        FeatureTable::from_vectors(
            channel,
            self.participants
                .iter()
                .filter_map(|p| p.vector(channel).map(|v| (p.id.as_str(), p.gender, v))),
        )
    }
}

fn optional(r: Result<FeatureVector>, id: &str) -> Result<Option<FeatureVector>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(GazeError::EmptyChannel { channel }) => {
            log::warn!("participant {id} has no {channel} segments");
            Ok(None)
        }
        Err(e) => Err(e),
    }
}

/// Smooths, segments and featurizes a cohort. The velocity threshold is
/// chosen once over the whole cohort unless fixed in the config; selection
/// never looks at labels.
pub fn prepare_cohort(cohort: &[GazeTrajectory], config: &PipelineConfig) -> Result<PreparedCohort> {
    config.smoothing.validate()?;
    config.geometry.validate()?;
    if cohort.is_empty() {
        return Err(GazeError::InsufficientData("empty cohort".into()));
    }
    let dpp = deg_per_px(&config.geometry);
    let staged: Vec<(GazeTrajectory, _, Vec<f64>)> = cohort
        .par_iter()
        .map(|traj| {
            let smooth = smooth_trajectory(traj, &config.smoothing)?;
            let series = kinematics(&smooth, &config.geometry)?;
            let t = smooth.timestamps();
            Ok((smooth, series, t))
        })
        .collect::<Result<_>>()?;

    let vt = match config.vt {
        Some(vt) => vt,
        None => {
            let pairs: Vec<(&[f64], &[f64])> = staged.iter().map(|(_, s, t)| (s.v.as_slice(), t.as_slice())).collect();
            select_vt(&pairs, config.mfd_ms, &config.vt_grid)?
        }
    };
    let params = IvtParams::new(vt, config.mfd_ms)?;

    let participants = staged
        .par_iter()
        .map(|(traj, series, t)| {
            let segments = segment_series(series, t, &params);
            let view = ParticipantView {
                traj,
                series,
                segments: &segments,
                deg_per_px: dpp,
            };
            let id = traj.participant_id.as_str();
            let fixation = optional(
                extract_channel_features(&view, SegmentKind::Fixation, config.aggregation),
                id,
            )?;
            let saccade = optional(
                extract_channel_features(&view, SegmentKind::Saccade, config.aggregation),
                id,
            )?;
            let sota = match (&fixation, &saccade) {
                (Some(_), Some(_)) => Some(extract_sota_features(&view, &config.geometry, &config.density_grid)?),
                _ => None,
            };
            let amplitudes: Vec<f64> = view
                .segments_of(SegmentKind::Saccade)
                .map(|s| saccade_amplitude_deg(traj, s, dpp))
                .collect();
            let path_length_px = traj
                .samples
                .windows(2)
                .map(|w| (w[1].x - w[0].x).hypot(w[1].y - w[0].y))
                .sum();
            Ok(PreparedParticipant {
                id: id.to_string(),
                gender: traj.gender,
                fixation,
                saccade,
                sota,
                path_length_px,
                mean_saccade_amplitude_deg: (!amplitudes.is_empty())
                    .then(|| amplitudes.iter().sum::<f64>() / amplitudes.len() as f64),
                fixation_centroids: view
                    .segments_of(SegmentKind::Fixation)
                    .map(|s| segment_shape(traj, s).centroid)
                    .collect(),
            })
        })
        .collect::<Result<_>>()?;

    Ok(PreparedCohort {
        vt,
        mfd_ms: config.mfd_ms,
        participants,
    })
}
