//! Per-participant feature vectors for the fixation and saccade channels,
//! the six-feature comparison set, and ANOVA-based ranking.

mod anova;
mod sota;
pub mod stats;
mod table;

use std::f64::consts::PI;
use std::sync::LazyLock;

use serde::{Deserialize, Serialize};

use crate::error::{GazeError, Result};
use crate::ingest::GazeTrajectory;
use crate::segmentation::{Segment, SegmentKind};
use crate::signal::KinematicSeries;

pub use anova::{anova_f, anova_rank, select_top_k, AnovaRanking};
pub use sota::{extract_sota_features, DensityGrid};
pub use table::{FeatureRow, FeatureTable};

use stats::{mean, summarize, Summary};

/// Feature channel. Fixation and saccade channels feed separate classifiers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    Fixation,
    Saccade,
    Sota,
}

impl Channel {
    pub fn name(self) -> &'static str {
        match self {
            Channel::Fixation => "fixation",
            Channel::Saccade => "saccade",
            Channel::Sota => "sota",
        }
    }

    /// Feature names in catalog order.
    pub fn catalog(self) -> &'static [String] {
        match self {
            Channel::Fixation => &FIXATION_CATALOG,
            Channel::Saccade => &SACCADE_CATALOG,
            Channel::Sota => &SOTA_CATALOG,
        }
    }
}

/// How sample statistics are aggregated across a channel's segments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Aggregation {
    /// Statistics over all samples of all segments of the channel.
    #[default]
    Pooled,
    /// Statistics per segment, averaged over segments.
    PerSegmentMean,
}

/// Kinematic quantities summarized by the catalog, in catalog order.
pub const KINEMATIC_QUANTITIES: [&str; 6] = [
    "angular_velocity",
    "angular_velocity_x",
    "angular_velocity_y",
    "angular_acceleration",
    "angular_acceleration_x",
    "angular_acceleration_y",
];

/// Segment-level aggregates shared by both channels.
pub const SEGMENT_FEATURES: [&str; 5] = [
    "duration",
    "dispersion",
    "path_length",
    "distance_to_previous",
    "angle_to_previous",
];

pub const SACCADE_ONLY_FEATURES: [&str; 2] = ["saccade_amplitude", "saccade_ratio"];

pub const SOTA_FEATURES: [&str; 6] = [
    "fixation_duration",
    "spatial_density",
    "rfdsd",
    "saccade_count",
    "saccade_amplitude",
    "path_length",
];

fn stat_names() -> Vec<String> {
    KINEMATIC_QUANTITIES
        .iter()
        .flat_map(|q| Summary::FIELDS.iter().map(move |s| format!("{s}_{q}")))
        .collect()
}

static FIXATION_CATALOG: LazyLock<Vec<String>> = LazyLock::new(|| {
    let mut v = stat_names();
    v.extend(SEGMENT_FEATURES.iter().map(|s| s.to_string()));
    v
});

static SACCADE_CATALOG: LazyLock<Vec<String>> = LazyLock::new(|| {
    let mut v = FIXATION_CATALOG.clone();
    v.extend(SACCADE_ONLY_FEATURES.iter().map(|s| s.to_string()));
    v
});

static SOTA_CATALOG: LazyLock<Vec<String>> = LazyLock::new(|| SOTA_FEATURES.iter().map(|s| s.to_string()).collect());

/// Feature values of one participant in the channel's catalog order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub channel: Channel,
    pub values: Vec<f64>,
}

impl FeatureVector {
    pub fn names(&self) -> &'static [String] {
        self.channel.catalog()
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.names().iter().position(|n| n == name).map(|i| self.values[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.names().iter().map(String::as_str).zip(self.values.iter().copied())
    }
}

/// Geometry of a single segment in pixel space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentShape {
    pub centroid: (f64, f64),
    pub dispersion: f64,
    pub path_length: f64,
}

pub fn segment_shape(traj: &GazeTrajectory, seg: &Segment) -> SegmentShape {
    let pts = &traj.samples[seg.range()];
    let n = pts.len() as f64;
    let (mut sx, mut sy) = (0.0, 0.0);
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for p in pts {
        sx += p.x;
        sy += p.y;
        x0 = x0.min(p.x);
        x1 = x1.max(p.x);
        y0 = y0.min(p.y);
        y1 = y1.max(p.y);
    }
    let path_length = pts.windows(2).map(|w| (w[1].x - w[0].x).hypot(w[1].y - w[0].y)).sum();
    SegmentShape {
        centroid: (sx / n, sy / n),
        dispersion: (x1 - x0) + (y1 - y0),
        path_length,
    }
}

/// Angle of the vector `from -> to`, in (-pi, pi].
pub fn heading(from: (f64, f64), to: (f64, f64)) -> f64 {
    let a = (to.1 - from.1).atan2(to.0 - from.0);
    if a <= -PI {
        PI
    } else {
        a
    }
}

/// Angular distance in degrees between a saccade's first and last samples.
pub fn saccade_amplitude_deg(traj: &GazeTrajectory, seg: &Segment, deg_per_px: (f64, f64)) -> f64 {
    let a = traj.samples[seg.start_idx];
    let b = traj.samples[seg.end_idx];
    ((b.x - a.x) * deg_per_px.0).hypot((b.y - a.y) * deg_per_px.1)
}

/// Inputs shared by the channel extractors for one participant.
///
/// `traj` is the trajectory the kinematics were computed from (normally
/// the smoothed one) and `segments` its full I-VT segmentation.
#[derive(Debug, Clone, Copy)]
pub struct ParticipantView<'a> {
    pub traj: &'a GazeTrajectory,
    pub series: &'a KinematicSeries,
    pub segments: &'a [Segment],
    pub deg_per_px: (f64, f64),
}

impl ParticipantView<'_> {
    pub fn segments_of(&self, kind: SegmentKind) -> impl Iterator<Item = &Segment> {
        self.segments.iter().filter(move |s| s.kind == kind)
    }
}

fn quantity(series: &KinematicSeries, index: usize) -> &[f64] {
    match index {
        0 => &series.v,
        1 => &series.vx,
        2 => &series.vy,
        3 => &series.a,
        4 => &series.ax,
        _ => &series.ay,
    }
}

/// Feature vector of the fixation or saccade channel.
pub fn extract_channel_features(
    view: &ParticipantView<'_>,
    kind: SegmentKind,
    aggregation: Aggregation,
) -> Result<FeatureVector> {
    let segs: Vec<&Segment> = view.segments_of(kind).collect();
    if segs.is_empty() {
        return Err(GazeError::EmptyChannel { channel: kind.name() });
    }
    let channel = match kind {
        SegmentKind::Fixation => Channel::Fixation,
        SegmentKind::Saccade => Channel::Saccade,
    };
    let mut values = Vec::with_capacity(channel.catalog().len());

    for q in 0..KINEMATIC_QUANTITIES.len() {
        let series = quantity(view.series, q);
        let summary = match aggregation {
            Aggregation::Pooled => {
                let pooled: Vec<f64> = segs.iter().flat_map(|s| series[s.range()].iter().copied()).collect();
                summarize(&pooled).as_array()
            }
            Aggregation::PerSegmentMean => {
                let mut acc = [0.0; 7];
                for s in &segs {
                    for (a, v) in acc.iter_mut().zip(summarize(&series[s.range()]).as_array()) {
                        *a += v;
                    }
                }
                acc.map(|a| a / segs.len() as f64)
            }
        };
        values.extend(summary);
    }

    let shapes: Vec<SegmentShape> = segs.iter().map(|s| segment_shape(view.traj, s)).collect();
    let durations: Vec<f64> = segs.iter().map(|s| s.duration_ms).collect();
    let (distance, angle) = if shapes.len() < 2 {
        (0.0, 0.0)
    } else {
        let pairs = shapes.windows(2);
        let d: Vec<f64> = pairs
            .clone()
            .map(|w| {
                let (a, b) = (w[0].centroid, w[1].centroid);
                (b.0 - a.0).hypot(b.1 - a.1)
            })
            .collect();
        let th: Vec<f64> = pairs.map(|w| heading(w[0].centroid, w[1].centroid)).collect();
        (mean(&d), mean(&th))
    };
    values.push(mean(&durations));
    values.push(mean(&shapes.iter().map(|s| s.dispersion).collect::<Vec<_>>()));
    values.push(mean(&shapes.iter().map(|s| s.path_length).collect::<Vec<_>>()));
    values.push(distance);
    values.push(angle);

    if kind == SegmentKind::Saccade {
        let amplitudes: Vec<f64> = segs
            .iter()
            .map(|s| saccade_amplitude_deg(view.traj, s, view.deg_per_px))
            .collect();
        let ratios: Vec<f64> = segs
            .iter()
            .map(|s| {
                let peak = view.series.v[s.range()]
                    .iter()
                    .copied()
                    .fold(f64::NEG_INFINITY, f64::max);
                peak / (s.duration_ms / 1000.0)
            })
            .collect();
        values.push(mean(&amplitudes));
        values.push(mean(&ratios));
    }

    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(GazeError::NonFinite(format!(
            "{} feature {}",
            channel.name(),
            channel.catalog()[i]
        )));
    }
    debug_assert_eq!(values.len(), channel.catalog().len());
    Ok(FeatureVector { channel, values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{GazeSample, Gender};
    use approx::assert_abs_diff_eq;

    fn view_parts(points: &[(f64, f64)]) -> (GazeTrajectory, KinematicSeries) {
        let samples: Vec<GazeSample> = points
            .iter()
            .enumerate()
            .map(|(i, &(x, y))| GazeSample::new(4.0 * i as f64, x, y))
            .collect();
        let traj = GazeTrajectory::new("p", Gender::Female, samples, 250.0).unwrap();
        let n = points.len();
        let series = KinematicSeries {
            v: vec![10.0; n],
            vx: vec![10.0; n],
            vy: vec![0.0; n],
            a: vec![0.0; n],
            ax: vec![0.0; n],
            ay: vec![0.0; n],
        };
        (traj, series)
    }

    fn seg(kind: SegmentKind, s: usize, e: usize) -> Segment {
        Segment {
            kind,
            start_idx: s,
            end_idx: e,
            duration_ms: 4.0 * (e - s + 1) as f64,
        }
    }

    #[test]
    fn catalog_sizes_and_names() {
        assert_eq!(Channel::Fixation.catalog().len(), 47);
        assert_eq!(Channel::Saccade.catalog().len(), 49);
        assert_eq!(Channel::Sota.catalog().len(), 6);
        for name in [
            "max_angular_velocity",
            "sd_angular_velocity",
            "min_angular_acceleration",
            "mean_angular_velocity",
            "mean_angular_acceleration",
        ] {
            assert!(Channel::Fixation.catalog().iter().any(|n| n == name), "{name}");
        }
        assert!(Channel::Saccade.catalog().iter().any(|n| n == "saccade_ratio"));
    }

    #[test]
    fn constant_fixation_velocity() {
        let (traj, series) = view_parts(&[(0.0, 0.0); 30]);
        let segs = [seg(SegmentKind::Fixation, 0, 29)];
        let view = ParticipantView {
            traj: &traj,
            series: &series,
            segments: &segs,
            deg_per_px: (0.03, 0.03),
        };
        let f = extract_channel_features(&view, SegmentKind::Fixation, Aggregation::Pooled).unwrap();
        for stat in ["mean", "median", "max", "min"] {
            assert_eq!(f.get(&format!("{stat}_angular_velocity")), Some(10.0));
        }
        assert_eq!(f.get("sd_angular_velocity"), Some(0.0));
        assert_eq!(f.get("skewness_angular_velocity"), Some(0.0));
        assert_eq!(f.get("kurtosis_angular_velocity"), Some(0.0));
    }

    #[test]
    fn saccade_ratio_is_peak_over_duration() {
        let (traj, mut series) = view_parts(&[(0.0, 0.0); 5]);
        series.v = vec![50.0, 150.0, 300.0, 120.0, 40.0];
        let segs = [seg(SegmentKind::Saccade, 0, 4)];
        assert_eq!(segs[0].duration_ms, 20.0);
        let view = ParticipantView {
            traj: &traj,
            series: &series,
            segments: &segs,
            deg_per_px: (0.03, 0.03),
        };
        let f = extract_channel_features(&view, SegmentKind::Saccade, Aggregation::Pooled).unwrap();
        assert_abs_diff_eq!(f.get("saccade_ratio").unwrap(), 15_000.0, epsilon = 1e-9);
    }

    #[test]
    fn distance_and_angle_between_fixations() {
        let mut pts = vec![(0.0, 0.0); 10];
        pts.extend([(50.0, 0.0); 2]);
        pts.extend([(100.0, 0.0); 10]);
        let (traj, series) = view_parts(&pts);
        let segs = [
            seg(SegmentKind::Fixation, 0, 9),
            seg(SegmentKind::Saccade, 10, 11),
            seg(SegmentKind::Fixation, 12, 21),
        ];
        let view = ParticipantView {
            traj: &traj,
            series: &series,
            segments: &segs,
            deg_per_px: (0.03, 0.03),
        };
        let f = extract_channel_features(&view, SegmentKind::Fixation, Aggregation::Pooled).unwrap();
        assert_abs_diff_eq!(f.get("distance_to_previous").unwrap(), 100.0, epsilon = 1e-12);
        assert_abs_diff_eq!(f.get("angle_to_previous").unwrap(), 0.0, epsilon = 1e-12);
        assert_eq!(f.get("dispersion"), Some(0.0));
    }

    #[test]
    fn empty_channel_is_an_error() {
        let (traj, series) = view_parts(&[(0.0, 0.0); 5]);
        let segs = [seg(SegmentKind::Fixation, 0, 4)];
        let view = ParticipantView {
            traj: &traj,
            series: &series,
            segments: &segs,
            deg_per_px: (0.03, 0.03),
        };
        assert!(matches!(
            extract_channel_features(&view, SegmentKind::Saccade, Aggregation::Pooled),
            Err(GazeError::EmptyChannel { channel: "saccade" })
        ));
    }

    #[test]
    fn heading_range() {
        assert_eq!(heading((0.0, 0.0), (-1.0, 0.0)), PI);
        assert_eq!(heading((0.0, 0.0), (-1.0, -0.0)), PI);
        assert_abs_diff_eq!(heading((0.0, 0.0), (0.0, 1.0)), PI / 2.0);
    }

    #[test]
    fn pooled_sd_equals_direct_sd() {
        let pts: Vec<(f64, f64)> = (0..40).map(|i| (i as f64, 0.0)).collect();
        let (traj, mut series) = view_parts(&pts);
        series.v = (0..40).map(|i| ((i * 37) % 11) as f64 + 0.25 * i as f64).collect();
        let segs = [
            seg(SegmentKind::Fixation, 0, 12),
            seg(SegmentKind::Saccade, 13, 17),
            seg(SegmentKind::Fixation, 18, 39),
        ];
        let view = ParticipantView {
            traj: &traj,
            series: &series,
            segments: &segs,
            deg_per_px: (0.03, 0.03),
        };
        let f = extract_channel_features(&view, SegmentKind::Fixation, Aggregation::Pooled).unwrap();
        let pooled: Vec<f64> = series.v[0..=12].iter().chain(&series.v[18..=39]).copied().collect();
        assert_abs_diff_eq!(
            f.get("sd_angular_velocity").unwrap(),
            stats::sample_sd(&pooled),
            epsilon = 1e-12
        );
        let per_seg = extract_channel_features(&view, SegmentKind::Fixation, Aggregation::PerSegmentMean).unwrap();
        let expected = (stats::mean(&series.v[0..=12]) + stats::mean(&series.v[18..=39])) / 2.0;
        assert_abs_diff_eq!(per_seg.get("mean_angular_velocity").unwrap(), expected, epsilon = 1e-12);
    }
}
