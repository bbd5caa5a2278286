use serde::{Deserialize, Serialize};

use crate::error::{GazeError, Result};
use crate::ingest::ScreenGeometry;
use crate::segmentation::SegmentKind;

use super::{saccade_amplitude_deg, segment_shape, Channel, FeatureVector, ParticipantView};

/// Grid laid over the whole screen for the spatial-density feature.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DensityGrid {
    pub cells_per_side: usize,
}

impl Default for DensityGrid {
    fn default() -> Self {
        DensityGrid { cells_per_side: 8 }
    }
}

impl DensityGrid {
    fn cell(&self, geometry: &ScreenGeometry, x: f64, y: f64) -> (usize, usize) {
        let n = self.cells_per_side;
        let idx = |v: f64, extent: f64| (((v / extent) * n as f64).floor().max(0.0) as usize).min(n - 1);
        (idx(x, geometry.width_px), idx(y, geometry.height_px))
    }
}

/// The six comparison features: mean fixation duration (ms), spatial density,
/// fixation/saccade duration ratio, saccade count, mean saccade amplitude
/// (deg) and total path length (px).
pub fn extract_sota_features(
    view: &ParticipantView<'_>,
    geometry: &ScreenGeometry,
    grid: &DensityGrid,
) -> Result<FeatureVector> {
    if grid.cells_per_side == 0 {
        return Err(GazeError::InvalidConfig("density grid needs at least one cell".into()));
    }
    let fixations: Vec<_> = view.segments_of(SegmentKind::Fixation).collect();
    let saccades: Vec<_> = view.segments_of(SegmentKind::Saccade).collect();
    if fixations.is_empty() {
        return Err(GazeError::EmptyChannel { channel: "fixation" });
    }
    if saccades.is_empty() {
        return Err(GazeError::EmptyChannel { channel: "saccade" });
    }

    let fix_total: f64 = fixations.iter().map(|s| s.duration_ms).sum();
    let sac_total: f64 = saccades.iter().map(|s| s.duration_ms).sum();

    let mut occupied = vec![false; grid.cells_per_side * grid.cells_per_side];
    for s in &fixations {
        let (cx, cy) = segment_shape(view.traj, s).centroid;
        let (i, j) = grid.cell(geometry, cx, cy);
        occupied[j * grid.cells_per_side + i] = true;
    }
    let density = occupied.iter().filter(|&&o| o).count() as f64 / occupied.len() as f64;

    let amplitude = saccades
        .iter()
        .map(|s| saccade_amplitude_deg(view.traj, s, view.deg_per_px))
        .sum::<f64>()
        / saccades.len() as f64;

    let path_length: f64 = view
        .traj
        .samples
        .windows(2)
        .map(|w| (w[1].x - w[0].x).hypot(w[1].y - w[0].y))
        .sum();

    Ok(FeatureVector {
        channel: Channel::Sota,
        values: vec![
            fix_total / fixations.len() as f64,
            density,
            fix_total / sac_total,
            saccades.len() as f64,
            amplitude,
            path_length,
        ],
    })
}
