//! I-VT segmentation into fixations and saccades, and velocity-threshold selection.

use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};

use crate::error::{GazeError, Result};
use crate::signal::KinematicSeries;

/// Default minimum fixation duration, ms.
pub const DEFAULT_MFD_MS: f64 = 100.0;

/// Default candidate thresholds for automatic selection, deg/s.
pub const DEFAULT_VT_GRID: [f64; 11] = [10.0, 15.0, 20.0, 25.0, 30.0, 35.0, 40.0, 45.0, 50.0, 55.0, 60.0];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IvtParams {
    /// Velocity threshold, deg/s.
    pub vt: f64,
    /// Minimum fixation duration, ms.
    pub mfd: f64,
}

impl IvtParams {
    pub fn new(vt: f64, mfd: f64) -> Result<Self> {
        let p = IvtParams { vt, mfd };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.vt > 0.0 && self.vt.is_finite()) {
            return Err(GazeError::InvalidConfig(format!(
                "vt must be positive, got {}",
                self.vt
            )));
        }
        if !(self.mfd >= 0.0 && self.mfd.is_finite()) {
            return Err(GazeError::InvalidConfig(format!("mfd must be >= 0, got {}", self.mfd)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SegmentKind {
    Fixation,
    Saccade,
}

impl SegmentKind {
    pub fn name(self) -> &'static str {
        match self {
            SegmentKind::Fixation => "fixation",
            SegmentKind::Saccade => "saccade",
        }
    }
}

/// A classified run of samples. Indices are inclusive and refer to the
/// trajectory and its kinematic series, which the segment does not own.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub kind: SegmentKind,
    pub start_idx: usize,
    pub end_idx: usize,
    pub duration_ms: f64,
}

impl Segment {
    pub fn range(&self) -> RangeInclusive<usize> {
        self.start_idx..=self.end_idx
    }

    pub fn len(&self) -> usize {
        self.end_idx - self.start_idx + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Duration of samples `start..=end`: up to the next sample's timestamp, or
/// one sampling period past the last sample at the end of the recording.
pub fn run_duration_ms(t: &[f64], start: usize, end: usize) -> f64 {
    if end + 1 < t.len() {
        t[end + 1] - t[start]
    } else {
        t[end] - t[start] + trailing_period(t)
    }
}

fn trailing_period(t: &[f64]) -> f64 {
    match t.len() {
        0 | 1 => 0.0,
        n => t[n - 1] - t[n - 2],
    }
}

/// Identification by velocity threshold.
///
/// Maximal runs with `v < vt` lasting strictly longer than `mfd` become
/// fixations. Everything else is saccade, with adjacent saccade runs merged,
/// so segments alternate in kind and cover every sample exactly once.
pub fn ivt_segment(v: &[f64], t: &[f64], params: &IvtParams) -> Vec<Segment> {
    debug_assert_eq!(v.len(), t.len());
    let n = v.len();
    let mut out: Vec<Segment> = Vec::new();
    let mut push = |kind: SegmentKind, start: usize, end: usize| {
        if let Some(last) = out.last_mut() {
            if last.kind == kind {
                last.end_idx = end;
                last.duration_ms = run_duration_ms(t, last.start_idx, end);
                return;
            }
        }
        out.push(Segment {
            kind,
            start_idx: start,
            end_idx: end,
            duration_ms: run_duration_ms(t, start, end),
        });
    };

    let mut i = 0;
    while i < n {
        let low = v[i] < params.vt;
        let mut j = i;
        while j + 1 < n && (v[j + 1] < params.vt) == low {
            j += 1;
        }
        let kind = if low && run_duration_ms(t, i, j) > params.mfd {
            SegmentKind::Fixation
        } else {
            SegmentKind::Saccade
        };
        push(kind, i, j);
        i = j + 1;
    }
    out
}

/// Convenience wrapper taking a kinematic series.
pub fn segment_series(series: &KinematicSeries, t: &[f64], params: &IvtParams) -> Vec<Segment> {
    ivt_segment(&series.v, t, params)
}

pub fn count_fixations(v: &[f64], t: &[f64], params: &IvtParams) -> usize {
    ivt_segment(v, t, params)
        .iter()
        .filter(|s| s.kind == SegmentKind::Fixation)
        .count()
}

/// Per-participant fixation counts over a threshold grid.
pub fn fixation_count_table(cohort: &[(&[f64], &[f64])], mfd: f64, grid: &[f64]) -> Vec<Vec<usize>> {
    cohort
        .iter()
        .map(|(v, t)| {
            grid.iter()
                .map(|&vt| count_fixations(v, t, &IvtParams { vt, mfd }))
                .collect()
        })
        .collect()
}

/// Picks the velocity threshold from `grid` (ascending).
///
/// Let `M` be the mean over participants of each participant's maximum
/// fixation count across the grid. Among thresholds that give every
/// participant at least one fixation, returns the one whose mean count is
/// nearest `M`, preferring the smaller threshold on ties.
pub fn select_vt(cohort: &[(&[f64], &[f64])], mfd: f64, grid: &[f64]) -> Result<f64> {
    if grid.is_empty() {
        return Err(GazeError::InvalidConfig("velocity-threshold grid is empty".into()));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(GazeError::InvalidConfig(
            "velocity-threshold grid must be ascending".into(),
        ));
    }
    if cohort.is_empty() {
        return Err(GazeError::InsufficientData(
            "no participants for threshold selection".into(),
        ));
    }
    for &vt in grid {
        IvtParams::new(vt, mfd)?;
    }
    let counts = fixation_count_table(cohort, mfd, grid);
    Ok(grid[choose_from_counts(&counts).ok_or(GazeError::NoQualifyingThreshold)?])
}

/// Index of the selected grid column given a participants x grid count table.
pub fn choose_from_counts(counts: &[Vec<usize>]) -> Option<usize> {
    let n = counts.len() as f64;
    let target = counts
        .iter()
        .map(|row| *row.iter().max().unwrap_or(&0) as f64)
        .sum::<f64>()
        / n;
    let width = counts.first().map_or(0, Vec::len);
    let mut best: Option<(usize, f64)> = None;
    for g in 0..width {
        if counts.iter().any(|row| row[g] == 0) {
            continue;
        }
        let mean = counts.iter().map(|row| row[g] as f64).sum::<f64>() / n;
        let gap = (mean - target).abs();
        if best.is_none_or(|(_, b)| gap < b) {
            best = Some((g, gap));
        }
    }
    best.map(|(g, _)| g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn timeline(n: usize) -> Vec<f64> {
        (0..n).map(|i| 4.0 * i as f64).collect()
    }

    /// Reference labeler: per-sample labels, then runs, then relabel and merge.
    pub(super) fn reference_labeler(v: &[f64], t: &[f64], p: &IvtParams) -> Vec<Segment> {
        let n = v.len();
        let mut labels: Vec<SegmentKind> = vec![SegmentKind::Saccade; n];
        let mut runs = Vec::new();
        let mut start = 0;
        for i in 1..=n {
            if i == n || (v[i] < p.vt) != (v[start] < p.vt) {
                runs.push((start, i - 1));
                start = i;
            }
        }
        for (s, e) in runs {
            let dur = if e + 1 < n {
                t[e + 1] - t[s]
            } else {
                t[e] - t[s] + if n > 1 { t[n - 1] - t[n - 2] } else { 0.0 }
            };
            if v[s] < p.vt && dur > p.mfd {
                for l in labels.iter_mut().take(e + 1).skip(s) {
                    *l = SegmentKind::Fixation;
                }
            }
        }
        let mut segs = Vec::new();
        let mut start = 0;
        for i in 1..=n {
            if i == n || labels[i] != labels[start] {
                let e = i - 1;
                let dur = if e + 1 < n {
                    t[e + 1] - t[start]
                } else {
                    t[e] - t[start] + if n > 1 { t[n - 1] - t[n - 2] } else { 0.0 }
                };
                segs.push(Segment {
                    kind: labels[start],
                    start_idx: start,
                    end_idx: e,
                    duration_ms: dur,
                });
                start = i;
            }
        }
        segs
    }

    #[test]
    fn all_slow_is_one_fixation() {
        let t = timeline(250);
        let segs = ivt_segment(&[5.0; 250], &t, &IvtParams::new(20.0, 100.0).unwrap());
        assert_eq!(segs.len(), 1);
        assert_eq!(segs[0].kind, SegmentKind::Fixation);
        assert_eq!((segs[0].start_idx, segs[0].end_idx), (0, 249));
        assert_eq!(segs[0].duration_ms, 1000.0);
    }

    #[test]
    fn all_fast_is_one_saccade() {
        let t = timeline(250);
        let segs = ivt_segment(&[100.0; 250], &t, &IvtParams::new(20.0, 100.0).unwrap());
        assert_eq!(segs.len(), 1);
        assert_eq!(segs[0].kind, SegmentKind::Saccade);
    }

    #[test]
    fn short_slow_run_merges_into_saccade() {
        // 200 ms low, 40 ms high, 60 ms low, 40 ms high at 250 Hz
        let mut v = vec![5.0; 50];
        v.extend([100.0; 10]);
        v.extend([5.0; 15]);
        v.extend([100.0; 10]);
        let t = timeline(v.len());
        let p = IvtParams::new(20.0, 100.0).unwrap();
        let segs = ivt_segment(&v, &t, &p);
        assert_eq!(segs.len(), 2);
        assert_eq!(segs[0].kind, SegmentKind::Fixation);
        assert_eq!(segs[0].duration_ms, 200.0);
        assert_eq!(segs[1].kind, SegmentKind::Saccade);
        assert_eq!(segs[1].duration_ms, 140.0);
        assert_eq!(segs, reference_labeler(&v, &t, &p));
    }

    #[test]
    fn threshold_and_duration_comparisons_are_strict() {
        let t = timeline(50);
        // exactly at threshold is not below it
        let segs = ivt_segment(&[20.0; 50], &t, &IvtParams::new(20.0, 0.0).unwrap());
        assert_eq!(segs[0].kind, SegmentKind::Saccade);
        // 25 samples = 100 ms exactly is not longer than 100 ms
        let mut v = vec![5.0; 25];
        v.extend([90.0; 25]);
        let segs = ivt_segment(&v, &t, &IvtParams::new(20.0, 100.0).unwrap());
        assert_eq!(segs.len(), 1);
        assert_eq!(segs[0].kind, SegmentKind::Saccade);
    }

    #[test]
    fn zero_mfd_makes_every_slow_run_a_fixation() {
        let v = [5.0, 50.0, 5.0, 50.0, 5.0];
        let t = timeline(5);
        let segs = ivt_segment(&v, &t, &IvtParams::new(20.0, 0.0).unwrap());
        assert_eq!(segs.len(), 5);
        assert_eq!(segs.iter().filter(|s| s.kind == SegmentKind::Fixation).count(), 3);
    }

    #[test]
    fn single_participant_selection_is_argmax() {
        // four fixations at vt = 20; none at 10; one merged run at 30
        let mut v = Vec::new();
        for _ in 0..4 {
            v.extend([18.0; 40]);
            v.extend([25.0; 5]);
        }
        let t = timeline(v.len());
        let vt = select_vt(&[(&v, &t)], 100.0, &[10.0, 20.0, 30.0]).unwrap();
        assert_eq!(vt, 20.0);
    }

    #[test]
    fn no_qualifying_threshold() {
        let v = vec![100.0; 100];
        let t = timeline(100);
        assert!(matches!(
            select_vt(&[(&v, &t)], 100.0, &[10.0, 20.0]),
            Err(GazeError::NoQualifyingThreshold)
        ));
    }

    #[test]
    fn grid_must_ascend() {
        let v = vec![1.0; 100];
        let t = timeline(100);
        assert!(select_vt(&[(&v, &t)], 100.0, &[20.0, 10.0]).is_err());
        assert!(select_vt(&[(&v, &t)], 100.0, &[]).is_err());
    }

    #[test]
    fn selection_matches_exhaustive_tabulation() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let series: Vec<Vec<f64>> = (0..6)
            .map(|_| {
                let mut v = Vec::new();
                while v.len() < 2000 {
                    let level: f64 = rng.random_range(2.0..60.0);
                    let len = rng.random_range(5..80);
                    v.extend((0..len).map(|_| level + rng.random_range(-3.0..3.0)));
                }
                v.truncate(2000);
                v
            })
            .collect();
        let t = timeline(2000);
        let cohort: Vec<(&[f64], &[f64])> = series.iter().map(|v| (v.as_slice(), t.as_slice())).collect();
        let grid: Vec<f64> = (1..=10).map(|k| 5.0 * k as f64).collect();

        // exhaustive oracle using the reference labeler
        let p = |vt| IvtParams { vt, mfd: 100.0 };
        let table: Vec<Vec<usize>> = series
            .iter()
            .map(|v| {
                grid.iter()
                    .map(|&vt| {
                        reference_labeler(v, &t, &p(vt))
                            .iter()
                            .filter(|s| s.kind == SegmentKind::Fixation)
                            .count()
                    })
                    .collect()
            })
            .collect();
        let m = table.iter().map(|r| *r.iter().max().unwrap() as f64).sum::<f64>() / 6.0;
        let mut best = None;
        for g in 0..grid.len() {
            if table.iter().all(|r| r[g] > 0) {
                let gap = (table.iter().map(|r| r[g] as f64).sum::<f64>() / 6.0 - m).abs();
                match best {
                    Some((_, b)) if gap >= b => {}
                    _ => best = Some((g, gap)),
                }
            }
        }
        let expected = grid[best.unwrap().0];
        assert_eq!(select_vt(&cohort, 100.0, &grid).unwrap(), expected);
    }

    proptest::proptest! {
        #[test]
        fn matches_reference_and_partitions(
            v in proptest::collection::vec(0.0f64..60.0, 1..200),
            vt in 1.0f64..60.0,
            mfd in 0.0f64..200.0,
        ) {
            let t = timeline(v.len());
            let p = IvtParams::new(vt, mfd).unwrap();
            let segs = ivt_segment(&v, &t, &p);
            proptest::prop_assert_eq!(&segs, &reference_labeler(&v, &t, &p));
            proptest::prop_assert_eq!(segs[0].start_idx, 0);
            proptest::prop_assert_eq!(segs.last().unwrap().end_idx, v.len() - 1);
            for w in segs.windows(2) {
                proptest::prop_assert_eq!(w[0].end_idx + 1, w[1].start_idx);
                proptest::prop_assert_ne!(w[0].kind, w[1].kind);
            }
            for s in segs.iter().filter(|s| s.kind == SegmentKind::Fixation) {
                proptest::prop_assert!(s.duration_ms > mfd);
            }
        }

        #[test]
        fn raising_threshold_never_shrinks_fixation_samples(
            v in proptest::collection::vec(0.0f64..60.0, 1..200),
            vt in 1.0f64..50.0,
            bump in 0.0f64..20.0,
        ) {
            let t = timeline(v.len());
            let fix_samples = |vt: f64| -> usize {
                ivt_segment(&v, &t, &IvtParams { vt, mfd: 40.0 })
                    .iter()
                    .filter(|s| s.kind == SegmentKind::Fixation)
                    .map(Segment::len)
                    .sum()
            };
            proptest::prop_assert!(fix_samples(vt + bump) >= fix_samples(vt));
        }
    }
}
