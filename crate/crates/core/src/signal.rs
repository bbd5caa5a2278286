//! Savitzky-Golay smoothing and angular kinematics.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{GazeError, Result};
use crate::ingest::{GazeTrajectory, ScreenGeometry};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SmoothingConfig {
    pub poly_order: usize,
    pub frame_size: usize,
}

impl Default for SmoothingConfig {
    fn default() -> Self {
        SmoothingConfig {
            poly_order: 6,
            frame_size: 15,
        }
    }
}

impl SmoothingConfig {
    pub fn new(poly_order: usize, frame_size: usize) -> Result<Self> {
        let c = SmoothingConfig { poly_order, frame_size };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.frame_size % 2 == 0 {
            return Err(GazeError::InvalidConfig(format!(
                "frame size must be odd, got {}",
                self.frame_size
            )));
        }
        if self.frame_size <= self.poly_order {
            return Err(GazeError::InvalidConfig(format!(
                "frame size {} must exceed polynomial order {}",
                self.frame_size, self.poly_order
            )));
        }
        Ok(())
    }
}

/// Weights that evaluate, at window offset `eval_at`, the least-squares
/// polynomial of degree `order` fitted to a window of `frame` samples.
///
/// `eval_at` is measured in samples from the first window position, so the
/// centred filter uses `eval_at = frame / 2`.
pub fn savgol_weights(frame: usize, order: usize, eval_at: usize) -> Vec<f64> {
    debug_assert!(frame > order && eval_at < frame);
    // positions relative to the evaluation point, scaled for conditioning;
    // the fitted value there is the constant coefficient regardless of scale
    let scale = (frame / 2).max(1) as f64;
    let design = DMatrix::from_fn(frame, order + 1, |i, k| {
        ((i as f64 - eval_at as f64) / scale).powi(k as i32)
    });
    // h = A (A^T A)^-1 e0 = Q R^-T e0
    let qr = design.qr();
    let r = qr.r();
    let q = qr.q();
    let mut e0 = DVector::zeros(order + 1);
    e0[0] = 1.0;
    let z = r
        .transpose()
        .solve_lower_triangular(&e0)
        .expect("Vandermonde design has full column rank");
    (q * z).iter().copied().collect()
}

/// Savitzky-Golay filter applied to one channel.
///
/// Interior samples use the centred window. The first and last `frame / 2`
/// samples are evaluated on the polynomial fitted to the first or last full
/// window, so the output has the input's length.
pub fn savgol_smooth(values: &[f64], config: &SmoothingConfig) -> Result<Vec<f64>> {
    config.validate()?;
    let frame = config.frame_size;
    let n = values.len();
    if n < frame {
        return Err(GazeError::TooShortToFilter { len: n, frame });
    }
    let half = frame / 2;
    let dot =
        |w: &[f64], start: usize| -> f64 { w.iter().zip(&values[start..start + frame]).map(|(a, b)| a * b).sum() };

    let mut out = vec![0.0; n];
    let center = savgol_weights(frame, config.poly_order, half);
    for (i, o) in out.iter_mut().enumerate().take(n - half).skip(half) {
        *o = dot(&center, i - half);
    }
    for j in 0..half {
        let w = savgol_weights(frame, config.poly_order, j);
        out[j] = dot(&w, 0);
        let w = savgol_weights(frame, config.poly_order, frame - 1 - j);
        out[n - 1 - j] = dot(&w, n - frame);
    }
    Ok(out)
}

/// Smooths the x and y channels of a trajectory independently.
pub fn smooth_trajectory(traj: &GazeTrajectory, config: &SmoothingConfig) -> Result<GazeTrajectory> {
    let xs = savgol_smooth(&traj.xs(), config)?;
    let ys = savgol_smooth(&traj.ys(), config)?;
    Ok(traj.with_positions(&xs, &ys))
}

/// Degrees of visual angle subtended by one pixel at screen centre, per axis.
pub fn deg_per_px(geometry: &ScreenGeometry) -> (f64, f64) {
    let pitch = geometry.pixel_pitch_cm();
    let k = (pitch / geometry.viewing_distance_cm).atan().to_degrees();
    (k, k)
}

/// Per-sample angular kinematics, index-aligned with the trajectory.
///
/// Velocities are in deg/s, accelerations in deg/s^2. `a` is the signed rate
/// of change of the speed `v`; `ax`/`ay` differentiate the signed components.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KinematicSeries {
    pub v: Vec<f64>,
    pub vx: Vec<f64>,
    pub vy: Vec<f64>,
    pub a: Vec<f64>,
    pub ax: Vec<f64>,
    pub ay: Vec<f64>,
}

impl KinematicSeries {
    pub fn len(&self) -> usize {
        self.v.len()
    }

    pub fn is_empty(&self) -> bool {
        self.v.is_empty()
    }
}

/// Forward differences; the undefined tail entries repeat the last defined value.
fn forward_diff(values: &[f64], t_ms: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut d: Vec<f64> = (0..n - 1)
        .map(|i| (values[i + 1] - values[i]) / ((t_ms[i + 1] - t_ms[i]) / 1000.0))
        .collect();
    let last = *d.last().expect("n >= 2");
    d.resize(n, last);
    d
}

/// Angular velocity and acceleration from pixel positions by forward differences.
pub fn kinematics(traj: &GazeTrajectory, geometry: &ScreenGeometry) -> Result<KinematicSeries> {
    let n = traj.len();
    if n < 3 {
        return Err(GazeError::TrajectoryTooShort { len: n, min: 3 });
    }
    let (kx, ky) = deg_per_px(geometry);
    let t = traj.timestamps();
    let xdeg: Vec<f64> = traj.samples.iter().map(|s| s.x * kx).collect();
    let ydeg: Vec<f64> = traj.samples.iter().map(|s| s.y * ky).collect();

    let vx = forward_diff(&xdeg, &t);
    let vy = forward_diff(&ydeg, &t);
    let v: Vec<f64> = vx.iter().zip(&vy).map(|(a, b)| a.hypot(*b)).collect();

    // velocities are defined on 0..n-1; differentiate those and pad again
    let defined = n - 1;
    let pad = |d: Vec<f64>| -> Vec<f64> {
        let mut d = d;
        let last = *d.last().expect("n >= 3");
        d.resize(n, last);
        d
    };
    let a = pad(forward_diff(&v[..defined], &t[..defined]));
    let ax = pad(forward_diff(&vx[..defined], &t[..defined]));
    let ay = pad(forward_diff(&vy[..defined], &t[..defined]));

    Ok(KinematicSeries { v, vx, vy, a, ax, ay })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{GazeSample, Gender};
    use approx::assert_abs_diff_eq;

    fn traj(points: &[(f64, f64)]) -> GazeTrajectory {
        let samples = points
            .iter()
            .enumerate()
            .map(|(i, &(x, y))| GazeSample::new(4.0 * i as f64, x, y))
            .collect();
        GazeTrajectory::new("p", Gender::Female, samples, 250.0).unwrap()
    }

    /// Independent least-squares oracle: normal equations solved by
    /// Gauss-Jordan elimination on raw (unscaled) offsets.
    fn normal_equation_weights(frame: usize, order: usize, eval_at: usize) -> Vec<f64> {
        let m = order + 1;
        let z: Vec<f64> = (0..frame).map(|i| i as f64 - eval_at as f64).collect();
        let mut ata = vec![vec![0.0; m]; m];
        for (r, row) in ata.iter_mut().enumerate() {
            for (c, cell) in row.iter_mut().enumerate() {
                *cell = z.iter().map(|zi| zi.powi((r + c) as i32)).sum();
            }
        }
        // invert by Gauss-Jordan
        let mut inv = vec![vec![0.0; m]; m];
        for (i, row) in inv.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        for col in 0..m {
            let piv = (col..m)
                .max_by(|&a, &b| ata[a][col].abs().total_cmp(&ata[b][col].abs()))
                .unwrap();
            ata.swap(col, piv);
            inv.swap(col, piv);
            let d = ata[col][col];
            for k in 0..m {
                ata[col][k] /= d;
                inv[col][k] /= d;
            }
            for r in 0..m {
                if r != col {
                    let f = ata[r][col];
                    for k in 0..m {
                        ata[r][k] -= f * ata[col][k];
                        inv[r][k] -= f * inv[col][k];
                    }
                }
            }
        }
        // h_i = sum_k inv[0][k] z_i^k
        z.iter()
            .map(|zi| (0..m).map(|k| inv[0][k] * zi.powi(k as i32)).sum())
            .collect()
    }

    #[test]
    fn sg_2_5_center_coefficients() {
        let w = savgol_weights(5, 2, 2);
        let expected = [-3.0, 12.0, 17.0, 12.0, -3.0].map(|c| c / 35.0);
        for (a, b) in w.iter().zip(expected) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-12);
        }
        let oracle = normal_equation_weights(5, 2, 2);
        for (a, b) in w.iter().zip(oracle) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn edge_weights_match_oracle() {
        for eval_at in 0..7 {
            let w = savgol_weights(7, 3, eval_at);
            let o = normal_equation_weights(7, 3, eval_at);
            for (a, b) in w.iter().zip(o) {
                assert_abs_diff_eq!(*a, b, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn impulse_response_center_value() {
        let mut s = vec![0.0; 15];
        s[7] = 1.0;
        let out = savgol_smooth(&s, &SmoothingConfig::new(2, 5).unwrap()).unwrap();
        assert_abs_diff_eq!(out[7], 17.0 / 35.0, epsilon = 1e-12);
    }

    #[test]
    fn constant_sequence_unchanged() {
        let s = vec![5.0; 40];
        let out = savgol_smooth(&s, &SmoothingConfig::default()).unwrap();
        for v in out {
            assert_abs_diff_eq!(v, 5.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn sixth_degree_polynomial_reproduced() {
        let p = |t: f64| 3.0 * t.powi(6) - t * t + 4.0;
        // centred grid keeps magnitudes moderate
        let s: Vec<f64> = (-15..=15).map(|i| p(i as f64 / 10.0)).collect();
        let out = savgol_smooth(&s, &SmoothingConfig::default()).unwrap();
        for (a, b) in out.iter().zip(&s) {
            assert_abs_diff_eq!(*a, *b, epsilon = 1e-8);
        }
        // integer grid, interior points only
        let s: Vec<f64> = (-8..=8).map(|i| p(i as f64)).collect();
        let out = savgol_smooth(&s, &SmoothingConfig::default()).unwrap();
        for i in 7..=9 {
            assert_abs_diff_eq!(out[i], s[i], epsilon = 1e-8);
        }
    }

    #[test]
    fn too_short_to_filter() {
        let err = savgol_smooth(&[1.0; 14], &SmoothingConfig::default());
        assert!(matches!(err, Err(GazeError::TooShortToFilter { len: 14, frame: 15 })));
    }

    #[test]
    fn even_frame_rejected() {
        assert!(SmoothingConfig::new(2, 6).is_err());
        assert!(SmoothingConfig::new(7, 7).is_err());
    }

    #[test]
    fn reference_screen_conversion() {
        let (kx, ky) = deg_per_px(&ScreenGeometry::default());
        let pitch = 48.26 / (1280.0f64.powi(2) + 1024.0f64.powi(2)).sqrt();
        let expected = (pitch / 57.0).atan().to_degrees();
        assert_abs_diff_eq!(kx, expected, epsilon = 1e-15);
        assert_eq!(kx, ky);
        assert!((kx - 0.0296).abs() < 5e-5);
    }

    #[test]
    fn doubling_distance_halves_factor() {
        let g = ScreenGeometry::default();
        let far = ScreenGeometry {
            viewing_distance_cm: 2.0 * g.viewing_distance_cm,
            ..g
        };
        let (k1, _) = deg_per_px(&g);
        let (k2, _) = deg_per_px(&far);
        assert!((k2 / k1 - 0.5).abs() / 0.5 < 1e-3);
    }

    #[test]
    fn stationary_gaze_has_no_motion() {
        let k = kinematics(&traj(&[(3.0, 4.0); 10]), &ScreenGeometry::default()).unwrap();
        assert!(k.v.iter().chain(&k.a).chain(&k.ax).all(|&v| v == 0.0));
    }

    #[test]
    fn uniform_drift_velocity() {
        // choose a geometry whose factor is exactly representable enough to check 75 deg/s
        let pts: Vec<(f64, f64)> = (0..20).map(|i| (10.0 * i as f64, 0.0)).collect();
        let g = ScreenGeometry::default();
        let (kx, _) = deg_per_px(&g);
        let k = kinematics(&traj(&pts), &g).unwrap();
        let expected = kx * 10.0 / 0.004;
        for (&v, &a) in k.v.iter().zip(&k.a) {
            assert_abs_diff_eq!(v, expected, epsilon = 1e-9);
            assert_abs_diff_eq!(a, 0.0, epsilon = 1e-6);
        }
        // with kx = 0.03 the speed would be 75 deg/s
        assert_abs_diff_eq!(expected / kx * 0.03, 75.0, epsilon = 1e-9);
    }

    #[test]
    fn piecewise_linear_path_accelerates_once() {
        // 1 px/sample for 6 samples then 3 px/sample
        let mut pts = vec![];
        let mut x = 0.0;
        for i in 0..12 {
            pts.push((x, 0.0));
            x += if i < 5 { 1.0 } else { 3.0 };
        }
        let k = kinematics(&traj(&pts), &ScreenGeometry::default()).unwrap();
        let nonzero: Vec<usize> = (0..k.len()).filter(|&i| k.a[i].abs() > 1e-9).collect();
        assert_eq!(nonzero, vec![4]);
        assert_eq!(k.len(), 12);
    }

    #[test]
    fn too_short_trajectory() {
        assert!(matches!(
            kinematics(&traj(&[(0.0, 0.0), (1.0, 1.0)]), &ScreenGeometry::default()),
            Err(GazeError::TrajectoryTooShort { len: 2, min: 3 })
        ));
    }

    proptest::proptest! {
        #[test]
        fn filter_is_linear(
            a in proptest::collection::vec(-100.0f64..100.0, 30),
            b in proptest::collection::vec(-100.0f64..100.0, 30),
            alpha in -3.0f64..3.0,
            beta in -3.0f64..3.0,
        ) {
            let cfg = SmoothingConfig::default();
            let combo: Vec<f64> = a.iter().zip(&b).map(|(x, y)| alpha * x + beta * y).collect();
            let lhs = savgol_smooth(&combo, &cfg).unwrap();
            let sa = savgol_smooth(&a, &cfg).unwrap();
            let sb = savgol_smooth(&b, &cfg).unwrap();
            for i in 0..30 {
                let rhs = alpha * sa[i] + beta * sb[i];
                proptest::prop_assert!((lhs[i] - rhs).abs() <= 1e-9 * (1.0 + rhs.abs()));
            }
        }

        #[test]
        fn kinematics_equivariance(
            pts in proptest::collection::vec((0.0f64..1000.0, 0.0f64..1000.0), 5..40),
            shift in -500.0f64..500.0,
            scale in 0.2f64..5.0,
        ) {
            let g = ScreenGeometry::default();
            let base = kinematics(&traj(&pts), &g).unwrap();
            let moved: Vec<_> = pts.iter().map(|&(x, y)| (x + shift, y - shift)).collect();
            let scaled: Vec<_> = pts.iter().map(|&(x, y)| (x * scale, y * scale)).collect();
            let flipped: Vec<_> = pts.iter().map(|&(x, y)| (-x, y)).collect();
            let km = kinematics(&traj(&moved), &g).unwrap();
            let ks = kinematics(&traj(&scaled), &g).unwrap();
            let kf = kinematics(&traj(&flipped), &g).unwrap();
            for i in 0..base.len() {
                let tol = 1e-6 * (1.0 + base.v[i].abs() + base.a[i].abs());
                proptest::prop_assert!((km.v[i] - base.v[i]).abs() <= tol);
                proptest::prop_assert!((ks.v[i] - scale * base.v[i]).abs() <= scale * tol);
                proptest::prop_assert!((ks.a[i] - scale * base.a[i]).abs() <= scale * tol * 250.0);
                proptest::prop_assert!((kf.v[i] - base.v[i]).abs() <= tol);
                let speed2 = base.vx[i].powi(2) + base.vy[i].powi(2);
                proptest::prop_assert!((base.v[i].powi(2) - speed2).abs() <= 1e-9 * speed2.max(1e-300));
            }
        }
    }
}
