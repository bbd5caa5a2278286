//! Convex fusion of the fixation and saccade classifier probabilities, and
//! Nelder-Mead tuning of the fusion weight.

use serde::{Deserialize, Serialize};

use crate::classifiers::{complement, stratified_folds, train, ClassifierConfig, Dataset};
use crate::error::{GazeError, Result};
use crate::ingest::Gender;
use crate::rng::{derive_seed, stream_rng};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleWeights {
    pub w_fix: f64,
    pub w_sac: f64,
}

impl EnsembleWeights {
    pub fn equal() -> Self {
        EnsembleWeights { w_fix: 0.5, w_sac: 0.5 }
    }

    /// Weight pair from the fixation share, clamped into [0, 1].
    pub fn from_fix(theta: f64) -> Self {
        let w_fix = if theta.is_nan() { 0.5 } else { theta.clamp(0.0, 1.0) };
        EnsembleWeights {
            w_fix,
            w_sac: 1.0 - w_fix,
        }
    }

    /// Manual pair; must already sum to 1.
    pub fn new(w_fix: f64, w_sac: f64) -> Result<Self> {
        let ok = (0.0..=1.0).contains(&w_fix) && (0.0..=1.0).contains(&w_sac) && (w_fix + w_sac - 1.0).abs() <= 1e-12;
        if !ok {
            return Err(GazeError::InvalidConfig(format!(
                "weights must lie in [0, 1] and sum to 1, got fix {w_fix} sac {w_sac}"
            )));
        }
        Ok(EnsembleWeights { w_fix, w_sac })
    }
}

pub fn fuse(p_fix: f64, p_sac: f64, w: EnsembleWeights) -> f64 {
    w.w_fix * p_fix + w.w_sac * p_sac
}

/// Fraction of rows where the fused prediction matches the label.
pub fn fused_accuracy(p_fix: &[f64], p_sac: &[f64], labels: &[Gender], w: EnsembleWeights) -> f64 {
    let hits = p_fix
        .iter()
        .zip(p_sac)
        .zip(labels)
        .filter(|((&f, &s), &y)| Gender::from_probability(fuse(f, s, w)) == y)
        .count();
    hits as f64 / labels.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NmConfig {
    pub alpha: f64,
    pub gamma: f64,
    pub rho: f64,
    pub sigma: f64,
    pub x_tol: f64,
    pub f_tol: f64,
    pub max_iters: usize,
    /// Offset of the initial simplex vertices along each axis.
    pub initial_step: f64,
}

impl Default for NmConfig {
    fn default() -> Self {
        NmConfig {
            alpha: 1.0,
            gamma: 2.0,
            rho: 0.5,
            sigma: 0.5,
            x_tol: 1e-4,
            f_tol: 1e-6,
            max_iters: 200,
            initial_step: 0.25,
        }
    }
}

impl NmConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.alpha > 0.0
            && self.gamma > 1.0
            && self.rho > 0.0
            && self.rho < 1.0
            && self.sigma > 0.0
            && self.sigma < 1.0
            && self.x_tol >= 0.0
            && self.f_tol >= 0.0
            && self.initial_step != 0.0
            && self.initial_step.is_finite();
        if ok {
            Ok(())
        } else {
            Err(GazeError::InvalidConfig(format!(
                "invalid Nelder-Mead settings {self:?}"
            )))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NmResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Best objective after each iteration.
    pub history: Vec<f64>,
}

fn combine(a: &[f64], b: &[f64], t: f64) -> Vec<f64> {
    // a + t (b - a)
    a.iter().zip(b).map(|(a, b)| a + t * (b - a)).collect()
}

/// Downhill simplex minimization. Stops once the simplex is within `x_tol`
/// of its best vertex and the objective spread is within `f_tol`, or after
/// `max_iters` iterations. Ordering is stable so ties favour older vertices.
pub fn nelder_mead<F>(mut f: F, x0: &[f64], cfg: &NmConfig) -> Result<NmResult>
where
    F: FnMut(&[f64]) -> f64,
{
    cfg.validate()?;
    if x0.is_empty() {
        return Err(GazeError::InvalidConfig(
            "Nelder-Mead needs at least one dimension".into(),
        ));
    }
    let d = x0.len();
    let mut eval = |x: &[f64]| {
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(d + 1);
    for i in 0..=d {
        let mut x = x0.to_vec();
        if i > 0 {
            x[i - 1] += cfg.initial_step;
        }
        let v = f_checked(eval(&x), &x)?;
        simplex.push((x, v));
    }

    let mut history = Vec::new();
    let mut iterations = 0;
    let mut converged = false;
    while iterations < cfg.max_iters {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = &simplex[0];
        let diameter = simplex[1..]
            .iter()
            .map(|(x, _)| x.iter().zip(&best.0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        let spread = simplex[d].1 - best.1;
        if diameter <= cfg.x_tol && spread <= cfg.f_tol {
            converged = true;
            break;
        }
        iterations += 1;

        let centroid: Vec<f64> = (0..d)
            .map(|j| simplex[..d].iter().map(|(x, _)| x[j]).sum::<f64>() / d as f64)
            .collect();
        let worst = simplex[d].clone();
        let (f_best, f_second) = (simplex[0].1, simplex[d - 1].1);

        let xr = combine(&centroid, &worst.0, -cfg.alpha);
        let fr = eval(&xr);
        if fr < f_best {
            let xe = combine(&centroid, &worst.0, -cfg.alpha * cfg.gamma);
            let fe = eval(&xe);
            simplex[d] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < f_second {
            simplex[d] = (xr, fr);
        } else {
            let (xc, fc, accept) = if fr < worst.1 {
                let xc = combine(&centroid, &worst.0, -cfg.alpha * cfg.rho);
                let fc = eval(&xc);
                let ok = fc <= fr;
                (xc, fc, ok)
            } else {
                let xc = combine(&centroid, &worst.0, cfg.rho);
                let fc = eval(&xc);
                let ok = fc < worst.1;
                (xc, fc, ok)
            };
            if accept {
                simplex[d] = (xc, fc);
            } else {
                let anchor = simplex[0].0.clone();
                for v in simplex.iter_mut().skip(1) {
                    v.0 = combine(&anchor, &v.0, cfg.sigma);
                    v.1 = eval(&v.0);
                }
            }
        }
        history.push(simplex.iter().map(|v| v.1).fold(f64::INFINITY, f64::min));
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, f) = simplex.swap_remove(0);
    Ok(NmResult {
        x,
        f,
        iterations,
        converged,
        history,
    })
}

fn f_checked(v: f64, x: &[f64]) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(GazeError::NonFinite(format!("objective at initial vertex {x:?}")))
    }
}

/// Where the fusion weight is tuned.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TuneOn {
    /// Out-of-fold predictions on the training split only.
    Train,
    /// The held-out split itself. Leaks test labels; kept to emulate
    /// protocols that tune against the evaluation.
    TestLeaky,
}

impl std::str::FromStr for TuneOn {
    type Err = GazeError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(TuneOn::Train),
            "test-leaky" | "test_leaky" => Ok(TuneOn::TestLeaky),
            _ => Err(GazeError::InvalidConfig(format!("unknown tuning target {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightFit {
    pub weights: EnsembleWeights,
    /// Accuracy at the returned weights on the tuning data.
    pub accuracy: f64,
    /// Accuracy at equal weights on the same data.
    pub start_accuracy: f64,
    pub iterations: usize,
}

/// Mean squared error of the fused probability against the 0/1 target.
pub fn fused_brier(p_fix: &[f64], p_sac: &[f64], labels: &[Gender], w: EnsembleWeights) -> f64 {
    let sse: f64 = p_fix
        .iter()
        .zip(p_sac)
        .zip(labels)
        .map(|((&f, &s), y)| (fuse(f, s, w) - y.target()).powi(2))
        .sum();
    sse / labels.len() as f64
}

/// Weight-tuning objective: negative fused accuracy, with the Brier score
/// as a tie-break inside accuracy plateaus. The Brier term is scaled by
/// 1/(2n), below one accuracy step, so it never trades away a correct row.
pub fn weight_objective(p_fix: &[f64], p_sac: &[f64], labels: &[Gender], theta: f64) -> f64 {
    let w = EnsembleWeights::from_fix(theta);
    let n = labels.len() as f64;
    -fused_accuracy(p_fix, p_sac, labels, w) + fused_brier(p_fix, p_sac, labels, w) / (2.0 * n)
}

/// Tunes the fixation share on given probabilities, starting from 0.5.
pub fn optimize_weights_on(p_fix: &[f64], p_sac: &[f64], labels: &[Gender], nm: &NmConfig) -> Result<WeightFit> {
    if p_fix.len() != labels.len() || p_sac.len() != labels.len() || labels.is_empty() {
        return Err(GazeError::InvalidConfig("probability and label counts differ".into()));
    }
    let res = nelder_mead(|theta| weight_objective(p_fix, p_sac, labels, theta[0]), &[0.5], nm)?;
    let weights = EnsembleWeights::from_fix(res.x[0]);
    Ok(WeightFit {
        weights,
        accuracy: fused_accuracy(p_fix, p_sac, labels, weights),
        start_accuracy: fused_accuracy(p_fix, p_sac, labels, EnsembleWeights::equal()),
        iterations: res.iterations,
    })
}

/// Out-of-fold P(female) for both channels under stratified k-fold CV.
pub fn out_of_fold_probabilities(
    fix: &Dataset,
    sac: &Dataset,
    fix_cfg: &ClassifierConfig,
    sac_cfg: &ClassifierConfig,
    folds: usize,
    seed: u64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if fix.y != sac.y {
        return Err(GazeError::InvalidConfig(
            "channel tables must share participants and labels".into(),
        ));
    }
    let mut rng = stream_rng(seed, 0x6f6f66);
    let folds = stratified_folds(&fix.y, folds, &mut rng)?;
    let n = fix.len();
    let mut p_fix = vec![0.0; n];
    let mut p_sac = vec![0.0; n];
    for (k, held) in folds.iter().enumerate() {
        let rows = complement(n, held);
        let s = derive_seed(seed, k as u64);
        let mf = train(&fix.subset(&rows), fix_cfg, s)?;
        let ms = train(&sac.subset(&rows), sac_cfg, s)?;
        for &i in held {
            p_fix[i] = mf.predict_proba(&fix.x[i]);
            p_sac[i] = ms.predict_proba(&sac.x[i]);
        }
    }
    Ok((p_fix, p_sac))
}

/// Fits the fusion weight by internal cross-validation on training data.
pub fn optimize_weights(
    fix: &Dataset,
    sac: &Dataset,
    fix_cfg: &ClassifierConfig,
    sac_cfg: &ClassifierConfig,
    seed: u64,
    nm: &NmConfig,
) -> Result<WeightFit> {
    let (p_fix, p_sac) = out_of_fold_probabilities(fix, sac, fix_cfg, sac_cfg, 5, seed)?;
    optimize_weights_on(&p_fix, &p_sac, &fix.y, nm)
}
