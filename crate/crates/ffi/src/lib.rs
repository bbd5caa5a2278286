//! C ABI over the gazeforge toolkit.
//!
//! Every fallible call returns a [`GfStatus`]; on failure the message is
//! available from [`gf_last_error_message`] on the same thread. Objects are
//! opaque handles owned by the caller and released with their `_free`
//! function. Output pointers are written only on success.

use std::cell::RefCell;
use std::ffi::{c_char, c_void, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use gazeforge::classifiers::ClassifierConfig;
use gazeforge::ensemble::{fuse, nelder_mead, EnsembleWeights, NmConfig};
use gazeforge::evaluation::{
    prepare_cohort, run_experiment, EvalReport, ExperimentConfig, PipelineConfig, PreparedCohort, WeightMode,
};
use gazeforge::ingest::{
    generate_synthetic_cohort, load_cohort, ClassEffect, CohortSpec, GazeTrajectory, KinematicOffsets, LoadOptions,
};
use gazeforge::signal::{savgol_smooth, SmoothingConfig};
use gazeforge::GazeError;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GfStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// Bad parameter value or configuration.
    InvalidArgument = 2,
    /// File could not be read or written.
    Io = 3,
    /// Input data is malformed or insufficient for the request.
    Data = 4,
    /// Feature names of a model and its input differ.
    SchemaMismatch = 5,
    /// A Rust panic was caught at the boundary.
    Panic = 6,
}

/// Loaded or generated raw trajectories.
pub struct GfCohort(Vec<GazeTrajectory>);

/// Smoothed, segmented and featurized cohort.
pub struct GfPrepared(PreparedCohort);

/// Result of a repeated-split evaluation.
pub struct GfReport(EvalReport);

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GfClassifier {
    LogReg = 0,
    RandomForest = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GfWeightMode {
    Equal = 0,
    Optimized = 1,
    /// Use `w_fix` and `1 - w_fix`.
    Manual = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct GfEvalOptions {
    pub n_runs: usize,
    pub k_features: usize,
    pub classifier: GfClassifier,
    pub l2: f64,
    pub weight_mode: GfWeightMode,
    pub w_fix: f64,
    pub seed: u64,
}

/// Objective for [`gf_nelder_mead`]: `x` has `n` elements.
pub type GfObjective = Option<extern "C" fn(x: *const f64, n: usize, user_data: *mut c_void) -> f64>;

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(GfStatus, String);

impl From<GazeError> for Failure {
    fn from(e: GazeError) -> Self {
        let status = match &e {
            GazeError::Io { .. } => GfStatus::Io,
            GazeError::InvalidConfig(_) => GfStatus::InvalidArgument,
            GazeError::SchemaMismatch { .. } => GfStatus::SchemaMismatch,
            _ => GfStatus::Data,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(GfStatus::NullPointer, format!("{what} is null"))
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

/// Runs `f`, catching panics and recording any failure for this thread.
fn guard<F: FnOnce() -> Result<(), Failure>>(f: F) -> GfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            GfStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("panic: {msg}"));
            GfStatus::Panic
        }
    }
}

unsafe fn as_ref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn write_out<T>(out: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next gazeforge call on the same thread; do not free.
#[no_mangle]
pub extern "C" fn gf_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn gf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn gf_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Smooths `len` values with a Savitzky-Golay filter into `out` (same length).
///
/// # Safety
/// `values` and `out` must point to `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn gf_savgol(
    values: *const f64,
    len: usize,
    poly_order: usize,
    frame_size: usize,
    out: *mut f64,
) -> GfStatus {
    guard(|| {
        let v = slice(values, len, "values")?;
        if out.is_null() && len > 0 {
            return Err(null("out"));
        }
        let smoothed = savgol_smooth(v, &SmoothingConfig::new(poly_order, frame_size)?)?;
        if len > 0 {
            ptr::copy_nonoverlapping(smoothed.as_ptr(), out, len);
        }
        Ok(())
    })
}

/// Weighted fusion `w_fix * p_fix + (1 - w_fix) * p_sac`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gf_fuse(p_fix: f64, p_sac: f64, w_fix: f64, out: *mut f64) -> GfStatus {
    guard(|| {
        let w = EnsembleWeights::new(w_fix, 1.0 - w_fix)?;
        if !((0.0..=1.0).contains(&p_fix) && (0.0..=1.0).contains(&p_sac)) {
            return Err(Failure(
                GfStatus::InvalidArgument,
                "probabilities must lie in [0, 1]".into(),
            ));
        }
        write_out(out, fuse(p_fix, p_sac, w), "out")
    })
}

/// Minimizes `objective` from `x0` (`n` elements) with default simplex
/// settings and at most `max_iters` iterations. The minimizer is written to
/// `x_out`, its value to `f_out`, the iteration count to `iters_out`.
///
/// # Safety
/// `x0` and `x_out` must point to `n` doubles; `f_out` and `iters_out` must
/// be valid. `user_data` is passed through untouched.
#[no_mangle]
pub unsafe extern "C" fn gf_nelder_mead(
    objective: GfObjective,
    user_data: *mut c_void,
    x0: *const f64,
    n: usize,
    max_iters: usize,
    x_out: *mut f64,
    f_out: *mut f64,
    iters_out: *mut usize,
) -> GfStatus {
    guard(|| {
        let f = objective.ok_or_else(|| null("objective"))?;
        let start = slice(x0, n, "x0")?;
        if x_out.is_null() || f_out.is_null() || iters_out.is_null() {
            return Err(null("output pointer"));
        }
        let cfg = NmConfig {
            max_iters,
            ..NmConfig::default()
        };
        let result = nelder_mead(|x: &[f64]| f(x.as_ptr(), x.len(), user_data), start, &cfg)?;
        ptr::copy_nonoverlapping(result.x.as_ptr(), x_out, n);
        f_out.write(result.f);
        iters_out.write(result.iterations);
        Ok(())
    })
}

/// Loads a cohort CSV.
///
/// # Safety
/// `path` must be a NUL-terminated UTF-8 string; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn gf_cohort_load(
    path: *const c_char,
    sample_rate_hz: f64,
    cap_ms: f64,
    out: *mut *mut GfCohort,
) -> GfStatus {
    guard(|| {
        if path.is_null() {
            return Err(null("path"));
        }
        let path = CStr::from_ptr(path)
            .to_str()
            .map_err(|_| Failure(GfStatus::InvalidArgument, "path is not UTF-8".into()))?;
        let opts = LoadOptions { sample_rate_hz, cap_ms };
        let cohort = load_cohort(Path::new(path), &opts)?;
        write_out(out, Box::into_raw(Box::new(GfCohort(cohort))), "out")
    })
}

/// Generates a synthetic cohort of `n` participants (even). The effects are
/// added to the female class: fixation drift and saccade peak speed in deg/s.
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn gf_cohort_synth(
    n: usize,
    duration_ms: f64,
    fixation_effect: f64,
    saccade_effect: f64,
    seed: u64,
    out: *mut *mut GfCohort,
) -> GfStatus {
    guard(|| {
        let spec = CohortSpec {
            n_participants: n,
            duration_ms,
            class_effect: ClassEffect {
                female: KinematicOffsets {
                    fixation_velocity_deg_s: fixation_effect,
                    saccade_velocity_deg_s: saccade_effect,
                    left_eye_bias: 0.0,
                },
                male: KinematicOffsets::default(),
            },
            seed,
            ..CohortSpec::default()
        };
        let cohort = generate_synthetic_cohort(&spec)?;
        write_out(out, Box::into_raw(Box::new(GfCohort(cohort))), "out")
    })
}

/// # Safety
/// `cohort` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn gf_cohort_len(cohort: *const GfCohort, out: *mut usize) -> GfStatus {
    guard(|| write_out(out, as_ref(cohort, "cohort")?.0.len(), "out"))
}

/// # Safety
/// `cohort` must come from this library (or be null) and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn gf_cohort_free(cohort: *mut GfCohort) {
    if !cohort.is_null() {
        drop(Box::from_raw(cohort));
    }
}

/// Smooths, segments and featurizes with default settings. Pass a NaN
/// `vt` to select the velocity threshold from the default grid.
///
/// # Safety
/// `cohort` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn gf_prepare(cohort: *const GfCohort, vt: f64, out: *mut *mut GfPrepared) -> GfStatus {
    guard(|| {
        let cohort = as_ref(cohort, "cohort")?;
        let config = PipelineConfig {
            vt: (!vt.is_nan()).then_some(vt),
            ..PipelineConfig::default()
        };
        let prepared = prepare_cohort(&cohort.0, &config)?;
        write_out(out, Box::into_raw(Box::new(GfPrepared(prepared))), "out")
    })
}

/// Velocity threshold (deg/s) used for segmentation.
///
/// # Safety
/// `prepared` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn gf_prepared_vt(prepared: *const GfPrepared, out: *mut f64) -> GfStatus {
    guard(|| write_out(out, as_ref(prepared, "prepared")?.0.vt, "out"))
}

/// # Safety
/// `prepared` must come from this library (or be null) and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn gf_prepared_free(prepared: *mut GfPrepared) {
    if !prepared.is_null() {
        drop(Box::from_raw(prepared));
    }
}

/// Defaults: 50 runs, k = 1, logistic regression with l2 = 1, equal weights, seed 0.
#[no_mangle]
pub extern "C" fn gf_eval_options_default() -> GfEvalOptions {
    GfEvalOptions {
        n_runs: 50,
        k_features: 1,
        classifier: GfClassifier::LogReg,
        l2: 1.0,
        weight_mode: GfWeightMode::Equal,
        w_fix: 0.5,
        seed: 0,
    }
}

fn experiment_config(o: &GfEvalOptions) -> Result<ExperimentConfig, Failure> {
    let classifier = match o.classifier {
        GfClassifier::LogReg => ClassifierConfig::logreg(o.l2),
        GfClassifier::RandomForest => ClassifierConfig {
            l2: o.l2,
            ..ClassifierConfig::forest(Default::default())
        },
    };
    let weight_mode = match o.weight_mode {
        GfWeightMode::Equal => WeightMode::Equal,
        GfWeightMode::Optimized => WeightMode::Optimized,
        GfWeightMode::Manual => WeightMode::Manual {
            weights: EnsembleWeights::new(o.w_fix, 1.0 - o.w_fix)?,
        },
    };
    Ok(ExperimentConfig {
        n_runs: o.n_runs,
        k_features: o.k_features,
        classifier,
        weight_mode,
        seed: o.seed,
        ..ExperimentConfig::default()
    })
}

/// Repeated balanced train/test evaluation.
///
/// # Safety
/// `prepared`, `options` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn gf_evaluate(
    prepared: *const GfPrepared,
    options: *const GfEvalOptions,
    out: *mut *mut GfReport,
) -> GfStatus {
    guard(|| {
        let prepared = as_ref(prepared, "prepared")?;
        let config = experiment_config(as_ref(options, "options")?)?;
        let report = run_experiment(&prepared.0, &config)?;
        write_out(out, Box::into_raw(Box::new(GfReport(report))), "out")
    })
}

/// Mean accuracy, sample SD and SEM over runs.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn gf_report_summary(
    report: *const GfReport,
    mean: *mut f64,
    sd: *mut f64,
    sem: *mut f64,
) -> GfStatus {
    guard(|| {
        let r = &as_ref(report, "report")?.0;
        if mean.is_null() || sd.is_null() || sem.is_null() {
            return Err(null("output pointer"));
        }
        mean.write(r.mean_accuracy);
        sd.write(r.sd);
        sem.write(r.sem);
        Ok(())
    })
}

/// # Safety
/// `report` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn gf_report_n_runs(report: *const GfReport, out: *mut usize) -> GfStatus {
    guard(|| write_out(out, as_ref(report, "report")?.0.runs.len(), "out"))
}

/// Test accuracy of run `index`.
///
/// # Safety
/// `report` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn gf_report_accuracy(report: *const GfReport, index: usize, out: *mut f64) -> GfStatus {
    guard(|| {
        let r = &as_ref(report, "report")?.0;
        let run = r
            .runs
            .get(index)
            .ok_or_else(|| Failure(GfStatus::InvalidArgument, format!("run {index} out of range")))?;
        write_out(out, run.accuracy, "out")
    })
}

/// Whole report as JSON. Release with [`gf_string_free`].
///
/// # Safety
/// `report` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn gf_report_to_json(report: *const GfReport, out: *mut *mut c_char) -> GfStatus {
    guard(|| {
        let r = &as_ref(report, "report")?.0;
        let mut buf = Vec::new();
        r.write_json(&mut buf)?;
        let c = CString::new(buf).map_err(|e| Failure(GfStatus::Data, e.to_string()))?;
        write_out(out, c.into_raw(), "out")
    })
}

/// # Safety
/// `report` must come from this library (or be null) and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn gf_report_free(report: *mut GfReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}
