#ifndef GAZEFORGE_H
#define GAZEFORGE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call.
typedef enum GfStatus {
  GF_STATUS_OK = 0,
  // A required pointer argument was null.
  GF_STATUS_NULL_POINTER = 1,
  // Bad parameter value or configuration.
  GF_STATUS_INVALID_ARGUMENT = 2,
  // File could not be read or written.
  GF_STATUS_IO = 3,
  // Input data is malformed or insufficient for the request.
  GF_STATUS_DATA = 4,
  // Feature names of a model and its input differ.
  GF_STATUS_SCHEMA_MISMATCH = 5,
  // A Rust panic was caught at the boundary.
  GF_STATUS_PANIC = 6,
} GfStatus;

typedef enum GfClassifier {
  GF_CLASSIFIER_LOG_REG = 0,
  GF_CLASSIFIER_RANDOM_FOREST = 1,
} GfClassifier;

typedef enum GfWeightMode {
  GF_WEIGHT_MODE_EQUAL = 0,
  GF_WEIGHT_MODE_OPTIMIZED = 1,
  // Use `w_fix` and `1 - w_fix`.
  GF_WEIGHT_MODE_MANUAL = 2,
} GfWeightMode;

// Loaded or generated raw trajectories.
typedef struct GfCohort GfCohort;

// Smoothed, segmented and featurized cohort.
typedef struct GfPrepared GfPrepared;

// Result of a repeated-split evaluation.
typedef struct GfReport GfReport;

// Objective for [`gf_nelder_mead`]: `x` has `n` elements.
typedef double (*GfObjective)(const double *x, size_t n, void *user_data);

typedef struct GfEvalOptions {
  size_t n_runs;
  size_t k_features;
  enum GfClassifier classifier;
  double l2;
  enum GfWeightMode weight_mode;
  double w_fix;
  uint64_t seed;
} GfEvalOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null. Valid until the
// next gazeforge call on the same thread; do not free.
const char *gf_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *gf_version(void);

// Releases a string returned by this library.
//
// # Safety
// `s` must come from this library and not be freed twice.
void gf_string_free(char *s);

// Smooths `len` values with a Savitzky-Golay filter into `out` (same length).
//
// # Safety
// `values` and `out` must point to `len` doubles.
enum GfStatus gf_savgol(const double *values,
                        size_t len,
                        size_t poly_order,
                        size_t frame_size,
                        double *out);

// Weighted fusion `w_fix * p_fix + (1 - w_fix) * p_sac`.
//
// # Safety
// `out` must be a valid pointer.
enum GfStatus gf_fuse(double p_fix, double p_sac, double w_fix, double *out);

// Minimizes `objective` from `x0` (`n` elements) with default simplex
// settings and at most `max_iters` iterations. The minimizer is written to
// `x_out`, its value to `f_out`, the iteration count to `iters_out`.
//
// # Safety
// `x0` and `x_out` must point to `n` doubles; `f_out` and `iters_out` must
// be valid. `user_data` is passed through untouched.
enum GfStatus gf_nelder_mead(GfObjective objective,
                             void *user_data,
                             const double *x0,
                             size_t n,
                             size_t max_iters,
                             double *x_out,
                             double *f_out,
                             size_t *iters_out);

// Loads a cohort CSV.
//
// # Safety
// `path` must be a NUL-terminated UTF-8 string; `out` must be valid.
enum GfStatus gf_cohort_load(const char *path,
                             double sample_rate_hz,
                             double cap_ms,
                             struct GfCohort **out);

// Generates a synthetic cohort of `n` participants (even). The effects are
// added to the female class: fixation drift and saccade peak speed in deg/s.
//
// # Safety
// `out` must be valid.
enum GfStatus gf_cohort_synth(size_t n,
                              double duration_ms,
                              double fixation_effect,
                              double saccade_effect,
                              uint64_t seed,
                              struct GfCohort **out);

// # Safety
// `cohort` and `out` must be valid.
enum GfStatus gf_cohort_len(const struct GfCohort *cohort, size_t *out);

// # Safety
// `cohort` must come from this library (or be null) and not be freed twice.
void gf_cohort_free(struct GfCohort *cohort);

// Smooths, segments and featurizes with default settings. Pass a NaN
// `vt` to select the velocity threshold from the default grid.
//
// # Safety
// `cohort` and `out` must be valid.
enum GfStatus gf_prepare(const struct GfCohort *cohort, double vt, struct GfPrepared **out);

// Velocity threshold (deg/s) used for segmentation.
//
// # Safety
// `prepared` and `out` must be valid.
enum GfStatus gf_prepared_vt(const struct GfPrepared *prepared, double *out);

// # Safety
// `prepared` must come from this library (or be null) and not be freed twice.
void gf_prepared_free(struct GfPrepared *prepared);

// Defaults: 50 runs, k = 1, logistic regression with l2 = 1, equal weights, seed 0.
struct GfEvalOptions gf_eval_options_default(void);

// Repeated balanced train/test evaluation.
//
// # Safety
// `prepared`, `options` and `out` must be valid.
enum GfStatus gf_evaluate(const struct GfPrepared *prepared,
                          const struct GfEvalOptions *options,
                          struct GfReport **out);

// Mean accuracy, sample SD and SEM over runs.
//
// # Safety
// All pointers must be valid.
enum GfStatus gf_report_summary(const struct GfReport *report,
                                double *mean,
                                double *sd,
                                double *sem);

// # Safety
// `report` and `out` must be valid.
enum GfStatus gf_report_n_runs(const struct GfReport *report, size_t *out);

// Test accuracy of run `index`.
//
// # Safety
// `report` and `out` must be valid.
enum GfStatus gf_report_accuracy(const struct GfReport *report, size_t index, double *out);

// Whole report as JSON. Release with [`gf_string_free`].
//
// # Safety
// `report` and `out` must be valid.
enum GfStatus gf_report_to_json(const struct GfReport *report, char **out);

// # Safety
// `report` must come from this library (or be null) and not be freed twice.
void gf_report_free(struct GfReport *report);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GAZEFORGE_H */
