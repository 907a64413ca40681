#ifndef CWRM_H
#define CWRM_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes returned by every fallible function.
typedef enum CwrmStatus {
  CWRM_STATUS_OK = 0,
  CWRM_STATUS_NULL_POINTER = 1,
  // Bad argument: wrong buffer length, invalid UTF-8, unknown preset.
  CWRM_STATUS_INVALID_ARGUMENT = 2,
  // Data or settings rejected by validation.
  CWRM_STATUS_VALIDATION = 3,
  // Every random start failed.
  CWRM_STATUS_ALL_STARTS_FAILED = 4,
  // The requested quantity does not exist for this fit.
  CWRM_STATUS_UNAVAILABLE = 5,
  // Internal panic; the handle involved should be treated as unusable.
  CWRM_STATUS_PANIC = 6,
} CwrmStatus;

typedef enum CwrmMethod {
  // Trimmed cluster weighted model.
  CWRM_METHOD_CWRM = 0,
  // Trimmed mixture of linear regressions.
  CWRM_METHOD_MIXREG = 1,
} CwrmMethod;

// Opaque dataset handle.
typedef struct CwrmDataset CwrmDataset;

// Opaque fit handle.
typedef struct CwrmFit CwrmFit;

// Fit settings; obtain defaults from `cwrm_config_default`.
typedef struct CwrmConfig {
  size_t groups;
  double alpha;
  double c_x;
  double c_eps;
  size_t n_starts;
  size_t max_iter;
  double rel_tol;
  uint64_t seed;
} CwrmConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failure on this thread; empty if none. The pointer
// stays valid until the next failing call on the same thread.
const char *cwrm_last_error_message(void);

// Default settings: 2 groups, no trimming, `c_x = c_eps = 20`, 64 starts.
struct CwrmConfig cwrm_config_default(void);

// Builds a dataset from `n * d` row-major covariates and `n` responses.
//
// # Safety
// `x` and `y` must point to `n * d` and `n` readable doubles; `out` must be writable.
enum CwrmStatus cwrm_dataset_new(size_t n,
                                 size_t d,
                                 const double *x,
                                 const double *y,
                                 struct CwrmDataset **out);

// Draws a dataset from a named preset, with ground-truth labels.
//
// # Safety
// `name` must be a NUL-terminated string; `out` must be writable.
enum CwrmStatus cwrm_dataset_simulate(const char *name, uint64_t seed, struct CwrmDataset **out);

// Releases a dataset; null is ignored.
//
// # Safety
// `ds` must come from this library and not be used afterwards.
void cwrm_dataset_free(struct CwrmDataset *ds);

// Number of observations, 0 for null.
//
// # Safety
// `ds` must be null or a live handle.
size_t cwrm_dataset_n(const struct CwrmDataset *ds);

// Covariate dimension, 0 for null.
//
// # Safety
// `ds` must be null or a live handle.
size_t cwrm_dataset_d(const struct CwrmDataset *ds);

// Copies covariates (`n * d`, row-major).
//
// # Safety
// `out` must hold `len` writable doubles.
enum CwrmStatus cwrm_dataset_covariates(const struct CwrmDataset *ds, double *out, size_t len);

// Copies responses (`n`).
//
// # Safety
// `out` must hold `len` writable doubles.
enum CwrmStatus cwrm_dataset_responses(const struct CwrmDataset *ds, double *out, size_t len);

// Copies ground-truth labels (`n`; 0 marks contamination).
//
// # Safety
// `out` must hold `len` writable `size_t`.
enum CwrmStatus cwrm_dataset_true_labels(const struct CwrmDataset *ds, size_t *out, size_t len);

// Fits a model.
//
// # Safety
// `ds` and `config` must be live; `out` must be writable.
enum CwrmStatus cwrm_fit(const struct CwrmDataset *ds,
                         const struct CwrmConfig *config,
                         enum CwrmMethod method,
                         struct CwrmFit **out);

// Releases a fit; null is ignored.
//
// # Safety
// `fit` must come from this library and not be used afterwards.
void cwrm_fit_free(struct CwrmFit *fit);

// Number of components, 0 for null.
//
// # Safety
// `fit` must be null or a live handle.
size_t cwrm_fit_groups(const struct CwrmFit *fit);

// Number of observations, 0 for null.
//
// # Safety
// `fit` must be null or a live handle.
size_t cwrm_fit_n(const struct CwrmFit *fit);

// Covariate dimension, 0 for null.
//
// # Safety
// `fit` must be null or a live handle.
size_t cwrm_fit_dim(const struct CwrmFit *fit);

// Number of retained observations, 0 for null.
//
// # Safety
// `fit` must be null or a live handle.
size_t cwrm_fit_retained(const struct CwrmFit *fit);

// Trimmed log-likelihood, NaN for null.
//
// # Safety
// `fit` must be null or a live handle.
double cwrm_fit_objective(const struct CwrmFit *fit);

// Whether the best start met the tolerance.
//
// # Safety
// `fit` must be null or a live handle.
bool cwrm_fit_converged(const struct CwrmFit *fit);

// Copies labels (`n`; 0 for trimmed rows, else the 1-based component).
//
// # Safety
// `out` must hold `len` writable `size_t`.
enum CwrmStatus cwrm_fit_labels(const struct CwrmFit *fit, size_t *out, size_t len);

// Copies the retention mask (`n`; 1 retained, 0 trimmed).
//
// # Safety
// `out` must hold `len` writable bytes.
enum CwrmStatus cwrm_fit_retained_mask(const struct CwrmFit *fit, uint8_t *out, size_t len);

// Copies mixing weights (`G`).
//
// # Safety
// `out` must hold `len` writable doubles.
enum CwrmStatus cwrm_fit_weights(const struct CwrmFit *fit, double *out, size_t len);

// Copies regression intercepts (`G`).
//
// # Safety
// `out` must hold `len` writable doubles.
enum CwrmStatus cwrm_fit_intercepts(const struct CwrmFit *fit, double *out, size_t len);

// Copies regression slopes (`G * d`, component-major).
//
// # Safety
// `out` must hold `len` writable doubles.
enum CwrmStatus cwrm_fit_slopes(const struct CwrmFit *fit, double *out, size_t len);

// Copies error variances (`G`).
//
// # Safety
// `out` must hold `len` writable doubles.
enum CwrmStatus cwrm_fit_noise_vars(const struct CwrmFit *fit, double *out, size_t len);

// Copies covariate means (`G * d`); `CWRM_STATUS_UNAVAILABLE` for mixreg fits.
//
// # Safety
// `out` must hold `len` writable doubles.
enum CwrmStatus cwrm_fit_means(const struct CwrmFit *fit, double *out, size_t len);

// Copies covariate scatters (`G * d * d`, each row-major);
// `CWRM_STATUS_UNAVAILABLE` for mixreg fits.
//
// # Safety
// `out` must hold `len` writable doubles.
enum CwrmStatus cwrm_fit_scatters(const struct CwrmFit *fit, double *out, size_t len);

// Full JSON report. Free the string with `cwrm_string_free`; null on failure.
//
// # Safety
// `fit` must be null or a live handle.
char *cwrm_fit_report_json(const struct CwrmFit *fit);

// Releases a string returned by this library; null is ignored.
//
// # Safety
// `s` must come from this library and not be used afterwards.
void cwrm_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CWRM_H */
