/* C interface to the marrr library. Every object is an opaque handle owned by
 * the caller and released with its *_free function. Functions return a
 * marrr_status; on failure marrr_last_error() describes the problem for the
 * calling thread. Matrices cross the boundary in column-major order. */
#ifndef MARRR_H
#define MARRR_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define MARRR_API
#elif defined(MARRR_BUILDING_LIBRARY)
#define MARRR_API __attribute__((visibility("default")))
#else
#define MARRR_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum marrr_status {
  MARRR_OK = 0,
  MARRR_ERR_DIMENSION = 1,
  MARRR_ERR_SCHEMA = 2,
  MARRR_ERR_PARSE = 3,
  MARRR_ERR_INDEX = 4,
  MARRR_ERR_CONFIG = 5,
  MARRR_ERR_DEGENERATE_INPUT = 6,
  MARRR_ERR_DEGENERATE_COVARIATE = 7,
  MARRR_ERR_DEGENERACY = 8,
  MARRR_ERR_RANK_DEFICIENCY = 9,
  MARRR_ERR_PRECONDITION = 10,
  MARRR_ERR_INSUFFICIENT_DATA = 11,
  MARRR_ERR_DEGENERATE_METRIC = 12,
  MARRR_ERR_NUMERICAL = 13,
  MARRR_ERR_IO = 14,
  MARRR_ERR_INVALID_ARGUMENT = 100, /* null handle or out pointer */
  MARRR_ERR_INTERNAL = 101          /* unexpected exception */
} marrr_status;

typedef enum marrr_algorithm {
  MARRR_ALGORITHM_FACTORED_ALS = 1, /* alternating ridge updates of factors */
  MARRR_ALGORITHM_SVT_ALS = 2       /* soft-threshold block updates */
} marrr_algorithm;

typedef enum marrr_y_treatment {
  MARRR_Y_NONE = 0,
  MARRR_Y_STANDARDIZE = 1,
  MARRR_Y_ORTHOGONALIZE = 2
} marrr_y_treatment;

typedef struct marrr_dataset marrr_dataset;
typedef struct marrr_mask marrr_mask;
typedef struct marrr_config marrr_config;
typedef struct marrr_penalties marrr_penalties;
typedef struct marrr_fit marrr_fit;
typedef struct marrr_imputation marrr_imputation;
typedef struct marrr_simulation marrr_simulation;

/* Message for the last failure on this thread; empty after success. */
MARRR_API const char* marrr_last_error(void);
/* Exception class name such as "ConfigError", or "OK". */
MARRR_API const char* marrr_status_name(marrr_status status);
/* Process exit code: 0 success, 1 numerical or runtime, 2 configuration. */
MARRR_API int marrr_exit_code(marrr_status status);
MARRR_API const char* marrr_version(void);
MARRR_API void marrr_string_free(char* s);

/* ---- dataset ---- */

MARRR_API marrr_status marrr_dataset_load(const char* x_path, const char* y_path,
                                          const char* cohort_map_path, marrr_dataset** out);
/* X is p x n and Y is q x n; NaN in X marks a missing cell. */
MARRR_API marrr_status marrr_dataset_from_arrays(const double* X, const double* Y, size_t p, size_t q,
                                                 size_t n, const size_t* cohort_sizes, size_t J,
                                                 marrr_dataset** out);
MARRR_API marrr_status marrr_dataset_save(const marrr_dataset* ds, const char* x_path, const char* y_path,
                                          const char* cohort_map_path);
MARRR_API marrr_status marrr_dataset_dims(const marrr_dataset* ds, size_t* p, size_t* q, size_t* n,
                                          size_t* J);
MARRR_API marrr_status marrr_dataset_cohort_size(const marrr_dataset* ds, size_t j, size_t* out);
/* Copies X (p x n) into `out`. */
MARRR_API marrr_status marrr_dataset_copy_x(const marrr_dataset* ds, double* out);
MARRR_API void marrr_dataset_free(marrr_dataset* ds);

/* ---- missing-cell masks ---- */

MARRR_API marrr_status marrr_mask_load(const char* path, marrr_mask** out);
MARRR_API marrr_status marrr_mask_save(const marrr_mask* mask, const char* path);
/* NaN cells of the dataset. */
MARRR_API marrr_status marrr_mask_from_dataset(const marrr_dataset* ds, marrr_mask** out);
/* kind: "entry", "column" or "row". */
MARRR_API marrr_status marrr_mask_make(const marrr_dataset* ds, double fraction, const char* kind,
                                       uint64_t seed, marrr_mask** out);
MARRR_API marrr_status marrr_mask_merge(const marrr_mask* a, const marrr_mask* b, marrr_mask** out);
MARRR_API marrr_status marrr_mask_size(const marrr_mask* mask, size_t* out);
/* Writes "entry", "column", "row" or "mixed" into *kind (static storage). */
MARRR_API marrr_status marrr_mask_classify(const marrr_mask* mask, const marrr_dataset* ds,
                                           const char** kind);
/* Part of the mask of one kind ("entry", "column" or "row"). */
MARRR_API marrr_status marrr_mask_part(const marrr_mask* mask, const marrr_dataset* ds, const char* kind,
                                       marrr_mask** out);
MARRR_API void marrr_mask_free(marrr_mask* mask);

/* ---- module indicator configuration ---- */

/* Rows are matched to the dataset's cohort ids when `ds` is not null. */
MARRR_API marrr_status marrr_config_load(const char* path, const marrr_dataset* ds, marrr_config** out);
MARRR_API marrr_status marrr_config_save(const marrr_config* cfg, const char* path, const marrr_dataset* ds);
/* C_Y is J x K and C_S is J x L, column-major 0/1 arrays. */
MARRR_API marrr_status marrr_config_from_arrays(const int* C_Y, const int* C_S, size_t J, size_t K,
                                                size_t L, marrr_config** out);
MARRR_API marrr_status marrr_config_dims(const marrr_config* cfg, size_t* J, size_t* K, size_t* L);
/* Every cohort subset as both covariate and auxiliary modules, largest first.
 * max_modules < 0 keeps all of them. */
MARRR_API marrr_status marrr_config_enumerate(size_t J, long max_modules, marrr_config** out);
/* Greedy auxiliary-module search on the centered, noise-scaled outcomes. */
MARRR_API marrr_status marrr_config_forward_select(const marrr_dataset* ds, size_t max_modules,
                                                   marrr_config** out);
MARRR_API void marrr_config_free(marrr_config* cfg);

/* ---- penalties ---- */

MARRR_API marrr_status marrr_penalties_rmt(const marrr_dataset* ds, const marrr_config* cfg,
                                           marrr_penalties** out);
MARRR_API marrr_status marrr_penalties_load(const char* path, marrr_penalties** out);
MARRR_API marrr_status marrr_penalties_save(const marrr_penalties* pen, const char* path);
/* kind is 'B' or 'S'; index is 0-based. */
MARRR_API marrr_status marrr_penalties_get(const marrr_penalties* pen, char kind, size_t index, double* out);
MARRR_API void marrr_penalties_free(marrr_penalties* pen);
/* Penalty conditions that keep every module estimable. `count` receives the
 * number of violations and `report` (nullable) one line per violation, to be
 * released with marrr_string_free. */
MARRR_API marrr_status marrr_check_penalties(const marrr_config* cfg, const marrr_penalties* pen,
                                             const marrr_dataset* ds, size_t* count, char** report);

/* ---- fitting ---- */

typedef struct marrr_solver_options {
  int algorithm;       /* marrr_algorithm */
  double epsilon;      /* <= 0 selects 1e-6 * p * n */
  int64_t max_epochs;
  int64_t r_B_upper;
  int64_t r_S_upper;
  uint64_t seed;
  double init_scale;
  int y_treatment;     /* marrr_y_treatment */
  int scale_x;         /* center rows and divide by the noise sd estimate */
  int center_y_per_cohort; /* remove each cohort's covariate means first */
} marrr_solver_options;

MARRR_API void marrr_solver_options_default(marrr_solver_options* opts);

MARRR_API marrr_status marrr_fit_run(const marrr_dataset* ds, const marrr_config* cfg,
                                     const marrr_penalties* pen, const marrr_solver_options* opts,
                                     marrr_fit** out);
/* Writes factors, coefficients on both scales, objective trace, metadata,
 * the preprocessing sidecar and the variance-explained table. */
MARRR_API marrr_status marrr_fit_save(const marrr_fit* fit, const char* dir);
MARRR_API marrr_status marrr_fit_summary(const marrr_fit* fit, int64_t* epochs, int* converged,
                                         double* objective);
/* Noise sd estimate used to scale the outcomes. */
MARRR_API marrr_status marrr_fit_sigma_hat(const marrr_fit* fit, double* out);
/* Coefficients of covariate module k on the raw scale (p x q). */
MARRR_API marrr_status marrr_fit_coefficients(const marrr_fit* fit, size_t k, double* out);
/* Fitted signal on the fitting scale (p x n). */
MARRR_API marrr_status marrr_fit_signal(const marrr_fit* fit, double* out);
MARRR_API void marrr_fit_free(marrr_fit* fit);

/* ---- imputation ---- */

typedef struct marrr_impute_options {
  int64_t outer_max;
  double tolerance; /* <= 0 selects 1e-4 * ||observed X||_F */
} marrr_impute_options;

MARRR_API void marrr_impute_options_default(marrr_impute_options* opts);
/* Inner solver defaults for imputation passes (30 epochs). */
MARRR_API void marrr_impute_solver_options_default(marrr_solver_options* opts);

/* `mask` may be null; NaN cells of the dataset are always imputed. */
MARRR_API marrr_status marrr_impute_run(const marrr_dataset* ds, const marrr_mask* mask,
                                        const marrr_config* cfg, const marrr_penalties* pen,
                                        const marrr_solver_options* solver,
                                        const marrr_impute_options* opts, marrr_imputation** out);
MARRR_API marrr_status marrr_imputation_summary(const marrr_imputation* imp, int64_t* outer_iterations,
                                                int* converged, double* tolerance);
/* Completed outcomes on the raw scale (p x n). */
MARRR_API marrr_status marrr_imputation_copy(const marrr_imputation* imp, double* out);
/* Completed dataset with the input's ids. */
MARRR_API marrr_status marrr_imputation_dataset(const marrr_imputation* imp, marrr_dataset** out);
/* Relative squared error against complete truth over `mask` (null: every
 * imputed cell). */
MARRR_API marrr_status marrr_imputation_rse(const marrr_imputation* imp, const marrr_dataset* truth,
                                            const marrr_mask* mask, double* out);
/* Imputed cells with their per-pass change history as CSV. */
MARRR_API marrr_status marrr_imputation_save_trace(const marrr_imputation* imp, const char* path);
MARRR_API void marrr_imputation_free(marrr_imputation* imp);

/* ---- simulation ---- */

/* scenario: aRRR_single, mRRR_two_cohort, global_individual or
 * orthogonality_study; `which` names a preset variant. */
MARRR_API marrr_status marrr_simulation_generate(const char* scenario, const char* which, uint64_t seed,
                                                 marrr_simulation** out);
MARRR_API marrr_status marrr_simulation_dataset(const marrr_simulation* sim, marrr_dataset** out);
MARRR_API marrr_status marrr_simulation_config(const marrr_simulation* sim, marrr_config** out);
/* Dataset CSVs, modules.csv, true coefficients, auxiliary terms and noise. */
MARRR_API marrr_status marrr_simulation_save(const marrr_simulation* sim, const char* dir);
MARRR_API void marrr_simulation_free(marrr_simulation* sim);
MARRR_API uint64_t marrr_derive_seed(uint64_t master, uint64_t index);

typedef struct marrr_study_options {
  int64_t replicates;
  uint64_t seed;
  int jobs;
  const char* variants; /* comma-separated, null or empty for all */
  int full_scale;
  double missing_fraction;
  int64_t rank_upper;
  int64_t max_epochs;
  int64_t impute_epochs;
} marrr_study_options;

MARRR_API void marrr_study_options_default(marrr_study_options* opts);
/* study: table1a, table1b, table2 or orthogonality. Writes tidy metric rows
 * (scenario,seed,method,metric,value) and, if `summary_path` is not null,
 * per-condition means. */
MARRR_API marrr_status marrr_study_run(const char* study, const marrr_study_options* opts,
                                       const char* metrics_path, const char* summary_path);
/* Study that evaluates a scenario ("aRRR_single" -> "table1a", ...). */
MARRR_API marrr_status marrr_study_for_scenario(const char* scenario, const char** study);
/* Comma-separated variant names of a study; free with marrr_string_free. */
MARRR_API marrr_status marrr_study_variants(const char* study, char** out);

/* ---- benchmark ---- */

typedef struct marrr_benchmark_options {
  int full_scale;
  int64_t epochs;
  int64_t rank_cap;
  int factored_als; /* time factored updates */
  int svt_als;      /* time soft-threshold updates */
  uint64_t seed;
} marrr_benchmark_options;

MARRR_API void marrr_benchmark_options_default(marrr_benchmark_options* opts);
/* Simulated data at toy or full scale; CSV of seconds per epoch. */
MARRR_API marrr_status marrr_benchmark_run(const marrr_benchmark_options* opts, const char* path);
MARRR_API marrr_status marrr_benchmark_run_dataset(const marrr_dataset* ds, const marrr_config* cfg,
                                                   const marrr_penalties* pen,
                                                   const marrr_benchmark_options* opts,
                                                   const marrr_solver_options* prepare, const char* path);

#ifdef __cplusplus
}
#endif

#endif /* MARRR_H */
