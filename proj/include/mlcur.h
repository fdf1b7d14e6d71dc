/* mlcur — curriculum-based mixture-of-experts imitation learning.
 *
 * C interface to the shared library. All functions return MLCUR_OK (0) on
 * success or a nonzero error code; mlcur_last_error() describes the most
 * recent failure on the calling thread. Strings returned through char**
 * arguments are owned by the caller and released with mlcur_string_free().
 */
#ifndef MLCUR_H
#define MLCUR_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define MLCUR_API __declspec(dllexport)
#else
#define MLCUR_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

enum {
  MLCUR_OK = 0,
  MLCUR_ERR_INVALID = 1, /* bad arguments or file contents */
  MLCUR_ERR_IO = 2,      /* filesystem problems */
  MLCUR_ERR_NUMERIC = 3, /* diverged or degenerate computation */
};

typedef struct mlcur_dataset mlcur_dataset; /* raw demos or projected pairs */
typedef struct mlcur_model mlcur_model;     /* ml-cur | em-moe | knn */

MLCUR_API const char* mlcur_version(void);
MLCUR_API const char* mlcur_last_error(void);
MLCUR_API void mlcur_string_free(char* s);

/* ---- datasets ---------------------------------------------------------- */

/* Generate planar-reacher demonstrations. world_json selects the world
 * (NULL for the built-in default); mode_mix are the (upper, middle, lower)
 * proportions and must sum to 1. */
MLCUR_API int mlcur_dataset_generate(const char* world_json, int n_demos,
                                     const double mode_mix[3], uint64_t seed,
                                     mlcur_dataset** out);

MLCUR_API int mlcur_dataset_load(const char* path, mlcur_dataset** out);
MLCUR_API int mlcur_dataset_save(const mlcur_dataset* data, const char* path);
MLCUR_API int mlcur_dataset_size(const mlcur_dataset* data, int* n);
MLCUR_API int mlcur_dataset_is_raw(const mlcur_dataset* data, int* raw);

/* Counts of the (upper, middle, lower) generator labels; zero when absent. */
MLCUR_API int mlcur_dataset_mode_counts(const mlcur_dataset* data, int counts[3]);

/* Project raw trajectories to (context, omega) pairs. basis_json may be NULL
 * for the default 10-basis configuration; no-op error on projected input. */
MLCUR_API int mlcur_dataset_project(const mlcur_dataset* data, const char* basis_json,
                                    mlcur_dataset** out);

MLCUR_API void mlcur_dataset_free(mlcur_dataset* data);

/* ---- training ---------------------------------------------------------- */

/* config_json keys: algo ("ml-cur" | "em" | "knn"), K, n_eff, mode
 * ("autotuned-alpha" | "fixed-alpha"), alpha, max_iters, rel_tol, seed,
 * ablation ("none" | "no-data-weights" | "with-locality-violation" |
 * "without-responsibilities"), entropy_form ("lower-bound" | "shannon"),
 * learn_gating, k_neighbors, basis {n_basis, bandwidth, ridge}.
 * Raw datasets are projected on the fly. out_trace_json (optional) receives
 * the per-iteration training trace for ml-cur runs. */
MLCUR_API int mlcur_train(const mlcur_dataset* data, const char* config_json,
                          mlcur_model** out_model, char** out_trace_json);

MLCUR_API int mlcur_model_load(const char* path, mlcur_model** out);
MLCUR_API int mlcur_model_save(const mlcur_model* model, const char* path);
MLCUR_API int mlcur_model_kind(const mlcur_model* model, char* buf, size_t cap);
MLCUR_API int mlcur_model_omega_dim(const mlcur_model* model, int* d_omega);

/* One prediction; sample != 0 draws from the model, otherwise the argmax-gate
 * mean is returned. omega_out must hold at least omega_dim entries. */
MLCUR_API int mlcur_model_predict(const mlcur_model* model, const double* context,
                                  int d_c, int sample, uint64_t seed,
                                  double* omega_out, int omega_cap);

MLCUR_API void mlcur_model_free(mlcur_model* model);

/* ---- evaluation -------------------------------------------------------- */

/* eval_config_json keys: rollout ("argmax" | "sample"), n_phases, seed.
 * The test dataset supplies the world (falling back to the model's); the
 * report is returned as JSON. */
MLCUR_API int mlcur_evaluate(const mlcur_model* model, const mlcur_dataset* test,
                             const char* eval_config_json, char** out_report_json);

/* Run a (variant x seed) experiment batch from an ablation spec document.
 * Both the JSON table and the plot-ready CSV are returned. */
MLCUR_API int mlcur_run_ablation(const char* spec_json, char** out_table_json,
                                 char** out_table_csv);

/* Convert a training-trace JSON document into the plot-ready CSV series. */
MLCUR_API int mlcur_trace_csv(const char* trace_json, char** out_csv);

#ifdef __cplusplus
}
#endif

#endif /* MLCUR_H */
