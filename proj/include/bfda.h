/* C interface to the bfda library: opaque handles, status codes, and the
 * file-level commands the CLI is built on. All functions returning
 * bfda_status leave a thread-local message retrievable via bfda_last_error()
 * on failure. */
#ifndef BFDA_H
#define BFDA_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum bfda_status {
  BFDA_OK = 0,
  BFDA_ERROR = 1,         /* unexpected failure */
  BFDA_ERROR_CONFIG = 2,  /* bad configuration or arguments */
  BFDA_ERROR_DATA = 3,    /* unreadable or invalid data */
  BFDA_ERROR_NUMERIC = 4  /* numerical breakdown */
} bfda_status;

const char* bfda_version(void);

/* Message from the most recent failing call on this thread. */
const char* bfda_last_error(void);

/* ------------------------------------------------------------------ */
/* datasets                                                            */

typedef struct bfda_dataset bfda_dataset;

/* format: "csv-long" or "json" */
bfda_status bfda_dataset_load(const char* path, const char* format, bfda_dataset** out);
bfda_status bfda_dataset_save(const bfda_dataset* data, const char* path, const char* format);
void bfda_dataset_free(bfda_dataset* data);
int64_t bfda_dataset_n_curves(const bfda_dataset* data);
int64_t bfda_dataset_pooled_size(const bfda_dataset* data);

/* ------------------------------------------------------------------ */
/* in-process fitting                                                  */

typedef struct bfda_fit bfda_fit;

/* config_json: fit configuration document ("{}" for defaults). */
bfda_status bfda_fit_run(const bfda_dataset* data, const char* config_json, bfda_fit** out);
void bfda_fit_free(bfda_fit* fit);

int64_t bfda_fit_kept(const bfda_fit* fit);
int64_t bfda_fit_grid_size(const bfda_fit* fit);
int64_t bfda_fit_n_curves(const bfda_fit* fit);

/* Posterior-mean signals, column-major p x n; len must be >= p*n. */
bfda_status bfda_fit_signal_mean(const bfda_fit* fit, double* buffer, size_t len);
/* Posterior mean curve of length p; len must be >= p. */
bfda_status bfda_fit_mean_curve(const bfda_fit* fit, double* buffer, size_t len);
/* name: "sigma_eps2.mean", "sigma_eps2.lower", "sigma_eps2.upper",
 *       "sigma_s2.mean", "sigma_s2.lower", "sigma_s2.upper" */
bfda_status bfda_fit_scalar(const bfda_fit* fit, const char* name, double* out);
/* Writes the summary CSV directory, as `bfda fit` does. */
bfda_status bfda_fit_write_summary(const bfda_fit* fit, const char* dir);

/* ------------------------------------------------------------------ */
/* file-level commands (the surface the CLI wires to)                  */

/* Unset optionals: pass NULL for strings, a negative value for retain /
 * iters / burnin, and has_seed = 0 to keep the config's seed. */

bfda_status bfda_cmd_simulate(const char* config_path, const char* const* set_kv, size_t n_set,
                              int has_seed, uint64_t seed, double retain, const char* out_dir);

bfda_status bfda_cmd_fit(const char* data_path, const char* data_format, const char* config_path,
                         const char* const* set_kv, size_t n_set, int has_seed, uint64_t seed,
                         int chains, long iters, long burnin, const char* scale_kernel,
                         int dump_chains, const char* resume_dir, const char* out_dir);

bfda_status bfda_cmd_evaluate(const char* const* fit_dirs, size_t n_fits, const char* truth_dir,
                              const char* validation_csv, const char* out_dir);

bfda_status bfda_cmd_diagnose(const char* const* chain_csvs, size_t n_chains, const char* out_dir);

#ifdef __cplusplus
}
#endif

#endif /* BFDA_H */
