/* enkfbench — C interface to the ensemble Kalman filter benchmark core.
 *
 * All entry points return ekb_status; on failure, ekb_last_error() holds a
 * thread-local message describing what went wrong. Handles are opaque and
 * must be released with their matching free function.
 */

#ifndef ENKFBENCH_H
#define ENKFBENCH_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ekb_status {
    EKB_OK = 0,
    EKB_ERROR_RUNTIME = 1,
    EKB_ERROR_CONFIG = 2,
    EKB_ERROR_INVALID_ARGUMENT = 3,
    EKB_ERROR_IO = 4
} ekb_status;

/* Library version string, e.g. "0.1.0". */
const char* ekb_version(void);

/* Message of the most recent failure on the calling thread ("" if none). */
const char* ekb_last_error(void);

/* ------------------------------------------------------------------ */
/* Run configuration                                                    */

typedef struct ekb_config ekb_config;

/* Parse a configuration file / string. An empty file selects the default
 * benchmark set-up. */
ekb_status ekb_config_load(const char* path, ekb_config** out);
ekb_status ekb_config_parse(const char* text, ekb_config** out);

/* Canonical text form of a configuration; free with ekb_string_free. */
ekb_status ekb_config_text(const ekb_config* config, char** out);

void ekb_config_free(ekb_config* config);
void ekb_string_free(char* s);

/* ------------------------------------------------------------------ */
/* Commands                                                             */

typedef void (*ekb_progress_fn)(size_t done, size_t total, void* user);

/* Execute the configured plan. Writes rmse.csv and manifest.json into
 * out_dir (NULL: the config / environment default). workers <= 0 uses the
 * configured worker count. resume != 0 skips records already on disk. */
ekb_status ekb_run(const ekb_config* config, const char* out_dir, int workers,
                   int resume);
ekb_status ekb_run_with_progress(const ekb_config* config, const char* out_dir,
                                 int workers, int resume, ekb_progress_fn progress,
                                 void* user);

/* Analyze one or more rmse tables into report CSVs under out_dir. nsyn may
 * be NULL to use the default subset sizes 1, 10, 100. force != 0 permits
 * merging tables whose plan hashes differ. */
ekb_status ekb_analyze(const char* const* table_paths, size_t n_tables,
                       const int* nsyn, size_t n_nsyn, const char* out_dir,
                       int force);

/* Reference forward run: dumps the reference field, the clean observation
 * table and a few state snapshots for the named scenario. */
ekb_status ekb_forward(const char* scenario, uint64_t seed, const char* out_dir);

/* ------------------------------------------------------------------ */
/* Scalar kernels (for bindings and cross-checks)                       */

/* Spherical correlation at distance d for range a. */
ekb_status ekb_spherical_correlation(double d, double a, double* out);

/* Compactly supported localization taper at distance d for length scale
 * lambda (support scale sqrt(10/3) * lambda). */
ekb_status ekb_gaspari_cohn(double d, double lambda, double* out);

/* Root mean square difference of two fields of length n. */
ekb_status ekb_rmse(const double* a, const double* b, size_t n, double* out);

#ifdef __cplusplus
}
#endif

#endif /* ENKFBENCH_H */
