/* C interface to the stickylab Monte Carlo library.
 *
 * Every fallible call returns an sl_status; on failure the message is
 * available from sl_last_error() on the same thread until the next call.
 * Objects are opaque handles released with their _destroy function, and
 * strings handed out as char** are released with sl_string_free.
 */
#ifndef STICKYLAB_H
#define STICKYLAB_H

#include <stddef.h>
#include <stdint.h>

#if defined(STICKYLAB_BUILDING)
#define SL_API __attribute__((visibility("default")))
#else
#define SL_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum sl_status {
  SL_OK = 0,
  SL_INVALID_ARGUMENT = 1,
  SL_CONFIG = 2,
  SL_NUMERICAL = 3,
  SL_IO = 4,
  SL_DOMAIN = 5,
  SL_RANGE = 6,
  SL_GRID = 7,
  SL_CONTRACT = 8,
  SL_INVALID_RULE = 9,
  SL_DEGENERATE = 10,
  SL_INTERNAL = 99
} sl_status;

typedef struct sl_table sl_table;
typedef struct sl_ensemble sl_ensemble;

SL_API const char* sl_version(void);
SL_API const char* sl_last_error(void);
SL_API const char* sl_status_name(sl_status status);

/* Process exit code for a status: 0 success, 2 configuration, 3 numerical,
 * 4 I/O. */
SL_API int sl_exit_code(sl_status status);

/* Worker pool size; 0 restores the STICKYLAB_THREADS / hardware default. */
SL_API sl_status sl_set_threads(size_t n);
SL_API size_t sl_get_threads(void);

/* Runs the experiment described by a JSON configuration document. */
SL_API sl_status sl_run_config_json(const char* json, sl_table** out);
/* Canonical JSON of a named preset. */
SL_API sl_status sl_preset_config_json(const char* name, char** out_json);
/* Newline-separated preset names. */
SL_API sl_status sl_preset_list(char** out);
/* Canonical JSON of a configuration document after defaults and preset
 * expansion. */
SL_API sl_status sl_normalize_config_json(const char* json, char** out_json);
SL_API void sl_string_free(char* s);

SL_API size_t sl_table_rows(const sl_table* table);
SL_API size_t sl_table_columns(const sl_table* table);
SL_API sl_status sl_table_column_name(const sl_table* table, size_t column, char** out);
/* Cell as text (17 significant digits for numbers). */
SL_API sl_status sl_table_cell_text(const sl_table* table, size_t row, size_t column, char** out);
/* Numeric cell; SL_INVALID_ARGUMENT for text cells. */
SL_API sl_status sl_table_cell_double(const sl_table* table, size_t row, size_t column,
                                      double* out);
/* destination "-" writes to stdout. */
SL_API sl_status sl_table_write_csv(const sl_table* table, const char* destination);
SL_API sl_status sl_table_write_plot(const sl_table* table, const char* x_column,
                                     const char* y_column, const char* destination);
SL_API void sl_table_destroy(sl_table* table);

/* Materialised ensemble of a process given as JSON, e.g.
 * {"name":"fbm","hurst":0.75}. */
SL_API sl_status sl_ensemble_sample(const char* process_json, double horizon, size_t steps,
                                    uint64_t seed, size_t n_paths, sl_ensemble** out);
SL_API sl_status sl_ensemble_read_csv(const char* path, sl_ensemble** out);
SL_API sl_status sl_ensemble_write_csv(const sl_ensemble* ensemble, const char* path);
SL_API size_t sl_ensemble_size(const sl_ensemble* ensemble);
SL_API size_t sl_ensemble_steps(const sl_ensemble* ensemble);
/* Copies steps + 1 grid times / path values into out (capacity len). */
SL_API sl_status sl_ensemble_times(const sl_ensemble* ensemble, double* out, size_t len);
SL_API sl_status sl_ensemble_values(const sl_ensemble* ensemble, size_t path, double* out,
                                    size_t len);
SL_API void sl_ensemble_destroy(sl_ensemble* ensemble);

typedef struct sl_stickiness_query {
  const char* tau;              /* rule syntax, NULL for det:0 */
  const char* event;            /* event syntax, NULL for all */
  const char* characterization; /* defa, propb, propc; NULL for defa */
  double epsilon;
  double horizon;
  double confidence; /* 0 for 0.95 */
} sl_stickiness_query;

typedef struct sl_stickiness_result {
  uint64_t successes;
  uint64_t n;
  double p_hat;
  double ci_low;
  double ci_high;
  double upper_bound; /* one-sided bound, exact when successes == 0 */
  int positive;       /* 1 iff successes >= 1 and ci_low > 0 */
} sl_stickiness_result;

SL_API sl_status sl_stickiness(const sl_ensemble* ensemble, const sl_stickiness_query* query,
                               sl_stickiness_result* out);
SL_API sl_status sl_wilson_ci(uint64_t successes, uint64_t n, double level, double* low,
                              double* high);

#ifdef __cplusplus
}
#endif

#endif
