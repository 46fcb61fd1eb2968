#ifndef SEQDMG_SEQDMG_H
#define SEQDMG_SEQDMG_H

/*
 * C interface to the sequential damage detection library.
 *
 * Every fallible call returns a seqdmg_status. On failure the message is
 * available from seqdmg_last_error() until the next call on the same thread.
 * Strings returned through char** out-parameters are owned by the caller and
 * released with seqdmg_string_free().
 */

#include <stddef.h>

#if defined(_WIN32)
#if defined(SEQDMG_BUILDING)
#define SEQDMG_API __declspec(dllexport)
#else
#define SEQDMG_API __declspec(dllimport)
#endif
#else
#define SEQDMG_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum seqdmg_status {
  SEQDMG_OK = 0,
  SEQDMG_INVALID_ARGUMENT = 1,
  SEQDMG_DATA_ERROR = 2,
  SEQDMG_MODEL_ERROR = 3,
  SEQDMG_IO_ERROR = 4,
  SEQDMG_NUMERIC_ERROR = 5,
  SEQDMG_INTERNAL_ERROR = 6
} seqdmg_status;

typedef struct seqdmg_model seqdmg_model;
typedef struct seqdmg_session seqdmg_session;

SEQDMG_API const char* seqdmg_version(void);
SEQDMG_API const char* seqdmg_status_name(seqdmg_status status);
/* Message of the last failed call on this thread ("" if none). */
SEQDMG_API const char* seqdmg_last_error(void);
SEQDMG_API void seqdmg_string_free(char* s);

/* ---- models ---------------------------------------------------------- */

/* Loads and fully validates a model JSON file. */
SEQDMG_API seqdmg_status seqdmg_model_load(const char* path, seqdmg_model** out);
SEQDMG_API seqdmg_status seqdmg_model_from_json(const char* json_text, seqdmg_model** out);
SEQDMG_API seqdmg_status seqdmg_model_to_json(const seqdmg_model* model, char** out);
SEQDMG_API void seqdmg_model_free(seqdmg_model* model);
SEQDMG_API size_t seqdmg_model_sensor_count(const seqdmg_model* model);
SEQDMG_API size_t seqdmg_model_variable_count(const seqdmg_model* model);
SEQDMG_API size_t seqdmg_model_edge_count(const seqdmg_model* model);

/*
 * Structural report for a model file. On success the report is
 * "OK, <s> sensors, <e> edges, RIP satisfied". When the tree is invalid the
 * report lists one violation per line and SEQDMG_MODEL_ERROR is returned.
 */
SEQDMG_API seqdmg_status seqdmg_validate_file(const char* path, char** report);

/* ---- feature extraction and fitting ---------------------------------- */

/*
 * Reads a signal CSV (`t,value` or `t,sensor_1,...`), extracts one DSF CSV per
 * sensor into out_dir as s<id>.csv. order_spec is "<p>" or "aic:<max>";
 * coeffs is a comma-separated list of 1-based AR coefficient indices.
 * default_sensor names the sensor of a single-column file. provenance (may be
 * NULL) is written as a leading comment line. summary receives one line per
 * written file.
 */
SEQDMG_API seqdmg_status seqdmg_extract(const char* signal_csv, size_t chunk_size, const char* order_spec,
                                        const char* coeffs, int default_sensor, const char* out_dir,
                                        const char* provenance, char** summary);

/*
 * Fits every density of a model skeleton (JSON text without g/f entries) from
 * training DSF CSVs in data_dir: s<id>_pre.csv and s<id>_post_<j1>-<j2>.csv.
 * ridge < 0 selects the default regularization. model_json receives the
 * fitted model, kl_table a `sensor,subset,kl` CSV.
 */
SEQDMG_API seqdmg_status seqdmg_fit_model(const char* skeleton_json, const char* data_dir, double ridge,
                                          char** model_json, char** kl_table);

/* ---- detection ------------------------------------------------------- */

/* window <= 0 means no window. rules e.g. "min:1,3;max:1,3;single:3". */
SEQDMG_API seqdmg_status seqdmg_session_create(const seqdmg_model* model, const char* rules, double alpha,
                                               int window, seqdmg_session** out);
/* LOCAL baseline on one sensor: no messages, every prior of its domain applied locally. */
SEQDMG_API seqdmg_status seqdmg_session_create_local(const seqdmg_model* model, int sensor, const char* rules,
                                                     double alpha, int window, seqdmg_session** out);
SEQDMG_API void seqdmg_session_free(seqdmg_session* session);

/*
 * Feeds one time step. features holds the vectors of sensors[0..count-1]
 * back to back, each of that sensor's dimension.
 */
SEQDMG_API seqdmg_status seqdmg_session_step(seqdmg_session* session, const int* sensors, const double* features,
                                             size_t count);
/* Streams s<id>.csv files from data_dir until every rule stops or data ends. */
SEQDMG_API seqdmg_status seqdmg_session_run_dir(seqdmg_session* session, const char* data_dir);

SEQDMG_API int seqdmg_session_done(const seqdmg_session* session);
SEQDMG_API long seqdmg_session_horizon(const seqdmg_session* session);
SEQDMG_API size_t seqdmg_session_rule_count(const seqdmg_session* session);

/* label receives e.g. "min:1,3"; tau is 0 when the rule has not stopped. */
SEQDMG_API seqdmg_status seqdmg_session_rule(const seqdmg_session* session, size_t rule, char** label,
                                             int* evaluated_at, int* stopped, long* tau);
/* Posterior P(lambda_S <= n) and CCDF of a rule after step n (1-based). */
SEQDMG_API seqdmg_status seqdmg_session_value(const seqdmg_session* session, long n, size_t rule,
                                              double* posterior, double* ccdf);

/* JSON-lines log; config_json (may be NULL) is embedded as a leading record. */
SEQDMG_API seqdmg_status seqdmg_session_log(const seqdmg_session* session, const char* config_json, char** out);
/* Message traffic so far as JSON: steps, messages, entries, bytes, per edge and per sensor. */
SEQDMG_API seqdmg_status seqdmg_session_traffic(const seqdmg_session* session, char** out);

/* ---- bounds and evaluation ------------------------------------------- */

/* |ln alpha| / (-ln(1-rho) + sum kl). */
SEQDMG_API seqdmg_status seqdmg_bound_single(double rho, const double* kl, size_t count, double alpha,
                                             double* out);
SEQDMG_API seqdmg_status seqdmg_bound_rule(const seqdmg_model* model, const char* rule, double alpha, double* out);

/*
 * Monte Carlo MP-vs-LOCAL curves. scenario_json fields:
 *   planted       object variable id -> change time (absent: never changes)
 *   length        steps per replication
 *   replications  count (>= 1)
 *   seed          integer
 *   window        integer or null
 *   threads       worker threads (0: hardware concurrency)
 *   rules         rule list string
 *   alpha_grid    array of alphas in (0,1)
 *   local_sensor  LOCAL sensor id (0: lowest-id sensor covering all targets)
 * curve_csv receives `alpha,log_alpha_abs,rule,method,mean_delay,delay_slope,
 * fa_rate,censored,bound`; provenance (may be NULL) becomes a comment line.
 */
SEQDMG_API seqdmg_status seqdmg_simulate(const seqdmg_model* model, const char* scenario_json,
                                         const char* provenance, char** curve_csv);

#ifdef __cplusplus
}
#endif

#endif
