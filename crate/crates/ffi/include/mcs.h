#ifndef MCS_H
#define MCS_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes.
 */
typedef enum McsStatus {
  MCS_STATUS_OK = 0,
  MCS_STATUS_NULL_POINTER = 1,
  MCS_STATUS_INVALID_UTF8 = 2,
  MCS_STATUS_INVALID_PARAMETER = 3,
  MCS_STATUS_CONFIG = 4,
  MCS_STATUS_SCHEMA_MISMATCH = 5,
  MCS_STATUS_IO = 6,
  MCS_STATUS_FIT_FAILED = 7,
  MCS_STATUS_NUMERICAL = 8,
  MCS_STATUS_BUFFER_TOO_SMALL = 9,
  MCS_STATUS_PANIC = 10,
} McsStatus;

/**
 * Simulation and analysis output handle.
 */
typedef struct McsResult McsResult;

/**
 * Scenario configuration handle.
 */
typedef struct McsScenario McsScenario;

/**
 * Scalar summary of a run. Missing values are NaN.
 */
typedef struct McsSummary {
  double f_u_oracle_hz;
  double f_u_hz;
  double fwhm_hz;
  double tau_decay_s;
  double tau_memory_expected_s;
  double sensitivity_t_per_sqrt_hz;
  double wall_time_per_run_s;
  double wall_time_total_s;
  uint32_t fit_error_count;
  bool resonant;
} McsSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Valid until the
 * next failing call on the same thread.
 */
const char *mcs_last_error_message(void);

/**
 * Library version as a static string.
 */
const char *mcs_version(void);

/**
 * Parses a TOML scenario.
 *
 * # Safety
 * `toml` must be a NUL-terminated string and `out` a valid pointer.
 */
enum McsStatus mcs_scenario_from_toml(const char *toml, struct McsScenario **out);

/**
 * Loads a TOML scenario file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum McsStatus mcs_scenario_load(const char *path, struct McsScenario **out);

/**
 * # Safety
 * `scenario` must come from this library and not be used afterwards.
 */
void mcs_scenario_free(struct McsScenario *scenario);

/**
 * # Safety
 * `scenario` must be a live handle.
 */
enum McsStatus mcs_scenario_set_seed(struct McsScenario *scenario, uint64_t seed);

/**
 * Worker threads, 0 for all cores.
 *
 * # Safety
 * `scenario` must be a live handle.
 */
enum McsStatus mcs_scenario_set_workers(struct McsScenario *scenario, uint32_t workers);

/**
 * Number of runs; rejected (and left unchanged) when invalid.
 *
 * # Safety
 * `scenario` must be a live handle.
 */
enum McsStatus mcs_scenario_set_runs(struct McsScenario *scenario, uint64_t n_runs);

/**
 * Simulates and analyzes the scenario.
 *
 * # Safety
 * `scenario` must be a live handle and `out` a valid pointer.
 */
enum McsStatus mcs_run(const struct McsScenario *scenario, struct McsResult **out);

/**
 * # Safety
 * `result` must come from this library and not be used afterwards.
 */
void mcs_result_free(struct McsResult *result);

/**
 * Number of acquisitions in the trace; 0 for a null handle.
 *
 * # Safety
 * `result` must be null or a live handle.
 */
size_t mcs_result_trace_len(const struct McsResult *result);

/**
 * Copies the summed counts into `buf`, which must hold `mcs_result_trace_len` values.
 *
 * # Safety
 * `buf` must point to `capacity` writable doubles.
 */
enum McsStatus mcs_result_trace_counts(const struct McsResult *result,
                                       double *buf,
                                       size_t capacity);

/**
 * # Safety
 * `result` must be a live handle and `out` a valid pointer.
 */
enum McsStatus mcs_result_summary(const struct McsResult *result, struct McsSummary *out);

/**
 * Full summary as JSON; release with [`mcs_string_free`].
 *
 * # Safety
 * `result` must be a live handle and `out` a valid pointer.
 */
enum McsStatus mcs_result_summary_json(const struct McsResult *result, char **out);

/**
 * # Safety
 * `s` must be null or come from this library.
 */
void mcs_string_free(char *s);

/**
 * Writes trace, spectrum, fits and summary files into `dir`.
 *
 * # Safety
 * `result` must be a live handle and `dir` a NUL-terminated string.
 */
enum McsStatus mcs_result_write_bundle(const struct McsResult *result, const char *dir);

/**
 * Alias of `nu_s_hz` sampled every `t_s` seconds.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum McsStatus mcs_undersampled_frequency(double nu_s_hz, double t_s, double *out);

/**
 * SNR advantage factor of MCS over CS and the ratio of their total times.
 *
 * # Safety
 * `f_t` and `time_ratio` must be valid pointers.
 */
enum McsStatus mcs_f_t(uint64_t m, double t_s, double t_init_s, double *f_t, double *time_ratio);

/**
 * Memory lifetime from free relaxation and `m_limit` readouts of period `t_s`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum McsStatus mcs_effective_memory_lifetime(double t1_nuc_s,
                                             double m_limit,
                                             double t_s,
                                             double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MCS_H */
