#ifndef PBQOS_H
#define PBQOS_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum PbqosStatus {
  PBQOS_STATUS_OK = 0,
  PBQOS_STATUS_NULL_ARGUMENT = 1,
  PBQOS_STATUS_INVALID_UTF8 = 2,
  PBQOS_STATUS_PARSE = 3,
  PBQOS_STATUS_COMPILE = 4,
  PBQOS_STATUS_CONFIG = 5,
  PBQOS_STATUS_RUN = 6,
  PBQOS_STATUS_IO = 7,
  PBQOS_STATUS_MEASURE = 8,
  PBQOS_STATUS_NOT_RUN = 9,
  PBQOS_STATUS_OUT_OF_RANGE = 10,
  PBQOS_STATUS_PANIC = 11,
} PbqosStatus;

/**
 * Parsed policy rules.
 */
typedef struct PbqosPolicySet PbqosPolicySet;

/**
 * A loaded scenario and the result of its last run.
 */
typedef struct PbqosScenario PbqosScenario;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version, a static NUL-terminated string.
 */
const char *pbqos_version(void);

/**
 * Message of the last failed call on this thread, or NULL. Valid until
 * the next call into the library on this thread.
 */
const char *pbqos_last_error(void);

/**
 * # Safety
 * `s` is NULL or a string returned by this library and not yet freed.
 */
void pbqos_string_free(char *s);

/**
 * Parses a policy file's text.
 *
 * # Safety
 * `text` is a NUL-terminated string; `out` is writable.
 */
enum PbqosStatus pbqos_policy_parse(const char *text, struct PbqosPolicySet **out);

/**
 * Number of rules in `set`; 0 for NULL.
 *
 * # Safety
 * `set` is NULL or a live handle.
 */
size_t pbqos_policy_count(const struct PbqosPolicySet *set);

/**
 * Canonical text of rule `index`.
 *
 * # Safety
 * `set` is a live handle; `out` is writable.
 */
enum PbqosStatus pbqos_policy_rule_text(const struct PbqosPolicySet *set, size_t index, char **out);

/**
 * tc commands for every rule, one per line.
 *
 * # Safety
 * `set` is a live handle; `out` is writable.
 */
enum PbqosStatus pbqos_policy_render_tc(const struct PbqosPolicySet *set, char **out);

/**
 * # Safety
 * `set` is NULL or a live handle, which is invalid afterwards.
 */
void pbqos_policy_free(struct PbqosPolicySet *set);

/**
 * Loads a scenario file and its policy file.
 *
 * # Safety
 * `path` is a NUL-terminated string; `out` is writable.
 */
enum PbqosStatus pbqos_scenario_load(const char *path, struct PbqosScenario **out);

/**
 * # Safety
 * `sc` is a live handle.
 */
enum PbqosStatus pbqos_scenario_set_seed(struct PbqosScenario *sc, uint64_t seed);

/**
 * Sets the time compression factor; rejected values leave the scenario
 * unchanged.
 *
 * # Safety
 * `sc` is a live handle.
 */
enum PbqosStatus pbqos_scenario_set_time_compression(struct PbqosScenario *sc, uint64_t k);

/**
 * Runs the scenario, replacing any earlier result.
 *
 * # Safety
 * `sc` is a live handle.
 */
enum PbqosStatus pbqos_scenario_run(struct PbqosScenario *sc);

/**
 * Summary of the last run as JSON.
 *
 * # Safety
 * `sc` is a live handle; `out` is writable.
 */
enum PbqosStatus pbqos_scenario_summary_json(const struct PbqosScenario *sc, char **out);

/**
 * Writes the series, audit log, summary and manifest of the last run.
 *
 * # Safety
 * `sc` is a live handle; `dir` is a NUL-terminated string.
 */
enum PbqosStatus pbqos_scenario_write_outputs(const struct PbqosScenario *sc, const char *dir);

/**
 * # Safety
 * `sc` is NULL or a live handle, which is invalid afterwards.
 */
void pbqos_scenario_free(struct PbqosScenario *sc);

/**
 * Throughput in bit/s between two 32-bit octet counter readings taken at
 * picosecond timestamps. One counter wrap is allowed.
 *
 * # Safety
 * `out` is writable.
 */
enum PbqosStatus pbqos_bandwidth(uint32_t prev_octets,
                                 uint64_t prev_t_ps,
                                 uint32_t cur_octets,
                                 uint64_t cur_t_ps,
                                 double *out);

/**
 * Utilization in percent of `if_speed_bps`.
 *
 * # Safety
 * `out` is writable.
 */
enum PbqosStatus pbqos_utilization(uint32_t prev_octets,
                                   uint64_t prev_t_ps,
                                   uint32_t cur_octets,
                                   uint64_t cur_t_ps,
                                   uint64_t if_speed_bps,
                                   double *out);

/**
 * One EWMA step. With `has_prev` false the sample initializes the average.
 *
 * # Safety
 * `out` is writable.
 */
enum PbqosStatus pbqos_ewma(double prev, bool has_prev, double sample, double alpha, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PBQOS_H */
