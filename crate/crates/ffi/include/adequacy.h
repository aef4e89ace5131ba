#ifndef ADEQUACY_H
#define ADEQUACY_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum AdqDispatcher {
  ADQ_DISPATCHER_OPTIMAL = 0,
  ADQ_DISPATCHER_HEURISTIC = 1,
} AdqDispatcher;

/**
 * Outcome of a library call.
 */
typedef enum AdqStatus {
  ADQ_STATUS_OK = 0,
  /**
   * Null pointer, bad UTF-8 or a call out of sequence.
   */
  ADQ_STATUS_INVALID_ARGUMENT = 1,
  /**
   * Configuration or input validation failed.
   */
  ADQ_STATUS_VALIDATION = 2,
  /**
   * Dispatch fault, bracketing failure or non-monotone metric.
   */
  ADQ_STATUS_NUMERICAL = 3,
  ADQ_STATUS_IO = 4,
  /**
   * A panic was caught at the boundary.
   */
  ADQ_STATUS_INTERNAL = 5,
} AdqStatus;

/**
 * A loaded study: configuration, traces and, once sampled, scenarios.
 */
typedef struct AdqStudy AdqStudy;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Loads and validates a JSON configuration file. Relative paths in it are
 * resolved against the file's directory.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum AdqStatus adq_study_open(const char *path, struct AdqStudy **out);

/**
 * Like [`adq_study_open`] with the configuration given as text and
 * relative paths resolved against `base_dir`.
 *
 * # Safety
 * `json` and `base_dir` must be NUL-terminated strings and `out` a valid
 * pointer.
 */
enum AdqStatus adq_study_from_json(const char *json, const char *base_dir, struct AdqStudy **out);

/**
 * Samples the configured scenario set, replacing any earlier one, and
 * writes its fingerprint (64 hex digits) to `fingerprint` if not null.
 *
 * # Safety
 * `study` must come from this library; `fingerprint` must be null or
 * point to at least 65 bytes.
 */
enum AdqStatus adq_study_generate(struct AdqStudy *study, char *fingerprint);

/**
 * Number of scenarios sampled so far, 0 before [`adq_study_generate`].
 *
 * # Safety
 * `study` must be null or come from this library.
 */
size_t adq_study_scenario_count(const struct AdqStudy *study);

/**
 * Expected unserved energy (MWh) and loss-of-load steps of the configured
 * fleet. Either output may be null.
 *
 * # Safety
 * `study` must come from this library; outputs must be null or valid.
 */
enum AdqStatus adq_study_assess(struct AdqStudy *study,
                                enum AdqDispatcher dispatcher,
                                double *eue_mwh,
                                double *lole_steps);

/**
 * Accredits the configured addition; writes the credit in MW.
 *
 * # Safety
 * `study` must come from this library; `delta_mw` must be null or valid.
 */
enum AdqStatus adq_study_elcc(struct AdqStudy *study,
                              enum AdqDispatcher dispatcher,
                              double *delta_mw);

/**
 * Full JSON report of the last successful assess or ELCC call. The
 * string is owned by the caller and released with [`adq_string_free`].
 *
 * # Safety
 * `study` must come from this library and `out` must be valid.
 */
enum AdqStatus adq_study_report_json(const struct AdqStudy *study, char **out);

/**
 * Releases a study handle. Null is ignored.
 *
 * # Safety
 * `study` must be null or come from this library and not be used again.
 */
void adq_study_free(struct AdqStudy *study);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must be null or come from this library and not be used again.
 */
void adq_string_free(char *s);

/**
 * Message of the last failed call on this thread, or null. Valid until
 * the next library call on the same thread.
 */
const char *adq_last_error(void);

/**
 * Library version as a static string.
 */
const char *adq_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ADEQUACY_H */
