#ifndef FJEUCS_H
#define FJEUCS_H

/* Generated by cbindgen; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum FjStatus {
  FJ_STATUS_OK = 0,
  /**
   * The analysis finished and found a disallowed effect.
   */
  FJ_STATUS_VIOLATION = 1,
  FJ_STATUS_PARSE_ERROR = 2,
  /**
   * Type error or unknown entry point.
   */
  FJ_STATUS_ANALYSIS_ERROR = 3,
  FJ_STATUS_INVALID_ARGUMENT = 4,
  FJ_STATUS_INTERNAL = 5,
} FjStatus;

typedef struct FjPolicy FjPolicy;

typedef struct FjProgram FjProgram;

typedef struct FjReport FjReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Parses program source into `*out`.
 *
 * # Safety
 * `src` must be a NUL-terminated string and `out` a valid pointer.
 */
enum FjStatus fj_parse_program(const char *src, struct FjProgram **out);

/**
 * Parses a policy file's contents into `*out`.
 *
 * # Safety
 * `src` must be a NUL-terminated string and `out` a valid pointer.
 */
enum FjStatus fj_parse_policy(const char *src, struct FjPolicy **out);

/**
 * Analyzes `entry` (`Class.method`) and stores the report in `*out`.
 * `context_policy` is `"kcfa"` (using `k`) or `"constant"`; null means
 * `"kcfa"`. Returns `Ok` or `Violation` when a report was produced.
 *
 * # Safety
 * Handles must come from this library; strings must be NUL-terminated.
 */
enum FjStatus fj_check(const struct FjProgram *program,
                       const struct FjPolicy *policy,
                       const char *entry,
                       const char *context_policy,
                       uint32_t k,
                       struct FjReport **out);

/**
 * 1 if compliant, 0 if not, -1 for a null handle.
 *
 * # Safety
 * `report` must come from [`fj_check`] or be null.
 */
int fj_report_is_compliant(const struct FjReport *report);

/**
 * Number of disallowed monoid elements in the inferred effect.
 *
 * # Safety
 * `report` must come from [`fj_check`] or be null.
 */
size_t fj_report_witness_count(const struct FjReport *report);

/**
 * The JSON report; borrowed, valid while `report` lives.
 *
 * # Safety
 * `report` must come from [`fj_check`] or be null.
 */
const char *fj_report_json(const struct FjReport *report);

/**
 * A fresh copy of the human-readable report; free it with [`fj_string_free`].
 *
 * # Safety
 * `report` must come from [`fj_check`] or be null.
 */
char *fj_report_text(const struct FjReport *report);

/**
 * Message of the last failure on this thread, or an empty string.
 */
const char *fj_last_error(void);

const char *fj_version(void);

/**
 * # Safety
 * `s` must come from this library or be null.
 */
void fj_string_free(char *s);

/**
 * # Safety
 * `p` must come from [`fj_parse_program`] or be null.
 */
void fj_program_free(struct FjProgram *p);

/**
 * # Safety
 * `p` must come from [`fj_parse_policy`] or be null.
 */
void fj_policy_free(struct FjPolicy *p);

/**
 * # Safety
 * `r` must come from [`fj_check`] or be null.
 */
void fj_report_free(struct FjReport *r);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FJEUCS_H */
