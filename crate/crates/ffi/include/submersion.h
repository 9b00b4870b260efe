#ifndef SUBMERSION_H
#define SUBMERSION_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define SUB_VERDICT_ALL_HOLD 0

#define SUB_VERDICT_ERRORS 1

#define SUB_VERDICT_VIOLATED 2

typedef enum SubStatus {
  SUB_STATUS_OK = 0,
  SUB_STATUS_NULL_POINTER = 1,
  SUB_STATUS_INVALID_UTF8 = 2,
  SUB_STATUS_INVALID_ARGUMENT = 3,
  SUB_STATUS_PARSE = 4,
  SUB_STATUS_CONFIG = 5,
  SUB_STATUS_DOMAIN = 6,
  SUB_STATUS_NUMERICAL = 7,
  SUB_STATUS_MODEL = 8,
  SUB_STATUS_IO = 9,
  SUB_STATUS_PANIC = 10,
} SubStatus;

/**
 * Loaded configuration.
 */
typedef struct SubConfig SubConfig;

/**
 * Result of a verification run.
 */
typedef struct SubReport SubReport;

/**
 * Flat view of one theorem entry. `theorem` points to a static string.
 * The numeric fields are NaN when `has_result` is false.
 */
typedef struct SubEntry {
  size_t point_index;
  const char *theorem;
  bool has_result;
  double lhs;
  double rhs;
  double gap;
  bool holds;
  bool equality;
} SubEntry;

typedef struct SubLemmaResult {
  double b;
  double gap;
  bool equality;
  double condition_residual;
  double constraint_residual;
} SubLemmaResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *sub_last_error(void);

/**
 * Library version as a static string.
 */
const char *sub_version(void);

/**
 * Number of theorem ids known to the library.
 */
size_t sub_theorem_count(void);

/**
 * Static name of theorem `i`, or NULL when out of range.
 */
const char *sub_theorem_name(size_t i);

/**
 * Parse a configuration from JSON text.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a writable pointer.
 */
enum SubStatus sub_config_from_json(const char *json, struct SubConfig **out);

/**
 * Load a configuration file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a writable pointer.
 */
enum SubStatus sub_config_from_file(const char *path, struct SubConfig **out);

/**
 * Load a built-in catalog entry by name.
 *
 * # Safety
 * `name` must be a NUL-terminated string and `out` a writable pointer.
 */
enum SubStatus sub_catalog_load(const char *name, struct SubConfig **out);

/**
 * Number of catalog entries.
 */
size_t sub_catalog_count(void);

/**
 * Name of catalog entry `i` as a newly allocated string (free with
 * [`sub_string_free`]), or NULL when out of range.
 */
char *sub_catalog_name(size_t i);

/**
 * Config hash as a newly allocated hex string.
 *
 * # Safety
 * `cfg` must come from one of the loaders and `out` must be writable.
 */
enum SubStatus sub_config_hash(const struct SubConfig *cfg, char **out);

/**
 * # Safety
 * `cfg` must be NULL or a handle not yet freed.
 */
void sub_config_free(struct SubConfig *cfg);

/**
 * Run the configured theorems. `point` selects one point (0-based);
 * pass a negative value to run all of them.
 *
 * # Safety
 * `cfg` must be a live config handle and `out` a writable pointer.
 */
enum SubStatus sub_verify(const struct SubConfig *cfg, int64_t point, struct SubReport **out);

/**
 * # Safety
 * `report` must be NULL or a handle not yet freed.
 */
void sub_report_free(struct SubReport *report);

/**
 * One of the `SUB_VERDICT_*` constants, or -1 for a NULL handle.
 *
 * # Safety
 * `report` must be NULL or a live report handle.
 */
int32_t sub_report_verdict(const struct SubReport *report);

/**
 * # Safety
 * `report` must be NULL or a live report handle.
 */
size_t sub_report_len(const struct SubReport *report);

/**
 * Copy entry `i` into `out`.
 *
 * # Safety
 * `report` must be a live report handle and `out` writable.
 */
enum SubStatus sub_report_entry(const struct SubReport *report, size_t i, struct SubEntry *out);

/**
 * Error message of entry `i` as a newly allocated string, or NULL when
 * the entry has a result.
 *
 * # Safety
 * `report` must be NULL or a live report handle.
 */
char *sub_report_entry_error(const struct SubReport *report, size_t i);

/**
 * Full report as JSON. Free the string with [`sub_string_free`].
 *
 * # Safety
 * `report` must be a live report handle and `out` writable.
 */
enum SubStatus sub_report_json(const struct SubReport *report, char **out);

/**
 * Report as CSV. Free the string with [`sub_string_free`].
 *
 * # Safety
 * `report` must be a live report handle and `out` writable.
 */
enum SubStatus sub_report_csv(const struct SubReport *report, char **out);

/**
 * # Safety
 * `s` must be NULL or a string returned by this library and not yet freed.
 */
void sub_string_free(char *s);

/**
 * Solve `b` for `a[0..k]` so the lemma constraint holds with equality
 * and evaluate `2 a1 a2 - b`.
 *
 * # Safety
 * `a` must point to `k` readable doubles and `out` must be writable.
 */
enum SubStatus sub_lemma(const double *a, size_t k, struct SubLemmaResult *out);

/**
 * Evaluate an expression in variables `x1..xn` at `x[0..n]`.
 *
 * # Safety
 * `text` must be NUL-terminated, `x` must hold `n` doubles and `out`
 * must be writable.
 */
enum SubStatus sub_expr_eval(const char *text, const double *x, size_t n, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SUBMERSION_H */
