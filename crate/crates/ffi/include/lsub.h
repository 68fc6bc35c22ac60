#ifndef LSUB_H
#define LSUB_H

/* Generated by cbindgen from src/lib.rs. Do not edit. */

#include <stdint.h>

/*
 Status codes shared by all fallible calls.
 */
typedef enum LsubStatus {
  /*
   The run completed and every gating criterion passed.
   */
  LSUB_STATUS_OK = 0,
  /*
   The run completed and at least one gating criterion failed.
   */
  LSUB_STATUS_FAIL = 1,
  /*
   The input could not be loaded or evaluated.
   */
  LSUB_STATUS_ERROR = 2,
  /*
   A required pointer argument was null.
   */
  LSUB_STATUS_NULL_ARGUMENT = 3,
  /*
   A string argument was not valid UTF-8 or an option was out of range.
   */
  LSUB_STATUS_INVALID_ARGUMENT = 4,
  /*
   The library caught an internal panic.
   */
  LSUB_STATUS_PANIC = 5,
} LsubStatus;

/*
 Opaque verification report.
 */
typedef struct LsubReport LsubReport;

/*
 Run options. Obtain defaults from `lsub_options_default`.
 */
typedef struct LsubOptions {
  uint32_t samples;
  uint64_t seed;
  double tol;
  /*
   0.5 or 1.
   */
  double kappa;
  /*
   Comma separated suite names, or null for all suites.
   */
  const char *suites;
  /*
   Half-dimension for `model-r2n1`; 0 keeps the default.
   */
  uint32_t n;
  /*
   Structure sign for `model-r2n1`; 0 keeps the default.
   */
  double epsilon;
} LsubOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Library version as a static NUL-terminated string.
 */
const char *lsub_version(void);

/*
 Default options: 25 samples, seed 42, tol 1e-9, kappa 0.5, all suites.
 */
struct LsubOptions lsub_options_default(void);

/*
 Message of the last failed call on this thread, or null. The pointer stays
 valid until the next library call on this thread.
 */
const char *lsub_last_error(void);

/*
 Verify a catalog entry or model file. `options` may be null for defaults.
 On `Ok` or `Fail` a report is stored in `*out`; otherwise `*out` is null.

 # Safety
 `input` must be a NUL-terminated string, `options` null or valid, and `out`
 a valid pointer to writable storage.
 */
enum LsubStatus lsub_verify(const char *input,
                            const struct LsubOptions *options,
                            struct LsubReport **out);

/*
 1 when every gating criterion passed, 0 when not, -1 for a null report.

 # Safety
 `report` must be null or a pointer returned by `lsub_verify`.
 */
int lsub_report_pass(const struct LsubReport *report);

/*
 Number of failed gating criteria, or -1 for a null report.

 # Safety
 `report` must be null or a pointer returned by `lsub_verify`.
 */
int lsub_report_failed_count(const struct LsubReport *report);

/*
 Report as JSON. Free with `lsub_string_free`.

 # Safety
 `report` must be null or a pointer returned by `lsub_verify`.
 */
char *lsub_report_json(const struct LsubReport *report);

/*
 Report as Markdown tables. Free with `lsub_string_free`.

 # Safety
 `report` must be null or a pointer returned by `lsub_verify`.
 */
char *lsub_report_markdown(const struct LsubReport *report);

/*
 Release a report. Null is ignored.

 # Safety
 `report` must be null or a pointer returned by `lsub_verify` that has not
 been freed.
 */
void lsub_report_free(struct LsubReport *report);

/*
 Catalog entry names, one per line. Free with `lsub_string_free`.
 */
char *lsub_catalog_names(void);

/*
 Catalog entry as a model JSON document, or null for an unknown name.
 Free with `lsub_string_free`.

 # Safety
 `name` must be a NUL-terminated string.
 */
char *lsub_catalog_export(const char *name);

/*
 Release a string returned by this library. Null is ignored.

 # Safety
 `s` must be null or a string returned by this library that has not been
 freed.
 */
void lsub_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LSUB_H */
