#ifndef WEBCORPUS_H
#define WEBCORPUS_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Number of values in a MinHash signature.
 */
#define WC_SIGNATURE_LEN 117

/**
 * Result codes for fallible calls.
 */
typedef enum {
  WC_STATUS_OK = 0,
  /**
   * A pointer argument was NULL or text was not valid UTF-8.
   */
  WC_STATUS_INVALID_ARGUMENT = 1,
  /**
   * File could not be read or written.
   */
  WC_STATUS_IO = 2,
  /**
   * File contents or configuration were malformed.
   */
  WC_STATUS_PARSE = 3,
  /**
   * Any other failure; see `wc_last_error_message`.
   */
  WC_STATUS_INTERNAL = 4,
} WcStatus;

/**
 * Which rule set to apply in `wc_filter_report_json`.
 */
typedef enum {
  WC_WEB_SOURCE_WET = 0,
  WC_WEB_SOURCE_WARC = 1,
} WcWebSource;

/**
 * Opaque handle to a loaded n-gram classifier.
 */
typedef struct WcClassifier WcClassifier;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static string (do not free).
 */
const char *wc_version(void);

/**
 * Message for the most recent error on this thread, or NULL. Free with
 * `wc_string_free`.
 */
char *wc_last_error_message(void);

/**
 * Release a string returned by this library.
 *
 * # Safety
 * `ptr` must be NULL or a pointer previously returned by a `wc_*`
 * function that documents `wc_string_free` ownership, not yet freed.
 */
void wc_string_free(char *ptr);

/**
 * Load a classifier model file. Returns NULL on failure (see
 * `wc_last_error_message`).
 *
 * # Safety
 * `path` must be a NUL-terminated string valid for reads.
 */
WcClassifier *wc_classifier_load(const char *path);

/**
 * Score a text with a loaded classifier; the result is a confidence in
 * [0,1]. Returns -1.0 on invalid arguments.
 *
 * # Safety
 * `handle` must come from `wc_classifier_load` and not be freed;
 * `text` must be a NUL-terminated string valid for reads.
 */
double wc_classifier_score(const WcClassifier *handle, const char *text);

/**
 * # Safety
 * `handle` must be NULL or a pointer from `wc_classifier_load`, not yet
 * freed.
 */
void wc_classifier_free(WcClassifier *handle);

/**
 * Compute the 117-value MinHash signature of a text into `out` (an array
 * of `WC_SIGNATURE_LEN` u64 slots).
 *
 * # Safety
 * `text` must be a NUL-terminated string valid for reads; `out` must be
 * valid for writes of `WC_SIGNATURE_LEN` u64 values.
 */
WcStatus wc_minhash_signature(const char *text, uint64_t seed, uint64_t *out);

/**
 * Apply the web quality rules to a text and return the full per-rule
 * report as a JSON string in `*out` (free with `wc_string_free`).
 * Thresholds are the shipped defaults.
 *
 * # Safety
 * `text` must be a NUL-terminated string valid for reads; `out` must be
 * valid for writes.
 */
WcStatus wc_filter_report_json(const char *text, WcWebSource source, char **out);

/**
 * Extract multiple-choice questions from a text and return the canonical
 * blocks as a JSON array of strings in `*out` (free with
 * `wc_string_free`). An empty array means no items were found.
 *
 * # Safety
 * `text` must be a NUL-terminated string valid for reads; `out` must be
 * valid for writes.
 */
WcStatus wc_mcq_extract_json(const char *text, char **out);

/**
 * Run a full pipeline from a TOML configuration file (the same format the
 * CLI consumes).
 *
 * # Safety
 * `config_path` must be a NUL-terminated string valid for reads.
 */
WcStatus wc_run_pipeline(const char *config_path);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* WEBCORPUS_H */
