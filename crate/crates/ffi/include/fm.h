#ifndef FM_H
#define FM_H

/* Generated by cbindgen. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum FmStatus {
  FM_STATUS_OK = 0,
  FM_STATUS_NULL_ARGUMENT = 1,
  FM_STATUS_INVALID_UTF8 = 2,
  FM_STATUS_PARSE_ERROR = 3,
  FM_STATUS_SEMANTIC_ERROR = 4,
  FM_STATUS_NOT_FOUND = 5,
  FM_STATUS_BAD_ARGUMENT = 6,
  FM_STATUS_INADMISSIBLE = 7,
  FM_STATUS_STEP_LIMIT = 8,
  FM_STATUS_SIMULATION_ERROR = 9,
  /**
   * The simulation finished but left tokens stuck; the trace is still
   * returned.
   */
  FM_STATUS_STUCK_TOKENS = 10,
  FM_STATUS_PANIC = 11,
} FmStatus;

/**
 * A parsed and bound model.
 */
typedef struct FmDocument FmDocument;

/**
 * The records of one simulation run.
 */
typedef struct FmTrace FmTrace;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Parses DSL text into a document. On success `*out` owns the new handle.
 *
 * # Safety
 * `source` must be a valid NUL-terminated string and `out` a valid pointer.
 */
enum FmStatus fm_document_parse(const char *source, struct FmDocument **out);

/**
 * Translates `count` class-diagram sources into one document.
 *
 * # Safety
 * `sources` must point to `count` valid NUL-terminated strings.
 */
enum FmStatus fm_document_import_classes(const char *const *sources,
                                         size_t count,
                                         struct FmDocument **out);

/**
 * # Safety
 * `doc` must be null or a handle from this library not yet freed.
 */
void fm_document_free(struct FmDocument *doc);

/**
 * Checks the static rules. `*errors` receives the number of errors and,
 * when `report` is not null, `*report` the full diagnostic listing.
 *
 * # Safety
 * `doc` must be a live handle; `errors` must be valid; `report` may be null.
 */
enum FmStatus fm_document_validate(const struct FmDocument *doc, size_t *errors, char **report);

/**
 * Renders the model as DOT. `overlay_events` is null or a comma-separated
 * list of event names to draw as regions.
 *
 * # Safety
 * `doc` must be a live handle and `out` a valid pointer.
 */
enum FmStatus fm_document_render_dot(const struct FmDocument *doc,
                                     const char *overlay_events,
                                     char **out);

/**
 * Prints the document back as DSL text.
 *
 * # Safety
 * `doc` must be a live handle and `out` a valid pointer.
 */
enum FmStatus fm_document_to_dsl(const struct FmDocument *doc, char **out);

/**
 * Runs `count` methods in order over one shared state. `args[i]` is null
 * or the `k=v` list for `methods[i]`; `args` itself may be null.
 * `max_steps` of 0 keeps the default limit.
 *
 * # Safety
 * `methods` must point to `count` valid strings, `args` to `count`
 * nullable strings or be null, and `out` must be valid.
 */
enum FmStatus fm_run_method(const struct FmDocument *doc,
                            const char *const *methods,
                            const char *const *args,
                            size_t count,
                            uint64_t max_steps,
                            struct FmTrace **out);

/**
 * Runs a comma-separated event sequence from the empty state. When
 * `chronology` is not null the sequence must be admissible under it.
 * `bindings` is null or a `k=v` list used by trigger effects.
 *
 * # Safety
 * String arguments must be valid or null where allowed; `out` must be valid.
 */
enum FmStatus fm_simulate_sequence(const struct FmDocument *doc,
                                   const char *sequence,
                                   const char *chronology,
                                   const char *bindings_list,
                                   uint64_t max_steps,
                                   struct FmTrace **out);

/**
 * Number of records in the trace, or 0 for a null handle.
 *
 * # Safety
 * `trace` must be null or a live handle.
 */
size_t fm_trace_len(const struct FmTrace *trace);

/**
 * Number of tokens left stuck by the run, or 0 for a null handle.
 *
 * # Safety
 * `trace` must be null or a live handle.
 */
size_t fm_trace_stuck_count(const struct FmTrace *trace);

/**
 * # Safety
 * `trace` must be a live handle and `out` a valid pointer.
 */
enum FmStatus fm_trace_to_tsv(const struct FmTrace *trace, char **out);

/**
 * # Safety
 * `trace` must be a live handle and `out` a valid pointer.
 */
enum FmStatus fm_trace_to_json(const struct FmTrace *trace, char **out);

/**
 * # Safety
 * `trace` must be null or a handle from this library not yet freed.
 */
void fm_trace_free(struct FmTrace *trace);

/**
 * # Safety
 * `s` must be null or a string returned by this library not yet freed.
 */
void fm_string_free(char *s);

/**
 * The message of the last failed call on this thread, or an empty string.
 * Valid until the next call into the library on the same thread.
 */
const char *fm_last_error_message(void);

const char *fm_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FM_H */
