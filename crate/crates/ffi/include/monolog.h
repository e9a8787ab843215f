#ifndef MONOLOG_H
#define MONOLOG_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum MonologLabel {
  MONOLOG_LABEL_ENTAIL = 0,
  MONOLOG_LABEL_CONTRADICT = 1,
  MONOLOG_LABEL_NEUTRAL = 2,
} MonologLabel;

typedef enum MonologStatus {
  MONOLOG_STATUS_OK = 0,
  MONOLOG_STATUS_ERR_NULL = 1,
  MONOLOG_STATUS_ERR_UTF8 = 2,
  MONOLOG_STATUS_ERR_PARSE = 3,
  MONOLOG_STATUS_ERR_IO = 4,
  MONOLOG_STATUS_ERR_SCORER = 5,
  MONOLOG_STATUS_ERR_INVALID = 6,
  MONOLOG_STATUS_ERR_PANIC = 7,
} MonologStatus;

/**
 * Opaque engine handle.
 */
typedef struct MonologEngine MonologEngine;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Creates an offline engine.
 *
 * `kb_path` and `paraphrase_table` are optional TSV files (NULL to skip). With `bundled_kb`
 * false only the triples from `kb_path` are used.
 *
 * # Safety
 * String arguments must be NULL or NUL-terminated; `out` must be a valid pointer.
 */
enum MonologStatus monolog_engine_new(const char *kb_path,
                                      const char *paraphrase_table,
                                      bool bundled_kb,
                                      struct MonologEngine **out);

/**
 * # Safety
 * `engine` must be NULL or a handle from [`monolog_engine_new`] not yet freed.
 */
void monolog_engine_free(struct MonologEngine *engine);

/**
 * Sets the beam width (at least 1).
 *
 * # Safety
 * `engine` must be a live handle.
 */
enum MonologStatus monolog_engine_set_beam(struct MonologEngine *engine, size_t beam_width);

/**
 * Sets the maximum number of rewrite steps.
 *
 * # Safety
 * `engine` must be a live handle.
 */
enum MonologStatus monolog_engine_set_max_depth(struct MonologEngine *engine, size_t max_depth);

/**
 * Turns the syntactic-variation generator on or off.
 *
 * # Safety
 * `engine` must be a live handle.
 */
enum MonologStatus monolog_engine_set_syntactic_variation(struct MonologEngine *engine, bool on);

/**
 * Classifies a pair given as one CoNLL-U sentence each.
 *
 * If `result_json` is not NULL it receives the full result as JSON (label, trace, path,
 * contradiction check, expansions, warnings).
 *
 * # Safety
 * `engine` must be a live handle; `premise` and `hypothesis` NUL-terminated; `label` valid;
 * `result_json` NULL or valid.
 */
enum MonologStatus monolog_classify_conllu(const struct MonologEngine *engine,
                                           const char *premise,
                                           const char *hypothesis,
                                           enum MonologLabel *label,
                                           char **result_json);

/**
 * Writes the polarity-annotated text of each sentence in `conllu`, one per line.
 *
 * # Safety
 * `engine` must be a live handle; `conllu` NUL-terminated; `out` valid.
 */
enum MonologStatus monolog_annotate_conllu(const struct MonologEngine *engine,
                                           const char *conllu,
                                           char **out);

/**
 * Frees a string returned by this library.
 *
 * # Safety
 * `s` must be NULL or a string from this library not yet freed.
 */
void monolog_string_free(char *s);

/**
 * Message for the last failed call on this thread; empty after a success. Valid until the
 * next call into the library on this thread.
 */
const char *monolog_last_error(void);

/**
 * Static label name such as "ENTAIL".
 */
const char *monolog_label_name(enum MonologLabel label);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MONOLOG_H */
