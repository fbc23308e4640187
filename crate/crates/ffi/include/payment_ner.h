/* C interface for the payment-ner tagging pipeline. */

#ifndef PAYMENT_NER_H
#define PAYMENT_NER_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every FFI entry point.
 */
typedef enum pn_status {
  PN_OK = 0,
  PN_NULL_ARGUMENT = 1,
  PN_INVALID_UTF8 = 2,
  PN_IO_ERROR = 3,
  PN_PARSE_ERROR = 4,
  PN_TAG_ERROR = 5,
  PN_PANIC = 6,
} pn_status;

/**
 * Opaque tagger handle. Immutable after construction; safe to share
 * across threads.
 */
typedef struct pn_tagger pn_tagger;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static string; never freed by the caller.
 */
const char *pn_version(void);

/**
 * Message for the most recent failure on this thread. The pointer is
 * valid until the next payment-ner call on the same thread; do not free.
 */
const char *pn_last_error_message(void);

/**
 * Loads a trained CRF model file into a tagger handle.
 *
 * # Safety
 * `model_path` must be a valid NUL-terminated string and `out` a valid
 * pointer to receive the handle.
 */
enum pn_status pn_tagger_load_crf(const char *model_path, struct pn_tagger **out);

/**
 * Creates a rule-based baseline tagger (no model file required).
 *
 * # Safety
 * `out` must be a valid pointer to receive the handle.
 */
enum pn_status pn_tagger_new_baseline(struct pn_tagger **out);

/**
 * Tags one message. `format` is one of `MT103`, `PAIN001`, `ACH`, `SEPA`,
 * `OTHER`. On success `*out_json` receives a JSON document:
 *
 * ```json
 * {"spans": [{"entity_type": "PERSON_NAME", "token_start": 1,
 *             "token_end": 2, "char_start": 5, "char_end": 13,
 *             "text": "JOHN DOE"}]}
 * ```
 *
 * `char_start`/`char_end` are byte offsets into the UTF-8 input text.
 *
 * # Safety
 * All pointers must be valid; free `*out_json` with [`pn_string_free`].
 */
enum pn_status pn_tagger_tag_json(const struct pn_tagger *tagger,
                                  const char *format,
                                  const char *text,
                                  char **out_json);

/**
 * Frees a string returned by this library.
 *
 * # Safety
 * `s` must have come from this library and not been freed already.
 */
void pn_string_free(char *s);

/**
 * Frees a tagger handle.
 *
 * # Safety
 * `tagger` must have come from this library and not been freed already.
 */
void pn_tagger_free(struct pn_tagger *tagger);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PAYMENT_NER_H */
