#ifndef VOICELENS_H
#define VOICELENS_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Prompt template selector.
 */
typedef enum VlPromptStyle {
  VL_PROMPT_STYLE_COT_THEMATIC = 0,
  VL_PROMPT_STYLE_ZERO_SHOT_THEMATIC = 1,
} VlPromptStyle;

/**
 * Sentiment class, in confusion-matrix order.
 */
typedef enum VlSentiment {
  VL_SENTIMENT_POSITIVE = 0,
  VL_SENTIMENT_NEGATIVE = 1,
  VL_SENTIMENT_NEUTRAL = 2,
} VlSentiment;

typedef enum VlStatus {
  VL_STATUS_OK = 0,
  VL_STATUS_NULL_POINTER = 1,
  VL_STATUS_INVALID_UTF8 = 2,
  VL_STATUS_IO = 3,
  VL_STATUS_PARSE = 4,
  VL_STATUS_INVALID_ARGUMENT = 5,
  VL_STATUS_PANIC = 6,
} VlStatus;

typedef struct VlCodebook VlCodebook;

typedef struct VlCorpus VlCorpus;

typedef struct VlLexicon VlLexicon;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failure on this thread, or null. Valid until the
 * next failing call on the same thread; do not free.
 */
const char *vl_last_error_message(void);

/**
 * Release a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void vl_string_free(char *s);

/**
 * # Safety
 * `path` must be a nul-terminated string; `out` must be writable.
 */
enum VlStatus vl_codebook_load(const char *path, struct VlCodebook **out);

/**
 * Parse a codebook from CSV text.
 *
 * # Safety
 * `csv_text` must be a nul-terminated string; `out` must be writable.
 */
enum VlStatus vl_codebook_from_csv(const char *csv_text, struct VlCodebook **out);

/**
 * # Safety
 * `cb` must be null or a handle from this library, not yet freed.
 */
void vl_codebook_free(struct VlCodebook *cb);

/**
 * Number of child codes.
 *
 * # Safety
 * `cb` must be a live handle.
 */
enum VlStatus vl_codebook_child_count(const struct VlCodebook *cb, size_t *out);

/**
 * Load a corpus; the format follows the extension (`.jsonl` or CSV).
 *
 * # Safety
 * `path` must be a nul-terminated string; `out` must be writable.
 */
enum VlStatus vl_corpus_load(const char *path, struct VlCorpus **out);

/**
 * # Safety
 * `corpus` must be null or a handle from this library, not yet freed.
 */
void vl_corpus_free(struct VlCorpus *corpus);

/**
 * # Safety
 * `corpus` must be a live handle.
 */
enum VlStatus vl_corpus_len(const struct VlCorpus *corpus, size_t *out);

/**
 * Text of paragraph `index` as a new string.
 *
 * # Safety
 * `corpus` must be a live handle; `out` must be writable.
 */
enum VlStatus vl_corpus_paragraph_text(const struct VlCorpus *corpus, size_t index, char **out);

/**
 * The bundled sentiment lexicon.
 *
 * # Safety
 * `out` must be writable.
 */
enum VlStatus vl_lexicon_bundled(struct VlLexicon **out);

/**
 * # Safety
 * Paths must be nul-terminated strings; `out` must be writable.
 */
enum VlStatus vl_lexicon_load(const char *valence_path,
                              const char *boosters_path,
                              const char *negators_path,
                              struct VlLexicon **out);

/**
 * # Safety
 * `lex` must be null or a handle from this library, not yet freed.
 */
void vl_lexicon_free(struct VlLexicon *lex);

/**
 * Compound score of `text` in [-1, 1].
 *
 * # Safety
 * `lex` must be a live handle; `text` nul-terminated; `out` writable.
 */
enum VlStatus vl_lexicon_score(const struct VlLexicon *lex, const char *text, double *out);

/**
 * Three-way class for a compound score.
 */
enum VlSentiment vl_classify_compound(double compound);

/**
 * Thematic prompt for one paragraph.
 *
 * # Safety
 * `cb` must be a live handle; `paragraph` nul-terminated; `out` writable.
 */
enum VlStatus vl_build_thematic_prompt(const struct VlCodebook *cb,
                                       const char *paragraph,
                                       enum VlPromptStyle style,
                                       char **out);

/**
 * Sentiment prompt for one paragraph.
 *
 * # Safety
 * `paragraph` nul-terminated; `out` writable.
 */
enum VlStatus vl_build_sentiment_prompt(const char *paragraph, char **out);

/**
 * Parse a thematic response into JSON
 * `{"labels":[{"level":..,"label":..}],"reasoning":..,"unmatched":[..]}`.
 *
 * # Safety
 * `cb` must be a live handle; `raw` nul-terminated; `out` writable.
 */
enum VlStatus vl_parse_thematic_response(const struct VlCodebook *cb, const char *raw, char **out);

/**
 * Parse a sentiment response into JSON `{"sentiment":..,"reasoning":..}`.
 *
 * # Safety
 * `raw` nul-terminated; `out` writable.
 */
enum VlStatus vl_parse_sentiment_response(const char *raw, char **out);

/**
 * Cohen's kappa between two 0/1 vectors of length `len`.
 *
 * # Safety
 * `pred` and `truth` must point to `len` readable bytes.
 */
enum VlStatus vl_cohen_kappa(const uint8_t *pred, const uint8_t *truth, size_t len, double *out);

/**
 * Balanced accuracy (TPR + TNR) / 2 between two 0/1 vectors.
 *
 * # Safety
 * `pred` and `truth` must point to `len` readable bytes.
 */
enum VlStatus vl_auc(const uint8_t *pred, const uint8_t *truth, size_t len, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* VOICELENS_H */
