#ifndef PROAUTH_H
#define PROAUTH_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum PaStatus {
  PA_STATUS_OK = 0,
  PA_STATUS_NULL_POINTER = 1,
  PA_STATUS_INVALID_ARGUMENT = 2,
  /**
   * Session calls out of order, such as completing with nothing pending.
   */
  PA_STATUS_STATE = 3,
  PA_STATUS_DECODE = 4,
  /**
   * The output buffer is too small; the required length was still written.
   */
  PA_STATUS_BUFFER_TOO_SMALL = 5,
  PA_STATUS_CONFIG = 6,
  PA_STATUS_PANIC = 7,
} PaStatus;

typedef struct PaTag PaTag;

typedef struct PaVerifier PaVerifier;

/**
 * Setup for [`pa_pair_new`]. Fill with [`pa_pair_config_default`] first.
 */
typedef struct PaPairConfig {
  /**
   * Wire protocol id: 1, 2 or 3.
   */
  uint8_t protocol;
  uint32_t n;
  uint32_t l;
  /**
   * Unused by protocol 1.
   */
  uint32_t keyword_len;
  /**
   * Entries refreshed per session by protocol 1; 0 refreshes every entry.
   */
  uint32_t sparse_count;
  uint32_t k_private;
  /**
   * Parity dimensions for protocol 3; 0 picks round(log2(n*l)).
   */
  uint32_t dims;
  /**
   * Watermark bits for protocol 3; negative fills half the frame.
   */
  int64_t watermark_bits;
  /**
   * 0 = xorshift64*, 1 = splitmix64.
   */
  uint8_t generator;
} PaPairConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Static name of a status code.
 */
const char *pa_status_name(enum PaStatus status);

/**
 * Message for the latest failure on this thread, or null. Valid until the next failing call.
 */
const char *pa_last_error(void);

/**
 * # Safety
 * `out` must be null or point to writable memory for one `PaPairConfig`.
 */
enum PaStatus pa_pair_config_default(struct PaPairConfig *out);

/**
 * Creates a synchronized tag and verifier.
 *
 * # Safety
 * `cfg` must point to a valid `PaPairConfig`; `tag_out` and `verifier_out`
 * must point to writable handle slots.
 */
enum PaStatus pa_pair_new(const struct PaPairConfig *cfg,
                          uint64_t vector_seed,
                          uint64_t tag_seed,
                          struct PaTag **tag_out,
                          struct PaVerifier **verifier_out);

/**
 * # Safety
 * `tag` must be null or a handle from [`pa_pair_new`] not yet freed.
 */
void pa_tag_free(struct PaTag *tag);

/**
 * # Safety
 * `verifier` must be null or a handle from [`pa_pair_new`] not yet freed.
 */
void pa_verifier_free(struct PaVerifier *verifier);

/**
 * Starts a session and writes its key message frame.
 *
 * On `PA_STATUS_BUFFER_TOO_SMALL` the session stays begun and the same frame
 * is returned by the next call.
 *
 * # Safety
 * `tag` must be a live handle, `buf` null or writable for `cap` bytes, and
 * `len_out` writable.
 */
enum PaStatus pa_tag_begin(struct PaTag *tag, uint8_t *buf, size_t cap, size_t *len_out);

/**
 * Applies the verifier's reply to the pending session.
 *
 * # Safety
 * `tag` must be a live handle.
 */
enum PaStatus pa_tag_complete(struct PaTag *tag, bool open);

/**
 * # Safety
 * `tag` must be a live handle and `out` writable.
 */
enum PaStatus pa_tag_session_counter(const struct PaTag *tag, uint32_t *out);

/**
 * Judges a key message frame. A frame that fails to decode is answered
 * with DoNotOpen and `PA_STATUS_DECODE`.
 *
 * # Safety
 * `verifier` must be a live handle, `frame` readable for `len` bytes, and
 * `open_out` writable.
 */
enum PaStatus pa_verifier_handle(struct PaVerifier *verifier,
                                 const uint8_t *frame,
                                 size_t len,
                                 bool *open_out);

/**
 * Writes a verdict frame.
 *
 * # Safety
 * `buf` must be null or writable for `cap` bytes; `len_out` writable.
 */
enum PaStatus pa_verdict_encode(bool open, uint8_t *buf, size_t cap, size_t *len_out);

/**
 * # Safety
 * `frame` must be readable for `len` bytes and `open_out` writable.
 */
enum PaStatus pa_verdict_decode(const uint8_t *frame, size_t len, bool *open_out);

/**
 * Whether tag and verifier hold the same vector, counter and seed.
 *
 * # Safety
 * Both handles must be live and `out` writable.
 */
enum PaStatus pa_pair_in_sync(const struct PaTag *tag,
                              const struct PaVerifier *verifier,
                              bool *out);

/**
 * Runs the experiments of a JSON config and returns the CSV report.
 * Free `*csv_out` with [`pa_string_free`].
 *
 * # Safety
 * `config_json` must be a NUL-terminated string; `csv_out` and `all_pass` writable.
 */
enum PaStatus pa_run_experiments(const char *config_json, char **csv_out, bool *all_pass);

/**
 * # Safety
 * `s` must be null or a string returned by this library, not yet freed.
 */
void pa_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PROAUTH_H */
