#ifndef TATEKIT_H
#define TATEKIT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every call. The nonzero codes follow the command line tool's
 * exit codes where they overlap.
 */
typedef enum TkStatus {
  TK_STATUS_OK = 0,
  TK_STATUS_INTERNAL = 1,
  TK_STATUS_INVALID_ARGUMENT = 2,
  TK_STATUS_CAP_EXCEEDED = 3,
  TK_STATUS_NOT_FOUND = 4,
  TK_STATUS_NULL_POINTER = 5,
  TK_STATUS_PANIC = 6,
} TkStatus;

/**
 * A certified twin pair.
 */
typedef struct TkCertificate TkCertificate;

/**
 * A curve `y^2 = x^3 + Ax + B` over `F_p`.
 */
typedef struct TkCurve TkCurve;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message of this thread into `buf` (NUL
 * terminated, truncated to `len`) and returns the full message length.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t tk_last_error(char *buf, size_t len);

/**
 * Creates a curve; fails on a singular curve or an unsupported `p`.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for a handle.
 */
enum TkStatus tk_curve_new(uint64_t p, int64_t a, int64_t b, struct TkCurve **out);

/**
 * # Safety
 * `curve` must be null or a handle from [`tk_curve_new`] not yet freed.
 */
void tk_curve_free(struct TkCurve *curve);

/**
 * Trace of Frobenius, `p + 1 - #E(F_p)`.
 *
 * # Safety
 * `curve` must be a live handle and `out` writable.
 */
enum TkStatus tk_curve_trace(const struct TkCurve *curve, int64_t *out);

/**
 * # Safety
 * `curve` must be a live handle and `out` writable.
 */
enum TkStatus tk_curve_j_invariant(const struct TkCurve *curve, uint64_t *out);

/**
 * Frobenius on `E[n]` as a row-major 2x2 matrix over `Z/n`.
 *
 * # Safety
 * `curve` must be a live handle and `out` must point to 4 writable values.
 */
enum TkStatus tk_frobenius_matrix(const struct TkCurve *curve,
                                  uint64_t n,
                                  size_t cap,
                                  uint64_t *out);

/**
 * Whether `E[n]` and `E'[n]` are isomorphic Galois modules; when they
 * are, `witness` (4 values, may be null) receives an intertwiner.
 *
 * # Safety
 * Both handles must be live, `isomorphic` writable, and `witness` null or
 * 4 writable values.
 */
enum TkStatus tk_galois_isomorphic(const struct TkCurve *curve1,
                                   const struct TkCurve *curve2,
                                   uint64_t n,
                                   size_t cap,
                                   bool *isomorphic,
                                   uint64_t *witness);

/**
 * Number of reduced primitive forms of discriminant `disc`.
 *
 * # Safety
 * `out` must be writable.
 */
enum TkStatus tk_class_number(int64_t disc, size_t *out);

/**
 * `a^2 + b^2 + c^2 + d^2 = s` with `s ≡ -1 (mod n)` as small as possible.
 *
 * # Safety
 * `quadruple` must point to 4 writable values and `s` be writable.
 */
enum TkStatus tk_four_square(uint64_t n, int64_t *quadruple, uint64_t *s);

/**
 * Searches `F_p` for a certified twin pair. Returns
 * [`TkStatus::NotFound`] when every candidate pair is rejected.
 *
 * # Safety
 * `out` must be writable.
 */
enum TkStatus tk_twin_search(uint64_t p,
                             uint64_t level_bound,
                             uint32_t p_precision,
                             struct TkCertificate **out);

/**
 * Re-verifies a certificate from scratch.
 *
 * # Safety
 * `cert` must be a live handle and `passed` writable.
 */
enum TkStatus tk_certificate_verify(const struct TkCertificate *cert, bool *passed);

/**
 * The characteristic of the certified pair.
 *
 * # Safety
 * `cert` must be a live handle and `out` writable.
 */
enum TkStatus tk_certificate_p(const struct TkCertificate *cert, uint64_t *out);

/**
 * The certificate as JSON. Release the string with [`tk_string_free`].
 *
 * # Safety
 * `cert` must be a live handle and `out` writable.
 */
enum TkStatus tk_certificate_json(const struct TkCertificate *cert, char **out);

/**
 * # Safety
 * `cert` must be null or a handle from [`tk_twin_search`] not yet freed.
 */
void tk_certificate_free(struct TkCertificate *cert);

/**
 * # Safety
 * `s` must be null or a string returned by this library, not yet freed.
 */
void tk_string_free(char *s);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* TATEKIT_H */
