#ifndef FORMRING_H
#define FORMRING_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

// Result codes shared by every entry point.
typedef enum FrStatus {
  FR_STATUS_OK = 0,
  FR_STATUS_NULL_POINTER = 1,
  FR_STATUS_INVALID_UTF8 = 2,
  FR_STATUS_RING_SPEC = 3,
  FR_STATUS_BAD_LAMBDA = 4,
  FR_STATUS_FORM_PARAM = 5,
  FR_STATUS_BAD_INDEX = 6,
  FR_STATUS_DIAGONAL_PARAMETER = 7,
  FR_STATUS_DIMENSION_MISMATCH = 8,
  FR_STATUS_CAP_EXCEEDED = 9,
  FR_STATUS_TOO_LARGE = 10,
  FR_STATUS_VERIFICATION_FAILED = 11,
  FR_STATUS_PARSE = 12,
  FR_STATUS_CONFIG = 13,
  FR_STATUS_BUFFER_TOO_SMALL = 14,
  FR_STATUS_OTHER = 99,
} FrStatus;

// A form ring `(R, Lambda)` with its generator mode.
typedef struct FrFormRing FrFormRing;

// An enumerated finite matrix group.
typedef struct FrGroup FrGroup;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last error on this thread, or null. Valid until the next
// failing call on the same thread.
const char *fr_last_error(void);

// # Safety
// `s` must come from this library, or be null.
void fr_string_free(char *s);

// Build a form ring from a ring spec such as `"Zmod 6, trivial, lambda=-1"`
// and a form parameter spec `"min"`, `"max"` or `"gens:[...]"`.
// `hermitian_only` selects the relaxed diagonal generator mode.
//
// # Safety
// `spec` and `lambda` must be nul-terminated strings; `out` must be
// writable.
enum FrStatus fr_form_ring_new(const char *spec,
                               const char *lambda,
                               bool hermitian_only,
                               struct FrFormRing **out);

// # Safety
// `fr` must come from [`fr_form_ring_new`], or be null.
void fr_form_ring_free(struct FrFormRing *fr);

// Number of elements of the base ring; 0 for a null handle.
//
// # Safety
// `fr` must be a live handle or null.
uintptr_t fr_ring_size(const struct FrFormRing *fr);

// Membership of a `2n x 2n` row-major matrix of element indices in
// `GQ_{2n}(R, Lambda)`.
//
// # Safety
// `entries` must point to `len` readable values; `out` must be writable.
enum FrStatus fr_is_in_gq(const struct FrFormRing *fr,
                          uintptr_t n,
                          const uint16_t *entries,
                          uintptr_t len,
                          bool *out);

// Write the elementary matrix of family `fam` (0 = eps, 1 = r, 2 = l)
// with 1-based indices `i`, `j` and parameter index `a` into `out`
// (row-major, `len = 4 n^2`).
//
// # Safety
// `out` must point to `len` writable values.
enum FrStatus fr_elementary(const struct FrFormRing *fr,
                            uintptr_t n,
                            uint32_t fam,
                            uintptr_t i,
                            uintptr_t j,
                            uint16_t a,
                            uint16_t *out,
                            uintptr_t len);

// Enumerate `EQ_{2n}` by closure, stopping at `cap` elements. A capped
// enumeration still yields a handle; see [`fr_group_is_complete`].
//
// # Safety
// `out` must be writable.
enum FrStatus fr_eq_closure(const struct FrFormRing *fr,
                            uintptr_t n,
                            uintptr_t cap,
                            struct FrGroup **out);

// # Safety
// `g` must be a live handle or null.
uintptr_t fr_group_order(const struct FrGroup *g);

// # Safety
// `g` must be a live handle or null.
bool fr_group_is_complete(const struct FrGroup *g);

// Membership of a row-major matrix in an enumerated group.
//
// # Safety
// `entries` must point to `len` readable values; `out` must be writable.
enum FrStatus fr_group_contains(const struct FrGroup *g,
                                const uint16_t *entries,
                                uintptr_t len,
                                bool *out);

// # Safety
// `g` must come from [`fr_eq_closure`], or be null.
void fr_group_free(struct FrGroup *g);

// `K_{1,2n}` report as JSON, default options.
//
// # Safety
// `out` must be writable; release the string with [`fr_string_free`].
enum FrStatus fr_k1_json(const struct FrFormRing *fr, uintptr_t n, char **out);

// Run a job given as config text (the format read by the command-line
// tool). The JSON report goes to `out`, the tool's exit code to
// `exit_code`. A config that cannot be parsed returns an error status.
//
// # Safety
// `config` must be a nul-terminated string; `out` and `exit_code` must be
// writable.
enum FrStatus fr_run_config(const char *config, char **out, int32_t *exit_code);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FORMRING_H */
