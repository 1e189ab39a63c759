#ifndef TENSLET_H
#define TENSLET_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Filter argument convention.
typedef enum TnConvention {
  TN_CONVENTION_DEGREE = 0,
  TN_CONVENTION_EIGENVALUE = 1,
} TnConvention;

// Which coefficient family an accessor addresses.
typedef enum TnFamily {
  TN_FAMILY_DIV = 0,
  TN_FAMILY_CURL = 1,
} TnFamily;

// Result code of every call.
typedef enum TnStatus {
  TN_STATUS_OK = 0,
  TN_STATUS_NULL_POINTER = 1,
  TN_STATUS_DOMAIN = 2,
  TN_STATUS_FORMAT = 3,
  TN_STATUS_SHAPE = 4,
  TN_STATUS_DEGENERATE_FRAME = 5,
  TN_STATUS_RESOURCE = 6,
  TN_STATUS_CONFIG = 7,
  TN_STATUS_CONTRACT = 8,
  TN_STATUS_UNKNOWN_BANK = 9,
  TN_STATUS_VERSION = 10,
  TN_STATUS_TRUNCATED = 11,
  TN_STATUS_IO = 12,
  TN_STATUS_INVALID_STRING = 13,
  TN_STATUS_PANIC = 14,
} TnStatus;

// Coefficient pair `(div, curl)`.
typedef struct TnCoeffs TnCoeffs;

// Multilevel decomposition.
typedef struct TnDecomposition TnDecomposition;

// Level scheme plus filter bank.
typedef struct TnScheme TnScheme;

// Weighted node sequence on one rule.
typedef struct TnSequence TnSequence;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copies the last error message into `buf` (NUL-terminated, truncated to
// `len`). Returns the full message length excluding the terminator.
//
// # Safety
// `buf` must be null or valid for `len` bytes.
size_t tn_last_error_message(char *buf, size_t len);

// Library version as a static NUL-terminated string.
const char *tn_version(void);

// Gauss–Legendre scheme for levels `j0..=j` with the standard bank.
//
// # Safety
// `out` must be valid for writing one pointer.
enum TnStatus tn_scheme_new_gl(uint32_t j0,
                               uint32_t j,
                               enum TnConvention convention,
                               struct TnScheme **out);

// # Safety
// `s` must be null or a handle from `tn_scheme_new_gl` not yet freed.
void tn_scheme_free(struct TnScheme *s);

// Node count and bandlimit of one level.
//
// # Safety
// `s` must be a live handle; outputs must be valid or null.
enum TnStatus tn_scheme_level_info(const struct TnScheme *s,
                                   uint32_t level,
                                   size_t *nodes,
                                   size_t *bandlimit);

// Writes node coordinates (`3 * n` doubles) and weights (`n` doubles) of
// one level. Either output may be null.
//
// # Safety
// Non-null outputs must hold `3 * n` and `n` doubles where `n` is the node
// count of the level.
enum TnStatus tn_scheme_nodes(const struct TnScheme *s,
                              uint32_t level,
                              double *xyz,
                              double *weights,
                              size_t n);

// Scales the first high-pass mask of the scheme's bank by `factor`.
//
// # Safety
// `s` must be a live handle.
enum TnStatus tn_scheme_inject_defect(struct TnScheme *s, double factor);

// Zero coefficients up to degree `l_max`.
//
// # Safety
// `out` must be valid for writing one pointer.
enum TnStatus tn_coeffs_new(size_t l_max, struct TnCoeffs **out);

// Coefficients of synthetic Field A.
//
// # Safety
// `out` must be valid for writing one pointer.
enum TnStatus tn_coeffs_field_a(struct TnCoeffs **out);

// # Safety
// `c` must be null or a live coefficient handle.
void tn_coeffs_free(struct TnCoeffs *c);

// # Safety
// `c` must be a live handle.
enum TnStatus tn_coeffs_set(struct TnCoeffs *c,
                            enum TnFamily family,
                            size_t l,
                            int64_t m,
                            double re,
                            double im);

// # Safety
// `c` must be a live handle; `re` and `im` valid for writing.
enum TnStatus tn_coeffs_get(const struct TnCoeffs *c,
                            enum TnFamily family,
                            size_t l,
                            int64_t m,
                            double *re,
                            double *im);

// # Safety
// `c` must be a live handle; `out` valid for writing.
enum TnStatus tn_coeffs_l_max(const struct TnCoeffs *c, size_t *out);

// # Safety
// `c` must be a live handle and `path` a NUL-terminated string.
enum TnStatus tn_coeffs_save(const struct TnCoeffs *c, const char *path);

// # Safety
// `path` must be a NUL-terminated string; `out` valid for writing.
enum TnStatus tn_coeffs_load(const char *path, struct TnCoeffs **out);

// Weighted synthesis of `c` on the rule of `level`.
//
// # Safety
// Handles must be live; `out` valid for writing.
enum TnStatus tn_synthesize(const struct TnScheme *s,
                            const struct TnCoeffs *c,
                            uint32_t level,
                            struct TnSequence **out);

// Projects real node values (`3 * n` doubles, unweighted) on the finest
// rule onto its bandlimit, giving a certified sequence.
//
// # Safety
// `raw` must hold `3 * n` doubles; `out` valid for writing.
enum TnStatus tn_project(const struct TnScheme *s,
                         const double *raw,
                         size_t n,
                         struct TnSequence **out);

// # Safety
// `q` must be null or a live sequence handle.
void tn_sequence_free(struct TnSequence *q);

// # Safety
// `q` must be a live handle; `out` valid for writing.
enum TnStatus tn_sequence_len(const struct TnSequence *q, size_t *out);

// Writes `6 * n` doubles: `(re, im)` of x, y, z per node. With
// `unweighted` nonzero the `√w` factor is removed first.
//
// # Safety
// `buf` must hold `6 * n` doubles.
enum TnStatus tn_sequence_values(const struct TnSequence *q,
                                 int32_t unweighted,
                                 double *buf,
                                 size_t n);

// `‖a - b‖ / ‖a‖` over the stored values.
//
// # Safety
// Handles must be live; `out` valid for writing.
enum TnStatus tn_relative_error(const struct TnSequence *a,
                                const struct TnSequence *b,
                                double *out);

// Multilevel decomposition of a certified sequence on the finest rule.
//
// # Safety
// Handles must be live; `out` valid for writing.
enum TnStatus tn_decompose(const struct TnScheme *s,
                           const struct TnSequence *v,
                           struct TnDecomposition **out);

// Reconstruction onto the finest rule.
//
// # Safety
// Handles must be live; `out` valid for writing.
enum TnStatus tn_reconstruct(const struct TnScheme *s,
                             const struct TnDecomposition *d,
                             struct TnSequence **out);

// Zeroes every detail sequence in place.
//
// # Safety
// `d` must be a live handle.
enum TnStatus tn_decomposition_drop_details(struct TnDecomposition *d);

// Relative deviation of the stored energy from `reference`.
//
// # Safety
// `d` must be a live handle; `out` valid for writing.
enum TnStatus tn_decomposition_parseval(const struct TnDecomposition *d,
                                        double reference,
                                        double *out);

// `Σ_k |v_k|²` of a sequence.
//
// # Safety
// `q` must be a live handle; `out` valid for writing.
enum TnStatus tn_sequence_norm_sqr(const struct TnSequence *q, double *out);

// # Safety
// `d` must be null or a live handle.
void tn_decomposition_free(struct TnDecomposition *d);

// Writes a decomposition bundle directory.
//
// # Safety
// Handles must be live; `dir` a NUL-terminated string.
enum TnStatus tn_bundle_write(const struct TnScheme *s,
                              const struct TnDecomposition *d,
                              const char *dir);

// Reads a bundle written for the same scheme. The bank named in the
// manifest must be known and match the scheme's bank.
//
// # Safety
// `s` must be live; `dir` a NUL-terminated string; `out` valid for writing.
enum TnStatus tn_bundle_read(const struct TnScheme *s,
                             const char *dir,
                             struct TnDecomposition **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TENSLET_H */
