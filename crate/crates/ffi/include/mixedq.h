#ifndef MIXEDQ_H
#define MIXEDQ_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible function.
 */
typedef enum MqStatus {
  MQ_STATUS_OK = 0,
  MQ_STATUS_NULL_POINTER = 1,
  MQ_STATUS_INVALID_ARGUMENT = 2,
  MQ_STATUS_CAP_EXCEEDED = 3,
  MQ_STATUS_BUDGET_EXCEEDED = 4,
  MQ_STATUS_VERIFICATION_FAILED = 5,
  MQ_STATUS_INTERNAL = 6,
} MqStatus;

/**
 * Opaque sampled sign table.
 */
typedef struct MqEpsilonTable MqEpsilonTable;

/**
 * Opaque validated structure matrix.
 */
typedef struct MqStructureMatrix MqStructureMatrix;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or NULL. The pointer is
 * valid until the next failing call on the same thread.
 */
const char *mq_last_error_message(void);

/**
 * Validates an `n x n` row-major matrix and returns a new handle.
 *
 * # Safety
 * `entries` must point to `n * n` doubles; `out` must be writable.
 */
enum MqStatus mq_structure_matrix_new(size_t n,
                                      const double *entries,
                                      struct MqStructureMatrix **out);

/**
 * Releases a handle from [`mq_structure_matrix_new`]. NULL is ignored.
 *
 * # Safety
 * `q` must come from this library and not be used afterwards.
 */
void mq_structure_matrix_free(struct MqStructureMatrix *q);

/**
 * Dimension of the matrix, or 0 for NULL.
 *
 * # Safety
 * `q` must be NULL or a live handle.
 */
size_t mq_structure_matrix_dim(const struct MqStructureMatrix *q);

/**
 * Mixed moment of the generators with the given labels.
 *
 * # Safety
 * `labels` must point to `len` values; `out` must be writable.
 */
enum MqStatus mq_moment(const struct MqStructureMatrix *q,
                        const size_t *labels,
                        size_t len,
                        double *out);

/**
 * Inner product of two Wick words.
 *
 * # Safety
 * Label arrays must hold `len_a` / `len_b` values; `out` must be writable.
 */
enum MqStatus mq_wick_inner(const struct MqStructureMatrix *q,
                            const size_t *a,
                            size_t len_a,
                            const size_t *b,
                            size_t len_b,
                            double *out);

/**
 * Checks the commutation relations and adjointness on the Fock space
 * truncated at `degree`. Writes 1 or 0 to `passed` and the largest
 * residual to `max_residual`, then returns `VERIFICATION_FAILED` if the
 * check did not pass.
 *
 * # Safety
 * Output pointers must be writable.
 */
enum MqStatus mq_fock_verify(const struct MqStructureMatrix *q,
                             size_t degree,
                             int32_t *passed,
                             double *max_residual);

/**
 * Samples a sign table over `q.dim() * copies` rows and `m` columns.
 * `copies = 1` is the independent scheme; larger values repeat the sampled
 * block. `lazy != 0` derives signs on demand instead of storing them.
 *
 * # Safety
 * `out` must be writable.
 */
enum MqStatus mq_epsilon_table_sample(const struct MqStructureMatrix *q,
                                      size_t m,
                                      uint64_t seed,
                                      size_t copies,
                                      int32_t lazy,
                                      struct MqEpsilonTable **out);

/**
 * Releases a table. NULL is ignored.
 *
 * # Safety
 * `t` must come from this library and not be used afterwards.
 */
void mq_epsilon_table_free(struct MqEpsilonTable *t);

/**
 * `eps((i, k), (j, l))`, 1-based.
 *
 * # Safety
 * `out` must be writable.
 */
enum MqStatus mq_epsilon_sign(const struct MqEpsilonTable *t,
                              size_t i,
                              size_t k,
                              size_t j,
                              size_t l,
                              int8_t *out);

/**
 * Normalized trace of `x_{rows[0]}(cols[0]) ... x_{rows[len-1]}(cols[len-1])`.
 *
 * # Safety
 * `rows` and `cols` must hold `len` values; `out` must be writable.
 */
enum MqStatus mq_trace(const struct MqEpsilonTable *t,
                       const size_t *rows,
                       const size_t *cols,
                       size_t len,
                       double *out);

/**
 * Expected trace of the same word over the random signs.
 *
 * # Safety
 * As for [`mq_trace`].
 */
enum MqStatus mq_expected_trace(const struct MqStructureMatrix *q,
                                size_t copies,
                                const size_t *rows,
                                const size_t *cols,
                                size_t len,
                                double *out);

/**
 * Expectation-mode CLT statistic at `m` columns.
 *
 * # Safety
 * `labels` must hold `len` values; `out` must be writable.
 */
enum MqStatus mq_clt_expectation(const struct MqStructureMatrix *q,
                                 const size_t *labels,
                                 size_t len,
                                 size_t m,
                                 double *out);

/**
 * Exact CLT statistic for one table; fails with `BUDGET_EXCEEDED` when more
 * than `budget` words would be visited.
 *
 * # Safety
 * `labels` must hold `len` values; `out` must be writable.
 */
enum MqStatus mq_clt_exact(const struct MqEpsilonTable *t,
                           const size_t *labels,
                           size_t len,
                           uint64_t budget,
                           double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MIXEDQ_H */
