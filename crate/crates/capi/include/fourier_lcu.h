#ifndef FOURIER_LCU_H
#define FOURIER_LCU_H

/* Generated by cbindgen; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible function.
 */
typedef enum LcuStatus {
  LCU_STATUS_OK = 0,
  LCU_STATUS_NULL_POINTER = 1,
  LCU_STATUS_INVALID_ARGUMENT = 2,
  LCU_STATUS_OUT_OF_RANGE = 3,
  LCU_STATUS_INTERNAL_ERROR = 4,
} LcuStatus;

/**
 * Opaque discrete-Fourier decomposition of a diagonal unitary.
 */
typedef struct LcuDiagonal LcuDiagonal;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the most recent failure on this thread. The pointer is
 * valid until the next failing call on the same thread.
 */
const char *lcu_last_error_message(void);

/**
 * Library version as a static string.
 */
const char *lcu_version(void);

/**
 * Builds the LCU of `e^{-i gamma f(k)}` from `f(0..=m)` (`len = m + 1`).
 *
 * # Safety
 * `f_values` must point to `len` doubles and `out` must be a valid pointer.
 */
enum LcuStatus lcu_diagonal_build(const double *f_values,
                                  uintptr_t len,
                                  double gamma,
                                  struct LcuDiagonal **out);

/**
 * Builds the LCU of the quadratic Hamming-weight penalty
 * `f(k) = (k - b)^2` on `0..=n`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum LcuStatus lcu_diagonal_build_hamming_penalty(uintptr_t n,
                                                  uintptr_t b,
                                                  double gamma,
                                                  struct LcuDiagonal **out);

/**
 * Builds the LCU of the indicator window penalty on `0..=m` (0 inside
 * `[l, u]`, 1 outside).
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum LcuStatus lcu_diagonal_build_indicator(uintptr_t m,
                                            uintptr_t l,
                                            uintptr_t u,
                                            double gamma,
                                            struct LcuDiagonal **out);

/**
 * Number of branches (`m + 1`). Zero for a null handle.
 *
 * # Safety
 * `lcu` must be a live handle or null.
 */
uintptr_t lcu_diagonal_branch_count(const struct LcuDiagonal *lcu);

/**
 * Quasi-probability cost `Gamma = ||c||_1^2`. NaN for a null handle.
 *
 * # Safety
 * `lcu` must be a live handle or null.
 */
double lcu_diagonal_gamma_cost(const struct LcuDiagonal *lcu);

/**
 * Max-norm reconstruction error over the domain of `f`.
 *
 * # Safety
 * `lcu` must be a live handle or null.
 */
double lcu_diagonal_reconstruction_error(const struct LcuDiagonal *lcu);

/**
 * Coefficient `c_j` and Fourier angle `theta_j` of branch `j`.
 *
 * # Safety
 * All pointers must be valid; `lcu` must be a live handle.
 */
enum LcuStatus lcu_diagonal_branch(const struct LcuDiagonal *lcu,
                                   uintptr_t j,
                                   double *coeff_re,
                                   double *coeff_im,
                                   double *theta);

/**
 * Minimum slack of the sampling domination bound `Gamma * p_lcu - p` over
 * all bitstrings, for the Hamming-weight channel of this decomposition
 * applied to the uniform superposition on `n` qubits.
 *
 * # Safety
 * `lcu` must be a live handle; `slack` must be a valid pointer.
 */
enum LcuStatus lcu_diagonal_domination_slack(const struct LcuDiagonal *lcu,
                                             uintptr_t n,
                                             double *slack);

/**
 * Frees a diagonal-LCU handle. Null is a no-op.
 *
 * # Safety
 * `lcu` must be a handle returned by a constructor, freed at most once.
 */
void lcu_diagonal_free(struct LcuDiagonal *lcu);

/**
 * `Sum_j (2j+1) m_j` over the spin sectors of `n` qubits, as a check value;
 * equals `2^n`. Returns 0 when `n` is out of range (1..=64) or the sum
 * exceeds the return type (`n = 64` is reported as `u64::MAX`).
 */
uint64_t lcu_spin_dimension_sum(uintptr_t n);

/**
 * Cubic bound `(n+1)(n+2)(n+3)/6` on the SU(2) LCU cost. NaN when out of
 * range.
 */
double lcu_su2_gamma_bound(uintptr_t n);

/**
 * Wigner small-d matrix element `d^j_{m1 m2}(theta)` with doubled
 * half-integer labels.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum LcuStatus lcu_wigner_small_d(int64_t twice_j,
                                  int64_t twice_m1,
                                  int64_t twice_m2,
                                  double theta,
                                  double *out);

/**
 * Monte-Carlo estimate of the XY-mixer LCU cost `Gamma(beta)` from `samples`
 * Haar draws, with its standard error.
 *
 * # Safety
 * `gamma_hat` and `sigma` must be valid pointers.
 */
enum LcuStatus lcu_xy_gamma_estimate(uintptr_t n,
                                     double beta,
                                     uintptr_t samples,
                                     uint64_t seed,
                                     double *gamma_hat,
                                     double *sigma);

/**
 * Binomial probability that the warm-start state has Hamming weight `k`.
 */
double lcu_warm_start_feasibility(uintptr_t n, uintptr_t k);

/**
 * Exact feasible optimum of a densest-k-subgraph instance on a random
 * d-regular graph, for quick cross-language smoke tests.
 *
 * # Safety
 * `optimum` must be a valid pointer.
 */
enum LcuStatus lcu_dks_regular_optimum(uintptr_t n,
                                       uintptr_t d,
                                       uintptr_t k,
                                       uint64_t seed,
                                       double *optimum);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* FOURIER_LCU_H */
