#ifndef NCWISHART_H
#define NCWISHART_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stddef.h>
#include <stdint.h>

/**
 * Status codes. Zero is success.
 */
typedef enum NcwStatus {
  NCW_STATUS_OK = 0,
  NCW_STATUS_NULL_POINTER = 1,
  /**
   * Argument outside the mathematical domain.
   */
  NCW_STATUS_DOMAIN = 2,
  NCW_STATUS_DIMENSION = 3,
  /**
   * Noncentrality eigenvalues closer than the supported gap.
   */
  NCW_STATUS_DEGENERATE_SPECTRUM = 4,
  NCW_STATUS_OVERFLOW = 5,
  /**
   * Quadrature missed its tolerance; the message carries the estimate.
   */
  NCW_STATUS_QUADRATURE = 6,
  /**
   * Hermitian eigensolver did not converge.
   */
  NCW_STATUS_EIGENSOLVER = 7,
  /**
   * Invalid configuration (modulations, powers, subchannel counts).
   */
  NCW_STATUS_CONFIG = 8,
  /**
   * An asymptotic coefficient came out nonpositive.
   */
  NCW_STATUS_NON_POSITIVE_COEFFICIENT = 9,
  NCW_STATUS_INVALID_STRING = 10,
  NCW_STATUS_PANIC = 11,
} NcwStatus;

/**
 * Eigenvalue laws of one noncentral Wishart spectrum.
 */
typedef struct NcwDistribution NcwDistribution;

/**
 * A Ricean channel and its eigenvalue laws.
 */
typedef struct NcwSystem NcwSystem;

/**
 * Modulation constants of `SER ≈ α Q(√(2βγ))`.
 */
typedef struct NcwModulation {
  double alpha;
  double beta;
} NcwModulation;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the calling thread's last error message into `buf` (always
 * NUL-terminated when `len > 0`) and returns the full message length
 * excluding the terminator; 0 when there is no message.
 *
 * # Safety
 * `buf` must be valid for `len` bytes or null with `len == 0`.
 */
size_t ncw_last_error_message(char *buf, size_t len);

/**
 * Library version as a static NUL-terminated string.
 */
const char *ncw_version(void);

/**
 * Builds the distribution of `W ~ W_s(t, I, Ω)` from the nonzero
 * noncentrality eigenvalues `lambdas[0..rank]` (descending, distinct).
 *
 * # Safety
 * `lambdas` must be valid for `rank` reads; `out` must be writable.
 */
enum NcwStatus ncw_distribution_new(size_t s,
                                    size_t t,
                                    const double *lambdas,
                                    size_t rank,
                                    struct NcwDistribution **out_dist);

/**
 * # Safety
 * `dist` must come from [`ncw_distribution_new`] and not be used again.
 */
void ncw_distribution_free(struct NcwDistribution *dist);

/**
 * `F_{φ_k}(x)` with the estimated decimal digits lost to cancellation
 * (`digits_lost` may be null).
 *
 * # Safety
 * Pointers must be valid or, for `digits_lost`, null.
 */
enum NcwStatus ncw_cdf_kth(const struct NcwDistribution *dist,
                           size_t k,
                           double x,
                           double *value,
                           double *digits_lost);

/**
 * All `s` ordered CDFs at `x` into `values[0..len]`; `len` must equal `s`.
 *
 * # Safety
 * `values` must be valid for `len` writes.
 */
enum NcwStatus ncw_cdf_all(const struct NcwDistribution *dist,
                           double x,
                           double *values,
                           size_t len);

/**
 * Marginal density `f_{φ_k}(x)`.
 *
 * # Safety
 * Pointers must be valid.
 */
enum NcwStatus ncw_pdf_kth(const struct NcwDistribution *dist, size_t k, double x, double *value);

/**
 * Leading small-`x` behaviour `F_{φ_k}(x) ≈ a_k x^{d_k+1}`, as `d_k` and
 * `ln a_k`.
 *
 * # Safety
 * Pointers must be valid.
 */
enum NcwStatus ncw_asymptotic_coeffs(const struct NcwDistribution *dist,
                                     size_t k,
                                     uint32_t *d,
                                     double *ln_a);

/**
 * Channel with `n` receive and `m` transmit antennas whose mean has the
 * given singular values and seeded singular vectors.
 *
 * # Safety
 * `sigmas` must be valid for `len` reads; `out_sys` must be writable.
 */
enum NcwStatus ncw_system_from_singulars(size_t n,
                                         size_t m,
                                         double k_factor,
                                         const double *sigmas,
                                         size_t len,
                                         uint64_t seed,
                                         struct NcwSystem **out_sys);

/**
 * Channel with an explicit `n × m` mean given as row-major real and
 * imaginary parts (`im` may be null for a real mean). The mean must satisfy
 * `tr(H̄H̄†) = nm`.
 *
 * # Safety
 * `re` (and `im` when non-null) must be valid for `n*m` reads.
 */
enum NcwStatus ncw_system_from_mean(size_t n,
                                    size_t m,
                                    double k_factor,
                                    const double *re,
                                    const double *im,
                                    struct NcwSystem **out_sys);

/**
 * # Safety
 * `sys` must come from a `ncw_system_*` constructor and not be used again.
 */
void ncw_system_free(struct NcwSystem *sys);

/**
 * CDF of the k-th largest singular value of the channel matrix.
 *
 * # Safety
 * Pointers must be valid.
 */
enum NcwStatus ncw_singular_value_cdf(const struct NcwSystem *sys,
                                      size_t k,
                                      double x,
                                      double *value);

/**
 * Constants of a named modulation (`bpsk`, `qpsk`, `8psk`, `4pam`, ...).
 *
 * # Safety
 * `name` must be a NUL-terminated string; `modulation` must be writable.
 */
enum NcwStatus ncw_modulation_from_name(const char *name, struct NcwModulation *modulation);

/**
 * Exact SER of each of the `r` subchannels with powers `powers[0..r]`, and
 * their mean. `subchannel_ser` may be null when only the global SER is
 * wanted.
 *
 * # Safety
 * `powers` and `mods` must be valid for `r` reads, `subchannel_ser` for `r`
 * writes (or null), `global_ser` writable.
 */
enum NcwStatus ncw_ser(const struct NcwSystem *sys,
                       const double *powers,
                       const struct NcwModulation *mods,
                       size_t r,
                       double *subchannel_ser,
                       double *global_ser);

/**
 * High-SNR SER `(G_a P)^{−G_d}` of subchannel `k` (1-based) under uniform
 * power `P/r`, together with `G_a` and `G_d` (either may be null).
 *
 * # Safety
 * `mods` must be valid for `r` reads; outputs writable or null.
 */
enum NcwStatus ncw_ser_high_snr(const struct NcwSystem *sys,
                                double total_power,
                                const struct NcwModulation *mods,
                                size_t r,
                                size_t k,
                                double *ser,
                                double *array_gain,
                                uint32_t *diversity);

/**
 * Outage of the weakest of `r` equal-power subchannels.
 *
 * # Safety
 * Pointers must be valid.
 */
enum NcwStatus ncw_outage(const struct NcwSystem *sys,
                          size_t r,
                          double total_power,
                          double gamma_th,
                          double *value);

/**
 * Leading-order outage of the strongest subchannel; depends on the mean
 * only through `K`.
 *
 * # Safety
 * `value` must be writable.
 */
enum NcwStatus ncw_outage_asymptotic(size_t s,
                                     size_t t,
                                     double k_factor,
                                     double gamma_th,
                                     double total_power,
                                     double *value);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NCWISHART_H */
