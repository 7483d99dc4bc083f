#ifndef PAIRSTATS_H
#define PAIRSTATS_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Pair-number distribution families.
 */
typedef enum {
  PAIRSTATS_DISTRIBUTION_POISSON = 0,
  PAIRSTATS_DISTRIBUTION_THERMAL = 1,
} PairstatsDistribution;

/**
 * Status codes returned by all fallible functions.
 */
typedef enum {
  PAIRSTATS_STATUS_OK = 0,
  /**
   * A null pointer was passed where an out-pointer or handle is required.
   */
  PAIRSTATS_STATUS_NULL_POINTER = 1,
  /**
   * An argument is outside its mathematical domain.
   */
  PAIRSTATS_STATUS_INVALID_ARGUMENT = 2,
  /**
   * The requested quantity is undefined for these inputs.
   */
  PAIRSTATS_STATUS_UNDEFINED = 3,
  /**
   * The requested value lies outside the attainable range.
   */
  PAIRSTATS_STATUS_OUT_OF_RANGE = 4,
  /**
   * No solution intersects the computed curve.
   */
  PAIRSTATS_STATUS_NO_INTERSECTION = 5,
  /**
   * The inputs are mutually inconsistent (model violation).
   */
  PAIRSTATS_STATUS_INCONSISTENT = 6,
  /**
   * Root finding or refinement failed to converge.
   */
  PAIRSTATS_STATUS_SOLVER_FAILURE = 7,
  /**
   * The series truncation limit was exceeded.
   */
  PAIRSTATS_STATUS_TRUNCATION_LIMIT = 8,
} PairstatsStatus;

/**
 * Opaque detection-setup handle.
 */
typedef struct PairstatsSetup PairstatsSetup;

/**
 * Characterization result: recovered parameters and diagnostics.
 */
typedef struct {
  double eta_h;
  double eta_a;
  double eta_b;
  double mu;
  /**
   * Single-pair emission probability at the recovered brightness.
   */
  double p1;
  /**
   * Single/multi-pair ratio at the recovered brightness.
   */
  double r;
  /**
   * Number of model-consistency warnings raised (0 means clean).
   */
  uint32_t n_warnings;
} PairstatsCharacterization;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Create a setup handle. `c` is the spectral-correlation factor in
 * (0, 1]; pass 1 for an uncorrelated source. On success writes the
 * handle to `out` and returns `Ok`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */

PairstatsStatus pairstats_setup_new(double eta_h,
                                    double eta_a,
                                    double eta_b,
                                    double d_h,
                                    double d_a,
                                    double d_b,
                                    double c,
                                    PairstatsSetup **out);

/**
 * Release a setup handle. Passing null is a no-op.
 *
 * # Safety
 * `setup` must be null or a handle from [`pairstats_setup_new`] that
 * has not been freed.
 */
 void pairstats_setup_free(PairstatsSetup *setup);

/**
 * Full per-window outcome probabilities. Writes eight entries to
 * `out_probabilities` in the order ---, A--, -B-, --H, AB-, A-H, -BH, ABH.
 *
 * # Safety
 * `setup` must be a live handle; `out_probabilities` must point to at
 * least eight doubles.
 */

PairstatsStatus pairstats_detection_statistics(const PairstatsSetup *setup,
                                               PairstatsDistribution dist,
                                               double mu,
                                               double tail_tol,
                                               double *out_probabilities);

/**
 * Heralded-mode autocorrelation predicted by the forward model.
 *
 * # Safety
 * `setup` must be a live handle; `out_g2` must be a valid pointer.
 */

PairstatsStatus pairstats_predict_g2(const PairstatsSetup *setup,
                                     PairstatsDistribution dist,
                                     double mu,
                                     double *out_g2);

/**
 * Brightness whose forward-model heralding probability equals `p_h`.
 *
 * # Safety
 * `setup` must be a live handle; `out_mu` must be a valid pointer.
 */

PairstatsStatus pairstats_brightness_from_heralding(const PairstatsSetup *setup,
                                                    PairstatsDistribution dist,
                                                    double p_h,
                                                    double *out_mu);

/**
 * Brightness on the low branch with single-pair probability `p1`.
 *
 * # Safety
 * `out_mu` must be a valid pointer.
 */

PairstatsStatus pairstats_brightness_from_p1(PairstatsDistribution dist,
                                             double p1,
                                             double *out_mu);

/**
 * Single/multi-pair ratio `r = p1 / (1 - p0 - p1)`; writes +inf when
 * the multi-pair mass underflows.
 *
 * # Safety
 * `out_r` must be a valid pointer.
 */
 PairstatsStatus pairstats_multipair_ratio(PairstatsDistribution dist, double mu, double *out_r);

/**
 * Brightness upper bound from a measured correlation strength `g`,
 * assuming loss-free channels with the given detector efficiencies.
 * Writes the bound and the corresponding lower bound on `r`.
 *
 * # Safety
 * `out_mu_max` and `out_r_lower` must be valid pointers.
 */

PairstatsStatus pairstats_brightness_upper_bound(double g,
                                                 double eta_h,
                                                 double eta_a,
                                                 double eta_b,
                                                 double d_h,
                                                 double d_a,
                                                 double d_b,
                                                 PairstatsDistribution dist,
                                                 double *out_mu_max,
                                                 double *out_r_lower);

/**
 * Recover transmissions and brightness from measured probabilities.
 *
 * # Safety
 * `out` must be a valid pointer.
 */

PairstatsStatus pairstats_solve_transmissions(double p_h,
                                              double p_a,
                                              double p_b,
                                              double p_ah,
                                              double p_bh,
                                              uint64_t n_windows,
                                              double d_h,
                                              double d_a,
                                              double d_b,
                                              PairstatsDistribution dist,
                                              PairstatsCharacterization *out);

/**
 * Monte Carlo simulation of `n_windows` measurement windows. Writes
 * eight outcome counts in canonical order, then the measured
 * probabilities can be recovered host-side; also writes the empirical
 * heralding probability for convenience.
 *
 * # Safety
 * `setup` must be a live handle; `out_counts` must point to at least
 * eight `uint64_t`; `out_p_h` may be null if unwanted.
 */

PairstatsStatus pairstats_simulate_windows(const PairstatsSetup *setup,
                                           PairstatsDistribution dist,
                                           double mu,
                                           uint64_t n_windows,
                                           uint64_t seed,
                                           uint64_t *out_counts,
                                           double *out_p_h);

/**
 * Low-brightness closed form `g2 = mu (2 - eta_h)`.
 */
 double pairstats_g2_low_brightness_approx(double mu, double eta_h);

/**
 * Human-readable name of a status code. The returned string is owned
 * by the library and must not be freed.
 */
 const char *pairstats_status_name(PairstatsStatus status);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PAIRSTATS_H */
