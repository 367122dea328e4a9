#pragma once

#include <cstdint>

#include "gmmot/transport.hpp"

namespace gmmot {

enum class SliceMode { monte_carlo, equispaced2d };

/// Reproducible set of slicing directions theta (rows) and angles phi, shared
/// across distance evaluations so that results are comparable.
///
/// monte_carlo: thetas and phis are parallel arrays of L independent draws.
/// equispaced2d (d = 2 only): theta_j = (cos(2 pi j / T), sin(2 pi j / T)) and
/// an independent equispaced phi grid; metrics that need (theta, phi) pairs
/// consume the tensor product.
struct SliceSet {
  int dim = 0;
  Matrix thetas;  // T x dim, unit rows
  Vector phis;
  std::uint64_t seed = 0;
  SliceMode mode = SliceMode::monte_carlo;

  static SliceSet monte_carlo(int dim, int count, std::uint64_t seed);
  static SliceSet equispaced2d(int theta_count, int phi_count);
  static SliceSet equispaced2d(int count) { return equispaced2d(count, count); }

  int theta_count() const { return thetas.rows(); }
  long long pair_count() const {
    return mode == SliceMode::monte_carlo
               ? static_cast<long long>(theta_count())
               : static_cast<long long>(theta_count()) * static_cast<long long>(phis.size());
  }
  int pair_theta(long long l) const {
    return mode == SliceMode::monte_carlo ? static_cast<int>(l)
                                          : static_cast<int>(l / static_cast<long long>(phis.size()));
  }
  double pair_phi(long long l) const {
    return mode == SliceMode::monte_carlo ? phis[static_cast<std::size_t>(l)]
                                          : phis[static_cast<std::size_t>(l % static_cast<long long>(phis.size()))];
  }
};

/// A distance evaluation: the root, the squared value it was computed from,
/// how many slices entered, a Monte Carlo standard-error estimate (0 for
/// equispaced quadrature), and wall time.
struct DistanceValue {
  double value = 0.0;
  double squared = 0.0;
  long long slices_used = 0;
  double stderr_estimate = 0.0;
  double elapsed_ms = 0.0;
};

/// Squared 2-Wasserstein distance between two Gaussians:
/// ||m0 - m1||^2 + tr(S0 + S1 - 2 (S0^{1/2} S1 S0^{1/2})^{1/2}).
double gaussian_w2(const GaussianComponent& g0, const GaussianComponent& g1);

/// Squared 1d case: (m0 - m1)^2 + (s0 - s1)^2.
double gaussian_w2_1d(double m0, double s0, double m1, double s1);

/// Mixture Wasserstein distance: discrete transport over components with
/// pairwise Gaussian W2^2 costs.
DistanceValue mw(const Gmm& mu0, const Gmm& mu1);
TransportResult mw_plan(const Gmm& mu0, const Gmm& mu1);

/// Sliced Wasserstein distance between point clouds (Monte Carlo or
/// equispaced average of 1d transports of the projections). p is 1 or 2.
DistanceValue sw_empirical(const PointCloud& a, const PointCloud& b,
                           const SliceSet& slices, int p = 2);

/// Squared W2 between two 1d mixtures by Gauss-Legendre quadrature of the
/// squared quantile difference; mixture quantiles are solved to 1e-12
/// brackets. Two single Gaussians short-circuit to the exact 1d formula.
double w2_1d_gmm(const Gmm1d& a, const Gmm1d& b, int quad_nodes = 256);

/// Sliced Wasserstein distance between mixtures via projected 1d mixtures.
DistanceValue sw_gmm(const Gmm& mu0, const Gmm& mu1, const SliceSet& slices,
                     int quad_nodes = 256);

/// Mixture sliced Wasserstein: outer discrete transport with slice-averaged
/// 1d Gaussian costs.
DistanceValue msw(const Gmm& mu0, const Gmm& mu1, const SliceSet& slices);
TransportResult msw_plan(const Gmm& mu0, const Gmm& mu1, const SliceSet& slices);

/// Sliced mixture Wasserstein: per-direction exact transport between the
/// (mean, stdev) point measures, averaged over directions.
DistanceValue smw(const Gmm& mu0, const Gmm& mu1, const SliceSet& slices);

/// Double-sliced mixture Wasserstein: per (theta, phi) pair, 1d transport of
/// the xi projections, averaged.
DistanceValue dsmw(const Gmm& mu0, const Gmm& mu1, const SliceSet& slices);

/// sqrt(2 sum_k w_k tr(S_k) / d): the covariance term of the sliced
/// sandwich bound, in the normalized sphere-average convention.
double smw_cov_bound_term(const Gmm& mu);

namespace detail {

/// Projections of every component along every slice direction:
/// means(t, k) and stdevs(t, k). Shared by the sliced metrics and the
/// gradient code so both sides follow the same arithmetic.
void project_all(const Gmm& mu, const SliceSet& slices, Matrix& means, Matrix& stdevs);

}  // namespace detail

/// Lower bound sigma^2 / 2 for DSMW^2 between any point measure and an
/// isotropic Gaussian N(0, sigma^2 I), normalized convention.
double dsmw_lower_bound(double sigma, int d);

}  // namespace gmmot
