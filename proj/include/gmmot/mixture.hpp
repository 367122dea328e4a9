#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "gmmot/linalg.hpp"

namespace gmmot {

/// One Gaussian: mean vector and PSD covariance.
struct GaussianComponent {
  Vector mean;
  PsdMatrix cov;

  GaussianComponent(Vector mean_, PsdMatrix cov_);
  int dim() const { return cov.dim(); }
};

/// Gaussian mixture: weights on the probability simplex plus components of a
/// shared dimension. Weights are renormalized at construction.
struct Gmm {
  int dim = 0;
  Vector weights;
  std::vector<GaussianComponent> components;

  Gmm(Vector weights_, std::vector<GaussianComponent> components_);
  int size() const { return static_cast<int>(components.size()); }
};

/// Mixture on the line, stored by parameters. Dirac components have stdev 0.
struct Gmm1d {
  Vector weights;
  Vector means;
  Vector stdevs;

  Gmm1d(Vector weights_, Vector means_, Vector stdevs_);
  int size() const { return static_cast<int>(weights.size()); }
};

/// Weighted atoms on the line.
struct PointMeasure1d {
  Vector supports;
  Vector weights;

  PointMeasure1d(Vector supports_, Vector weights_);
  int size() const { return static_cast<int>(supports.size()); }
};

/// Weighted atoms on the (mean, stdev) half-plane.
struct PointMeasure2d {
  std::vector<std::array<double, 2>> supports;  // (m, sigma), sigma >= 0
  Vector weights;

  PointMeasure2d(std::vector<std::array<double, 2>> supports_, Vector weights_);
  int size() const { return static_cast<int>(supports.size()); }
};

/// n points in R^d with optional weights (uniform when absent).
struct PointCloud {
  int dim = 0;
  Matrix points;  // n x d
  Vector weights;  // empty => uniform 1/n

  PointCloud(int dim_, Matrix points_, Vector weights_ = {});
  int size() const { return points.rows(); }
  std::span<const double> point(int i) const { return points.row(i); }
  double weight(int i) const {
    return weights.empty() ? 1.0 / points.rows() : weights[i];
  }
};

/// Rectangular density raster (d = 2 only). values[iy * nx + ix] is the
/// mixture pdf at the center of cell (ix, iy).
struct DensityGrid {
  double xmin = 0, xmax = 0, ymin = 0, ymax = 0;
  int nx = 0, ny = 0;
  Vector values;

  double cell_area() const {
    return (xmax - xmin) / nx * ((ymax - ymin) / ny);
  }
};

/// Projects one Gaussian along a unit direction: (theta . m, sqrt(theta^T S theta)).
std::pair<double, double> project_component(std::span<const double> theta,
                                            const GaussianComponent& g);

/// Componentwise projection of a mixture; weights are unchanged.
Gmm1d project_gmm(std::span<const double> theta, const Gmm& mu);

/// Identifies a 1d mixture with the point measure on (mean, stdev) pairs.
/// Coincident atoms are kept separate.
PointMeasure2d nu_map(const Gmm1d& mu);

/// Double projection: atoms (theta . m) cos(phi) + sqrt(theta^T S theta) sin(phi).
PointMeasure1d xi_projection(std::span<const double> theta, double phi, const Gmm& mu);

struct EmConfig {
  int max_iters = 200;
  double rel_tol = 1e-8;
  double cov_reg = -1.0;  // < 0 => 1e-6 * (data variance trace) / d
  std::uint64_t seed = 0;
};

struct EmResult {
  Gmm gmm;
  Vector loglik;  // weighted mean log-likelihood after every iteration
  int reseeds = 0;  // empty-cluster rescues
};

/// Weighted EM with k-means++ style seeding. Log-likelihood is nondecreasing
/// per iteration (within 1e-8); each M-step covariance gets +cov_reg * I.
EmResult em_fit_detailed(const PointCloud& data, int k, const EmConfig& config);
Gmm em_fit(const PointCloud& data, int k, const EmConfig& config);

/// Draws n points: categorical component choice, then mean + L z with
/// L = cholesky(cov). Deterministic for a given seed.
PointCloud sample(const Gmm& mu, int n, std::uint64_t seed);

struct GridBounds {
  double xmin = 0, xmax = 0, ymin = 0, ymax = 0;
};

/// Rasterizes a 2d mixture density at cell centers.
DensityGrid density_grid(const Gmm& mu, const GridBounds& bounds, int nx, int ny);

/// Mixture pdf at a point (d = 2 only); degenerate covariances get a tiny
/// trace-scaled jitter.
double pdf_2d(const Gmm& mu, double x, double y);

}  // namespace gmmot
