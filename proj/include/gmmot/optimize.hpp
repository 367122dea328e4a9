#pragma once

#include <string>

#include "gmmot/distances.hpp"

namespace gmmot {

/// Gradient-friendly GMM parametrization: logits for the weights, free means,
/// and lower-triangular factors realizing covariances Q Q^T + sigma_floor^2 I.
struct QuantParams {
  double sigma_floor = 1.0;
  Vector logits;                 // K
  std::vector<Vector> means;     // K x d
  std::vector<Matrix> factors;   // K lower-triangular d x d (upper kept zero)

  int size() const { return static_cast<int>(logits.size()); }
  int dim() const { return means.empty() ? 0 : static_cast<int>(means.front().size()); }
};

/// Realizes the parametrized mixture: softmax weights, Q Q^T + s^2 I covariances.
Gmm realize(const QuantParams& params);

/// Loss and analytic gradients of the squared DSMW estimate against a fixed
/// target on a fixed SliceSet. The loss matches dsmw(realize(params), target)
/// .squared bit for bit; gradients come from the monotone plans (supports),
/// their dual potentials through the softmax Jacobian (weights), and the
/// projection chain rule (means and factors).
struct DsmwGradient {
  double loss = 0.0;
  Vector grad_logits;
  std::vector<Vector> grad_means;
  std::vector<Matrix> grad_factors;
};

DsmwGradient dsmw_sq_grad(const QuantParams& params, const Gmm& target,
                          const SliceSet& slices);

struct AdamConfig {
  double lr = 0.03;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// First/second moment accumulators over a flat parameter vector.
struct AdamState {
  long long step = 0;
  Vector m;
  Vector v;
  AdamConfig config;

  explicit AdamState(std::size_t size, AdamConfig config_ = {})
      : m(size, 0.0), v(size, 0.0), config(config_) {}
  void update(Vector& params, const Vector& grad);
};

struct OptimConfig {
  int slices = 100;        // L per gradient step (fresh Monte Carlo draw)
  int steps = 200;
  double lr = 0.03;
  int restarts = 20;
  double sigma_floor = 1.0;
  std::uint64_t seed = 0;
  int heldout_factor = 10;  // held-out SliceSet size = heldout_factor * slices
};

struct OptimReport {
  std::vector<Vector> traces;   // per restart, per step stochastic loss
  Vector heldout;               // per restart, held-out squared objective
  int best_restart = -1;
  double best_loss = 0.0;       // held-out objective of the selected restart
  QuantParams best_params;
  std::vector<std::string> warnings;
  double wall_ms = 0.0;

  Gmm best_gmm() const { return realize(best_params); }
};

/// Compresses a mixture to k_star components by Adam on the squared DSMW
/// estimate with fresh directions per step; restarts are ranked on a frozen
/// held-out SliceSet.
OptimReport quantize(const Gmm& target, int k_star, const OptimConfig& config);

struct GaussianBarycenterConfig {
  int max_iters = 200;
  double tol = 1e-10;
};

struct GaussianBarycenterResult {
  GaussianComponent component;
  bool converged = true;
  int iters = 0;
  Vector residuals;  // Frobenius change per iteration
};

/// W2 barycenter of Gaussians: the mean is the lambda-average; the covariance
/// solves the standard fixed point S = S^{-1/2} (sum_i l_i (S^{1/2} S_i
/// S^{1/2})^{1/2})^2 S^{-1/2}.
GaussianBarycenterResult gaussian_barycenter(
    const std::vector<GaussianComponent>& components, const Vector& lambda,
    const GaussianBarycenterConfig& config = {});

/// Logit tensor over the K_1 x ... x K_I table of fixed barycenter
/// components; softmax over all entries gives the candidate weights.
struct BaryWeights {
  std::vector<int> shape;
  Vector logits;
};

struct FixedBarycenterConfig {
  int slices = 100;
  int steps = 10;
  double lr = 0.03;
  std::uint64_t seed = 0;
};

/// Barycenter with components frozen to the K^I pairwise Gaussian barycenters
/// and only the weight logits optimized. Guarded at K^I <= 1e6.
Gmm barycenter_fixed(const std::vector<Gmm>& inputs, const Vector& lambda,
                     const FixedBarycenterConfig& config = {});

/// Free-component barycenter: Adam over QuantParams on the lambda-weighted
/// sum of squared DSMW estimates. With a single input this is exactly
/// quantize (identical traces for identical seeds).
OptimReport barycenter_free(const std::vector<Gmm>& inputs, const Vector& lambda,
                            int k_star, const OptimConfig& config);

struct SwBarycenterConfig {
  int slices = 100;
  int steps = 200;
  double lr = 0.03;
  int restarts = 1;
  std::uint64_t seed = 0;
  int heldout_factor = 10;
};

/// Sliced Wasserstein barycenter of point clouds: Adam over n support points
/// of a uniform candidate cloud.
PointCloud sw_barycenter_points(const std::vector<PointCloud>& inputs,
                                const Vector& lambda, int n,
                                const SwBarycenterConfig& config);

}  // namespace gmmot
