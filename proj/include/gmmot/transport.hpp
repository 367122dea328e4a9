#pragma once

#include <array>
#include <vector>

#include "gmmot/linalg.hpp"
#include "gmmot/mixture.hpp"

namespace gmmot {

/// Nonnegative K0 x K1 coupling matrix whose row sums are the first marginal
/// and whose column sums are the second.
struct TransportPlan {
  Matrix gamma;

  Vector row_sums() const;
  Vector col_sums() const;
};

/// Kantorovich dual variables: f on the first marginal, g on the second, with
/// f_i + g_j <= c_ij and equality on the support of the plan.
struct DualPotentials {
  Vector f;
  Vector g;
};

/// Outcome of a discrete transport solve. `cost` is the squared-distance
/// total (callers take square roots).
struct TransportResult {
  double cost = 0.0;
  TransportPlan plan;
  DualPotentials potentials;
  bool approximate = false;  // set by solve_sinkhorn
  bool converged = true;     // cleared when an iteration limit was hit
};

/// Sparse monotone (quantile) coupling between two 1d point measures: merge
/// entries in quantile order, referencing original atom indices.
struct Coupling1d {
  std::vector<std::array<int, 2>> pairs;
  Vector mass;
  double cost = 0.0;  // sum of mass * (x_i - y_j)^2
};

/// Builds the monotone coupling by merging cumulative weights over the two
/// stably sorted supports (ties keep input order).
Coupling1d coupling_1d(const PointMeasure1d& a, const PointMeasure1d& b);

/// Dual potentials for a monotone 1d coupling. Within each connected segment
/// of the coupling chain the equalities fix the values; free segment
/// constants are chosen closest to zero inside the feasible band, so exact
/// matches get vanishing potentials.
DualPotentials duals_1d(const PointMeasure1d& a, const PointMeasure1d& b,
                        const Coupling1d& coupling);

/// Exact 1d transport with squared-distance cost: monotone plan, squared cost
/// total, and chain-recursion duals (f of the first support anchored at 0).
TransportResult w2_point_1d(const PointMeasure1d& a, const PointMeasure1d& b);

/// Generalized inverse CDF: inf{x | F(x) > t} for t in (0, 1).
double quantile(const PointMeasure1d& a, double t);

/// Exact discrete optimal transport via network simplex on the bipartite
/// transportation graph. Marginal sums must agree within 1e-7.
TransportResult solve_exact(const Matrix& cost, const Vector& w0, const Vector& w1);

/// Entropic approximation (log-domain Sinkhorn). The result is flagged
/// approximate; `converged` is cleared when max_iters was exhausted before
/// the marginal violation dropped below 1e-6.
TransportResult solve_sinkhorn(const Matrix& cost, const Vector& w0, const Vector& w1,
                               double epsilon, int max_iters = 10000);

}  // namespace gmmot
