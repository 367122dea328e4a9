#include "gmmot/reference.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace gmmot::reference {

double dsmw_squared(const Gmm& mu0, const Gmm& mu1, const SliceSet& slices) {
  const long long pairs = slices.pair_count();
  double total = 0.0;
  for (long long l = 0; l < pairs; ++l) {
    const int ti = slices.pair_theta(l);
    const double phi = slices.pair_phi(l);
    const PointMeasure1d a = xi_projection(slices.thetas.row(ti), phi, mu0);
    const PointMeasure1d b = xi_projection(slices.thetas.row(ti), phi, mu1);
    total += coupling_1d(a, b).cost;
  }
  return total / static_cast<double>(pairs);
}

double smw_squared(const Gmm& mu0, const Gmm& mu1, const SliceSet& slices) {
  const int t_count = slices.theta_count();
  double total = 0.0;
  for (int t = 0; t < t_count; ++t) {
    const Gmm1d p0 = project_gmm(slices.thetas.row(t), mu0);
    const Gmm1d p1 = project_gmm(slices.thetas.row(t), mu1);
    Matrix cost(p0.size(), p1.size());
    for (int i = 0; i < p0.size(); ++i)
      for (int j = 0; j < p1.size(); ++j)
        cost(i, j) = gaussian_w2_1d(p0.means[i], p0.stdevs[i], p1.means[j], p1.stdevs[j]);
    total += solve_exact(cost, mu0.weights, mu1.weights).cost;
  }
  return total / static_cast<double>(t_count);
}

double msw_squared(const Gmm& mu0, const Gmm& mu1, const SliceSet& slices) {
  const int t_count = slices.theta_count();
  std::vector<Gmm1d> p0, p1;
  p0.reserve(t_count);
  p1.reserve(t_count);
  for (int t = 0; t < t_count; ++t) {
    p0.push_back(project_gmm(slices.thetas.row(t), mu0));
    p1.push_back(project_gmm(slices.thetas.row(t), mu1));
  }
  Matrix cost(mu0.size(), mu1.size());
  for (int i = 0; i < mu0.size(); ++i)
    for (int j = 0; j < mu1.size(); ++j) {
      double acc = 0.0;
      for (int t = 0; t < t_count; ++t)
        acc += gaussian_w2_1d(p0[t].means[i], p0[t].stdevs[i], p1[t].means[j],
                              p1[t].stdevs[j]);
      cost(i, j) = acc / t_count;
    }
  return solve_exact(cost, mu0.weights, mu1.weights).cost;
}

double sw_empirical_mean_pth(const PointCloud& a, const PointCloud& b,
                             const SliceSet& slices, int p) {
  const int t_count = slices.theta_count();
  double total = 0.0;
  for (int t = 0; t < t_count; ++t) {
    const std::span<const double> theta = slices.thetas.row(t);
    Vector pa(a.size()), pb(b.size());
    for (int i = 0; i < a.size(); ++i) {
      double s = 0.0;
      for (int c = 0; c < a.dim; ++c) s += theta[c] * a.points(i, c);
      pa[i] = s;
    }
    for (int i = 0; i < b.size(); ++i) {
      double s = 0.0;
      for (int c = 0; c < b.dim; ++c) s += theta[c] * b.points(i, c);
      pb[i] = s;
    }
    Vector wa(a.size()), wb(b.size());
    for (int i = 0; i < a.size(); ++i) wa[i] = a.weight(i);
    for (int i = 0; i < b.size(); ++i) wb[i] = b.weight(i);
    const PointMeasure1d ma(pa, wa), mb(pb, wb);
    if (p == 2) {
      total += coupling_1d(ma, mb).cost;
    } else {
      const Coupling1d c = coupling_1d(ma, mb);
      double acc = 0.0;
      for (std::size_t e = 0; e < c.pairs.size(); ++e)
        acc += c.mass[e] *
               std::fabs(ma.supports[c.pairs[e][0]] - mb.supports[c.pairs[e][1]]);
      total += acc;
    }
  }
  return total / static_cast<double>(t_count);
}

Matrix mw_cost_matrix(const Gmm& mu0, const Gmm& mu1) {
  Matrix cost(mu0.size(), mu1.size());
  for (int i = 0; i < mu0.size(); ++i)
    for (int j = 0; j < mu1.size(); ++j)
      cost(i, j) = gaussian_w2(mu0.components[i], mu1.components[j]);
  return cost;
}

}  // namespace gmmot::reference
