#include "gmmot/optimize.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "gmmot/parallel.hpp"
#include "gmmot/rng.hpp"

namespace gmmot {

namespace {

Vector softmax(const Vector& logits) {
  double mx = logits[0];
  for (double x : logits) mx = std::max(mx, x);
  Vector w(logits.size());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    w[i] = std::exp(logits[i] - mx);
    total += w[i];
  }
  for (double& x : w) x /= total;
  return w;
}

// d(loss)/d(logit_i) from d(loss)/d(weight): the softmax Jacobian annihilates
// any constant shift of the weight gradient (and so the dual gauge).
Vector softmax_chain(const Vector& weights, const Vector& weight_grad) {
  double avg = 0.0;
  for (std::size_t k = 0; k < weights.size(); ++k) avg += weights[k] * weight_grad[k];
  Vector out(weights.size());
  for (std::size_t i = 0; i < weights.size(); ++i)
    out[i] = weights[i] * (weight_grad[i] - avg);
  return out;
}

Vector normalized_lambda(Vector lambda) {
  double total = 0.0;
  for (double l : lambda) {
    if (l < 0.0) throw InvalidInput("lambda: entries must be nonnegative");
    total += l;
  }
  if (lambda.empty() || total <= 0.0) throw InvalidInput("lambda: needs positive total");
  for (double& l : lambda) l /= total;
  return lambda;
}

double wall_ms_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
      .count();
}

}  // namespace

Gmm realize(const QuantParams& params) {
  if (params.size() < 1) throw InvalidInput("realize: needs at least one component");
  if (!(params.sigma_floor > 0.0)) throw InvalidInput("realize: sigma_floor must be > 0");
  const int d = params.dim();
  const double s2 = params.sigma_floor * params.sigma_floor;
  std::vector<GaussianComponent> comps;
  comps.reserve(params.size());
  for (int k = 0; k < params.size(); ++k) {
    const Matrix& q = params.factors[k];
    if (q.rows() != d || q.cols() != d ||
        static_cast<int>(params.means[k].size()) != d)
      throw InvalidInput("realize: inconsistent parameter shapes");
    Matrix cov(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j <= i; ++j) {
        double s = 0.0;
        for (int c = 0; c <= std::min(i, j); ++c) s += q(i, c) * q(j, c);
        cov(i, j) = cov(j, i) = s;
      }
    for (int i = 0; i < d; ++i) cov(i, i) += s2;
    comps.emplace_back(params.means[k], PsdMatrix::trusted(SymMatrix(std::move(cov))));
  }
  return Gmm(softmax(params.logits), std::move(comps));
}

DsmwGradient dsmw_sq_grad(const QuantParams& params, const Gmm& target,
                          const SliceSet& slices) {
  const Gmm cand = realize(params);
  if (cand.dim != target.dim || cand.dim != slices.dim)
    throw InvalidInput("dsmw_sq_grad: dimension mismatch");
  const int k_cand = cand.size(), k_tgt = target.size(), d = cand.dim;

  Matrix m0, s0, m1, s1;
  detail::project_all(cand, slices, m0, s0);
  detail::project_all(target, slices, m1, s1);

  const long long pairs = slices.pair_count();
  Vector per_slice(static_cast<std::size_t>(pairs), 0.0);

  constexpr int kChunk = 16;
  const int chunks = static_cast<int>((pairs + kChunk - 1) / kChunk);
  struct ChunkGrad {
    Vector fbar;                  // summed dual potentials on candidate atoms
    std::vector<Vector> means;
    std::vector<Matrix> factors;
  };
  std::vector<ChunkGrad> acc(chunks);
  for (auto& c : acc) {
    c.fbar.assign(k_cand, 0.0);
    c.means.assign(k_cand, Vector(d, 0.0));
    c.factors.assign(k_cand, Matrix(d, d));
  }

  parallel_for(static_cast<std::size_t>(chunks), [&](std::size_t ch) {
    Vector xa(k_cand), xb(k_tgt), u(d), h(k_cand);
    const long long lo = static_cast<long long>(ch) * kChunk;
    const long long hi = std::min(pairs, lo + kChunk);
    for (long long l = lo; l < hi; ++l) {
      const int ti = slices.pair_theta(l);
      const double phi = slices.pair_phi(l);
      const double cphi = std::cos(phi), sphi = std::sin(phi);
      for (int k = 0; k < k_cand; ++k) xa[k] = m0(ti, k) * cphi + s0(ti, k) * sphi;
      for (int k = 0; k < k_tgt; ++k) xb[k] = m1(ti, k) * cphi + s1(ti, k) * sphi;
      const PointMeasure1d a(xa, cand.weights);
      const PointMeasure1d b(xb, target.weights);
      const Coupling1d coupling = coupling_1d(a, b);
      per_slice[static_cast<std::size_t>(l)] = coupling.cost;

      // Support gradient from the monotone plan.
      std::fill(h.begin(), h.end(), 0.0);
      for (std::size_t e = 0; e < coupling.pairs.size(); ++e) {
        const int i = coupling.pairs[e][0];
        h[i] += 2.0 * coupling.mass[e] * (xa[i] - xb[coupling.pairs[e][1]]);
      }
      // Weight gradient through the dual potentials.
      const DualPotentials duals = duals_1d(a, b, coupling);
      for (int k = 0; k < k_cand; ++k) acc[ch].fbar[k] += duals.f[k];

      const std::span<const double> theta = slices.thetas.row(ti);
      for (int k = 0; k < k_cand; ++k) {
        if (h[k] == 0.0) continue;
        // p_k = (theta . m_k) cos(phi) + s_k sin(phi)
        const double hm = h[k] * cphi;
        for (int c = 0; c < d; ++c) acc[ch].means[k][c] += hm * theta[c];
        // s_k = sqrt(||Q_k^T theta||^2 + sigma^2); ds/dQ = outer(theta, u)/s
        const Matrix& q = params.factors[k];
        for (int c = 0; c < d; ++c) {
          double s = 0.0;
          for (int r = c; r < d; ++r) s += q(r, c) * theta[r];
          u[c] = s;
        }
        const double hs = h[k] * sphi / s0(ti, k);
        Matrix& gq = acc[ch].factors[k];
        for (int r = 0; r < d; ++r)
          for (int c = 0; c <= r; ++c) gq(r, c) += hs * theta[r] * u[c];
      }
    }
  });

  DsmwGradient out;
  {
    double total = 0.0;
    for (double x : per_slice) total += x;
    out.loss = total / static_cast<double>(per_slice.size());
  }
  Vector fbar(k_cand, 0.0);
  out.grad_means.assign(k_cand, Vector(d, 0.0));
  out.grad_factors.assign(k_cand, Matrix(d, d));
  const double inv = 1.0 / static_cast<double>(pairs);
  for (int ch = 0; ch < chunks; ++ch)
    for (int k = 0; k < k_cand; ++k) {
      fbar[k] += acc[ch].fbar[k];
      for (int c = 0; c < d; ++c) out.grad_means[k][c] += acc[ch].means[k][c];
      for (int r = 0; r < d; ++r)
        for (int c = 0; c <= r; ++c) out.grad_factors[k](r, c) += acc[ch].factors[k](r, c);
    }
  for (int k = 0; k < k_cand; ++k) {
    fbar[k] *= inv;
    for (int c = 0; c < d; ++c) out.grad_means[k][c] *= inv;
    for (int r = 0; r < d; ++r)
      for (int c = 0; c <= r; ++c) out.grad_factors[k](r, c) *= inv;
  }
  out.grad_logits = softmax_chain(cand.weights, fbar);
  return out;
}

void AdamState::update(Vector& params, const Vector& grad) {
  if (params.size() != m.size() || grad.size() != m.size())
    throw InvalidInput("AdamState: size mismatch");
  ++step;
  const double c1 = 1.0 - std::pow(config.beta1, static_cast<double>(step));
  const double c2 = 1.0 - std::pow(config.beta2, static_cast<double>(step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * grad[i];
    v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * grad[i] * grad[i];
    params[i] -= config.lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + config.epsilon);
  }
}

// ---------------------------------------------------------------------------
// Quantization / free barycenters share one driver.
// ---------------------------------------------------------------------------

namespace {

struct FlatParams {
  static std::size_t size(int k, int d) {
    return static_cast<std::size_t>(k) * (1 + d + static_cast<std::size_t>(d) * d);
  }

  static Vector flatten(const QuantParams& p) {
    const int k = p.size(), d = p.dim();
    Vector flat;
    flat.reserve(size(k, d));
    flat.insert(flat.end(), p.logits.begin(), p.logits.end());
    for (int c = 0; c < k; ++c) flat.insert(flat.end(), p.means[c].begin(), p.means[c].end());
    for (int c = 0; c < k; ++c) {
      const double* q = p.factors[c].data();
      flat.insert(flat.end(), q, q + static_cast<std::size_t>(d) * d);
    }
    return flat;
  }

  static void unflatten(const Vector& flat, QuantParams& p) {
    const int k = p.size(), d = p.dim();
    std::size_t at = 0;
    for (int c = 0; c < k; ++c) p.logits[c] = flat[at++];
    for (int c = 0; c < k; ++c)
      for (int i = 0; i < d; ++i) p.means[c][i] = flat[at++];
    for (int c = 0; c < k; ++c)
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) p.factors[c](i, j) = flat[at++];
  }

  static Vector flatten_grad(const DsmwGradient& g, int k, int d) {
    Vector flat;
    flat.reserve(size(k, d));
    flat.insert(flat.end(), g.grad_logits.begin(), g.grad_logits.end());
    for (int c = 0; c < k; ++c)
      flat.insert(flat.end(), g.grad_means[c].begin(), g.grad_means[c].end());
    for (int c = 0; c < k; ++c) {
      const double* q = g.grad_factors[c].data();
      flat.insert(flat.end(), q, q + static_cast<std::size_t>(d) * d);
    }
    return flat;
  }
};

// Keeps Q lower-triangular with nonnegative diagonal after each step.
void project_factors(QuantParams& p) {
  const int d = p.dim();
  for (auto& q : p.factors)
    for (int i = 0; i < d; ++i) {
      q(i, i) = std::max(0.0, q(i, i));
      for (int j = i + 1; j < d; ++j) q(i, j) = 0.0;
    }
}

OptimReport fit_dsmw(const std::vector<Gmm>& inputs, const Vector& lambda_in,
                     int k_star, const OptimConfig& config) {
  const auto t0 = std::chrono::steady_clock::now();
  if (inputs.empty()) throw InvalidInput("fit_dsmw: needs at least one input");
  if (k_star < 1) throw InvalidInput("fit_dsmw: k_star must be >= 1");
  const int d = inputs.front().dim;
  for (const auto& g : inputs)
    if (g.dim != d) throw InvalidInput("fit_dsmw: inputs disagree on dimension");
  const Vector lambda = normalized_lambda(lambda_in);
  if (lambda.size() != inputs.size())
    throw InvalidInput("fit_dsmw: lambda size mismatch");

  // Per input component: a Cholesky factor for drawing initial means, and an
  // initial Q with Q Q^T + floor^2 I matching the component covariance (the
  // floor excess clamped away). Zero factors would sit on the stationary
  // manifold of Q Q^T, where the covariance gradient vanishes identically.
  std::vector<std::vector<LowerTriangular>> factors(inputs.size());
  std::vector<std::vector<Matrix>> init_q(inputs.size());
  const double floor2 = config.sigma_floor * config.sigma_floor;
  for (std::size_t i = 0; i < inputs.size(); ++i)
    for (const auto& comp : inputs[i].components) {
      factors[i].push_back(cholesky(comp.cov));
      Matrix excess = comp.cov.entries();
      for (int c = 0; c < d; ++c) excess(c, c) -= floor2;
      const EigenDecomposition eig = sym_eig(SymMatrix(std::move(excess)));
      Matrix scaled(d, d);
      for (int cj = 0; cj < d; ++cj) {
        const double lam = std::max(0.0, eig.eigenvalues[cj]);
        for (int ci = 0; ci < d; ++ci) scaled(ci, cj) = eig.eigenvectors(ci, cj) * lam;
      }
      const Matrix clamped = multiply(scaled, transpose(eig.eigenvectors));
      init_q[i].push_back(
          cholesky(PsdMatrix::trusted(SymMatrix(clamped))).entries());
    }

  const SliceSet heldout = SliceSet::monte_carlo(
      d, std::max(1, config.heldout_factor * config.slices), mix_seed(config.seed, 0x48454C44));

  OptimReport report;
  report.traces.assign(config.restarts, Vector());
  report.heldout.assign(config.restarts, 0.0);
  std::vector<QuantParams> finals(config.restarts);

  for (int r = 0; r < config.restarts; ++r) {
    QuantParams params;
    params.sigma_floor = config.sigma_floor;
    params.logits.assign(k_star, 0.0);
    params.means.assign(k_star, Vector(d, 0.0));
    params.factors.assign(k_star, Matrix(d, d));
    RandomStream rs(mix_seed(config.seed, static_cast<std::uint64_t>(r), 0x494E4954));
    for (int k = 0; k < k_star; ++k) {
      const int i = rs.categorical(lambda);
      const int c = rs.categorical(inputs[i].weights);
      const auto& l = factors[i][c];
      Vector z(d);
      for (int col = 0; col < d; ++col) z[col] = rs.normal();
      for (int row = 0; row < d; ++row) {
        double x = inputs[i].components[c].mean[row];
        for (int col = 0; col <= row; ++col) x += l(row, col) * z[col];
        params.means[k][row] = x;
      }
      params.factors[k] = init_q[i][c];
    }

    AdamState adam(FlatParams::size(k_star, d), {config.lr, 0.9, 0.999, 1e-8});
    report.traces[r].reserve(config.steps);
    for (int step = 0; step < config.steps; ++step) {
      const SliceSet slices = SliceSet::monte_carlo(
          d, config.slices,
          mix_seed(config.seed, static_cast<std::uint64_t>(r),
                   static_cast<std::uint64_t>(step), 0x53544550));
      double loss = 0.0;
      Vector grad(FlatParams::size(k_star, d), 0.0);
      for (std::size_t i = 0; i < inputs.size(); ++i) {
        if (lambda[i] == 0.0) continue;
        const DsmwGradient g = dsmw_sq_grad(params, inputs[i], slices);
        loss += lambda[i] * g.loss;
        const Vector gf = FlatParams::flatten_grad(g, k_star, d);
        for (std::size_t x = 0; x < grad.size(); ++x) grad[x] += lambda[i] * gf[x];
      }
      report.traces[r].push_back(loss);
      Vector flat = FlatParams::flatten(params);
      adam.update(flat, grad);
      FlatParams::unflatten(flat, params);
      project_factors(params);
    }

    const Gmm fitted = realize(params);
    double heldout_loss = 0.0;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      if (lambda[i] == 0.0) continue;
      heldout_loss += lambda[i] * dsmw(fitted, inputs[i], heldout).squared;
    }
    report.heldout[r] = heldout_loss;
    finals[r] = std::move(params);
  }

  report.best_restart = 0;
  for (int r = 1; r < config.restarts; ++r)
    if (report.heldout[r] < report.heldout[report.best_restart]) report.best_restart = r;
  report.best_loss = report.heldout[report.best_restart];
  report.best_params = std::move(finals[report.best_restart]);
  report.wall_ms = wall_ms_since(t0);
  return report;
}

}  // namespace

OptimReport quantize(const Gmm& target, int k_star, const OptimConfig& config) {
  OptimReport report = fit_dsmw({target}, {1.0}, k_star, config);
  if (k_star >= target.size())
    report.warnings.push_back("k_star >= target component count; nothing is reduced");
  return report;
}

OptimReport barycenter_free(const std::vector<Gmm>& inputs, const Vector& lambda,
                            int k_star, const OptimConfig& config) {
  return fit_dsmw(inputs, lambda, k_star, config);
}

// ---------------------------------------------------------------------------
// Gaussian fixed-point barycenter
// ---------------------------------------------------------------------------

namespace {

// V diag(f(lambda)) V^T for a symmetric input.
Matrix eig_apply(const EigenDecomposition& eig, double (*f)(double)) {
  const int n = eig.eigenvectors.rows();
  Matrix scaled(n, n);
  for (int j = 0; j < n; ++j) {
    const double v = f(eig.eigenvalues[j]);
    for (int i = 0; i < n; ++i) scaled(i, j) = eig.eigenvectors(i, j) * v;
  }
  return multiply(scaled, transpose(eig.eigenvectors));
}

double sqrt_clamped(double x) { return std::sqrt(std::max(0.0, x)); }

}  // namespace

GaussianBarycenterResult gaussian_barycenter(
    const std::vector<GaussianComponent>& components, const Vector& lambda_in,
    const GaussianBarycenterConfig& config) {
  if (components.empty()) throw InvalidInput("gaussian_barycenter: no components");
  const int d = components.front().dim();
  for (const auto& c : components)
    if (c.dim() != d) throw InvalidInput("gaussian_barycenter: dimension mismatch");
  const Vector lambda = normalized_lambda(lambda_in);
  if (lambda.size() != components.size())
    throw InvalidInput("gaussian_barycenter: lambda size mismatch");

  Vector mean(d, 0.0);
  for (std::size_t i = 0; i < components.size(); ++i)
    for (int c = 0; c < d; ++c) mean[c] += lambda[i] * components[i].mean[c];

  Matrix s(d, d);
  for (std::size_t i = 0; i < components.size(); ++i)
    for (int r = 0; r < d; ++r)
      for (int c = 0; c < d; ++c) s(r, c) += lambda[i] * components[i].cov(r, c);
  for (int r = 0; r < d; ++r) s(r, r) += 1e-12;

  bool converged = false;
  int iters = 0;
  Vector residuals;
  for (; iters < config.max_iters; ++iters) {
    const EigenDecomposition eig = sym_eig(SymMatrix(s));
    const double lam_max = std::max(0.0, eig.eigenvalues.front());
    const double clamp = 1e-13 * std::max(lam_max, 1e-300);
    Matrix root(d, d), inv_root(d, d);
    {
      Matrix scaled_r(d, d), scaled_i(d, d);
      for (int j = 0; j < d; ++j) {
        const double lam = std::max(0.0, eig.eigenvalues[j]);
        const double rt = std::sqrt(lam);
        const double ir = lam > clamp ? 1.0 / rt : 0.0;
        for (int i = 0; i < d; ++i) {
          scaled_r(i, j) = eig.eigenvectors(i, j) * rt;
          scaled_i(i, j) = eig.eigenvectors(i, j) * ir;
        }
      }
      root = multiply(scaled_r, transpose(eig.eigenvectors));
      inv_root = multiply(scaled_i, transpose(eig.eigenvectors));
    }
    Matrix a(d, d);
    for (std::size_t i = 0; i < components.size(); ++i) {
      if (lambda[i] == 0.0) continue;
      const Matrix rsr = multiply(multiply(root, components[i].cov.entries()), root);
      const Matrix piece = eig_apply(sym_eig(SymMatrix(rsr)), sqrt_clamped);
      for (int r = 0; r < d; ++r)
        for (int c = 0; c < d; ++c) a(r, c) += lambda[i] * piece(r, c);
    }
    const Matrix c_half = multiply(inv_root, a);
    const Matrix next = multiply(c_half, transpose(c_half));
    double change = 0.0;
    for (int r = 0; r < d; ++r)
      for (int c = 0; c < d; ++c) {
        const double diff = next(r, c) - s(r, c);
        change += diff * diff;
      }
    s = next;
    residuals.push_back(std::sqrt(change));
    if (residuals.back() < config.tol) {
      converged = true;
      ++iters;
      break;
    }
  }
  return {GaussianComponent(std::move(mean), PsdMatrix::trusted(SymMatrix(std::move(s)))),
          converged, iters, std::move(residuals)};
}

// ---------------------------------------------------------------------------
// Fixed-component barycenter: only the weight logits move.
// ---------------------------------------------------------------------------

namespace {

// Squared DSMW estimate plus the slice-averaged dual potentials on the
// candidate atoms (the weight gradient before the softmax chain).
std::pair<double, Vector> dsmw_sq_weight_duals(const Gmm& cand, const Gmm& target,
                                               const SliceSet& slices) {
  Matrix m0, s0, m1, s1;
  detail::project_all(cand, slices, m0, s0);
  detail::project_all(target, slices, m1, s1);
  const long long pairs = slices.pair_count();
  Vector fbar(cand.size(), 0.0);
  Vector xa(cand.size()), xb(target.size());
  double total = 0.0;
  for (long long l = 0; l < pairs; ++l) {
    const int ti = slices.pair_theta(l);
    const double phi = slices.pair_phi(l);
    const double c = std::cos(phi), sn = std::sin(phi);
    for (int k = 0; k < cand.size(); ++k) xa[k] = m0(ti, k) * c + s0(ti, k) * sn;
    for (int k = 0; k < target.size(); ++k) xb[k] = m1(ti, k) * c + s1(ti, k) * sn;
    const PointMeasure1d a(xa, cand.weights);
    const PointMeasure1d b(xb, target.weights);
    const Coupling1d coupling = coupling_1d(a, b);
    total += coupling.cost;
    const DualPotentials duals = duals_1d(a, b, coupling);
    for (int k = 0; k < cand.size(); ++k) fbar[k] += duals.f[k];
  }
  const double inv = 1.0 / static_cast<double>(pairs);
  for (double& x : fbar) x *= inv;
  return {total * inv, fbar};
}

}  // namespace

Gmm barycenter_fixed(const std::vector<Gmm>& inputs, const Vector& lambda_in,
                     const FixedBarycenterConfig& config) {
  if (inputs.empty()) throw InvalidInput("barycenter_fixed: needs inputs");
  const int d = inputs.front().dim;
  for (const auto& g : inputs)
    if (g.dim != d) throw InvalidInput("barycenter_fixed: dimension mismatch");
  const Vector lambda = normalized_lambda(lambda_in);
  if (lambda.size() != inputs.size())
    throw InvalidInput("barycenter_fixed: lambda size mismatch");

  double table = 1.0;
  for (const auto& g : inputs) table *= static_cast<double>(g.size());
  if (table > 1e6)
    throw ResourceGuard(
        "barycenter_fixed: component table exceeds 1e6 entries; use the free mode");
  const long long count = static_cast<long long>(table);

  // All K_1 * ... * K_I pairwise Gaussian barycenters, multi-index order.
  BaryWeights weights;
  for (const auto& g : inputs) weights.shape.push_back(g.size());
  weights.logits.assign(static_cast<std::size_t>(count), 0.0);
  std::vector<GaussianComponent> comps;
  comps.reserve(static_cast<std::size_t>(count));
  std::vector<int> index(inputs.size(), 0);
  std::vector<GaussianComponent> pick;
  for (long long e = 0; e < count; ++e) {
    pick.clear();
    for (std::size_t i = 0; i < inputs.size(); ++i)
      pick.push_back(inputs[i].components[index[i]]);
    comps.push_back(gaussian_barycenter(pick, lambda).component);
    for (int i = static_cast<int>(index.size()) - 1; i >= 0; --i) {
      if (++index[i] < weights.shape[i]) break;
      index[i] = 0;
    }
  }

  const SliceSet heldout = SliceSet::monte_carlo(
      d, 4 * config.slices, mix_seed(config.seed, 0x48454C44, 0x46495845));
  const auto heldout_loss = [&](const Gmm& cand) {
    double total = 0.0;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      if (lambda[i] == 0.0) continue;
      total += lambda[i] * dsmw(cand, inputs[i], heldout).squared;
    }
    return total;
  };

  AdamState adam(weights.logits.size(), {config.lr, 0.9, 0.999, 1e-8});
  Vector best_logits = weights.logits;
  double best_seen = heldout_loss(Gmm(softmax(weights.logits), comps));
  for (int step = 0; step < config.steps; ++step) {
    const SliceSet slices = SliceSet::monte_carlo(
        d, config.slices, mix_seed(config.seed, static_cast<std::uint64_t>(step), 0x46495845));
    const Gmm cand(softmax(weights.logits), comps);
    Vector weight_grad(weights.logits.size(), 0.0);
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      if (lambda[i] == 0.0) continue;
      const auto [loss, fbar] = dsmw_sq_weight_duals(cand, inputs[i], slices);
      (void)loss;
      for (std::size_t k = 0; k < weight_grad.size(); ++k)
        weight_grad[k] += lambda[i] * fbar[k];
    }
    const Vector grad = softmax_chain(cand.weights, weight_grad);
    adam.update(weights.logits, grad);
    // Stochastic steps wobble around the optimum; keep the best iterate seen
    // on the frozen held-out directions.
    const double score = heldout_loss(Gmm(softmax(weights.logits), comps));
    if (score < best_seen) {
      best_seen = score;
      best_logits = weights.logits;
    }
  }

  // Realize and prune negligible weights.
  const Vector w = softmax(best_logits);
  Vector kept_w;
  std::vector<GaussianComponent> kept_c;
  for (std::size_t k = 0; k < w.size(); ++k) {
    if (w[k] >= 1e-12) {
      kept_w.push_back(w[k]);
      kept_c.push_back(comps[k]);
    }
  }
  if (kept_w.empty()) throw NumericalError("barycenter_fixed: all weights vanished");
  return Gmm(std::move(kept_w), std::move(kept_c));
}

// ---------------------------------------------------------------------------
// SW barycenter over point clouds
// ---------------------------------------------------------------------------

PointCloud sw_barycenter_points(const std::vector<PointCloud>& inputs,
                                const Vector& lambda_in, int n,
                                const SwBarycenterConfig& config) {
  if (inputs.empty()) throw InvalidInput("sw_barycenter_points: needs inputs");
  if (n < 1) throw InvalidInput("sw_barycenter_points: n must be >= 1");
  const int d = inputs.front().dim;
  for (const auto& c : inputs)
    if (c.dim != d) throw InvalidInput("sw_barycenter_points: dimension mismatch");
  const Vector lambda = normalized_lambda(lambda_in);
  if (lambda.size() != inputs.size())
    throw InvalidInput("sw_barycenter_points: lambda size mismatch");

  const SliceSet heldout = SliceSet::monte_carlo(
      d, std::max(1, config.heldout_factor * config.slices), mix_seed(config.seed, 0x5357484C));

  // Pre-sorted projections are recomputed per step; inputs keep their weights.
  const auto input_weight = [&](const PointCloud& c, int i) {
    return c.weights.empty() ? 1.0 / c.size() : c.weights[i];
  };

  const auto loss_and_grad = [&](const Matrix& pts, const SliceSet& slices,
                                 Matrix* grad) -> double {
    const int t_count = slices.theta_count();
    Vector per_slice(t_count, 0.0);
    if (grad) *grad = Matrix(n, d);
    std::vector<Matrix> slot_grad;
    if (grad) slot_grad.assign(t_count, Matrix());
    parallel_for(static_cast<std::size_t>(t_count), [&](std::size_t t) {
      const std::span<const double> theta = slices.thetas.row(static_cast<int>(t));
      std::vector<int> order(n);
      Vector pc(n);
      for (int i = 0; i < n; ++i) {
        double s = 0.0;
        for (int c = 0; c < d; ++c) s += theta[c] * pts(i, c);
        pc[i] = s;
      }
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(),
                       [&](int x, int y) { return pc[x] < pc[y]; });
      Vector pcs(n), grad_p(n, 0.0);
      for (int i = 0; i < n; ++i) pcs[i] = pc[order[i]];
      double slice_loss = 0.0;
      for (std::size_t ii = 0; ii < inputs.size(); ++ii) {
        if (lambda[ii] == 0.0) continue;
        const PointCloud& cloud = inputs[ii];
        const int m = cloud.size();
        Vector pt(m), wt(m);
        for (int i = 0; i < m; ++i) {
          double s = 0.0;
          for (int c = 0; c < d; ++c) s += theta[c] * cloud.points(i, c);
          pt[i] = s;
        }
        std::vector<int> torder(m);
        std::iota(torder.begin(), torder.end(), 0);
        std::stable_sort(torder.begin(), torder.end(),
                         [&](int x, int y) { return pt[x] < pt[y]; });
        Vector pts_sorted(m);
        for (int i = 0; i < m; ++i) {
          pts_sorted[i] = pt[torder[i]];
          wt[i] = input_weight(cloud, torder[i]);
        }
        // quantile merge with gradient on the candidate side
        int i = 0, j = 0;
        double ra = 1.0 / n, rb = wt[0];
        while (i < n && j < m) {
          const double mass = std::min(ra, rb);
          const double diff = pcs[i] - pts_sorted[j];
          slice_loss += lambda[ii] * mass * diff * diff;
          grad_p[i] += lambda[ii] * 2.0 * mass * diff;
          ra -= mass;
          rb -= mass;
          const bool ea = (ra <= 0.0), eb = (rb <= 0.0);
          if (ea && eb) {
            ++i;
            ++j;
            if (i < n) ra = 1.0 / n;
            if (j < m) rb = wt[j];
          } else if (ea) {
            ++i;
            if (i < n) ra = 1.0 / n;
          } else {
            ++j;
            if (j < m) rb = wt[j];
          }
        }
      }
      per_slice[t] = slice_loss;
      if (grad) {
        Matrix g(n, d);
        for (int i = 0; i < n; ++i) {
          const int orig = order[i];
          for (int c = 0; c < d; ++c) g(orig, c) = grad_p[i] * theta[c];
        }
        slot_grad[t] = std::move(g);
      }
    });
    double total = 0.0;
    for (double x : per_slice) total += x;
    total /= t_count;
    if (grad) {
      for (int t = 0; t < t_count; ++t)
        for (int i = 0; i < n; ++i)
          for (int c = 0; c < d; ++c) (*grad)(i, c) += slot_grad[t](i, c);
      for (int i = 0; i < n; ++i)
        for (int c = 0; c < d; ++c) (*grad)(i, c) /= t_count;
    }
    return total;
  };

  Matrix best_pts;
  double best_loss = std::numeric_limits<double>::infinity();
  for (int r = 0; r < std::max(1, config.restarts); ++r) {
    RandomStream rs(mix_seed(config.seed, static_cast<std::uint64_t>(r), 0x73774259));
    Matrix pts(n, d);
    for (int i = 0; i < n; ++i) {
      const int ii = rs.categorical(lambda);
      const PointCloud& cloud = inputs[ii];
      int idx;
      if (cloud.weights.empty())
        idx = std::min(cloud.size() - 1, static_cast<int>(rs.uniform() * cloud.size()));
      else
        idx = rs.categorical(cloud.weights);
      for (int c = 0; c < d; ++c) pts(i, c) = cloud.points(idx, c);
    }
    AdamState adam(static_cast<std::size_t>(n) * d, {config.lr, 0.9, 0.999, 1e-8});
    for (int step = 0; step < config.steps; ++step) {
      const SliceSet slices = SliceSet::monte_carlo(
          d, config.slices,
          mix_seed(config.seed, static_cast<std::uint64_t>(r),
                   static_cast<std::uint64_t>(step), 0x53575054));
      Matrix grad;
      loss_and_grad(pts, slices, &grad);
      Vector flat(pts.data(), pts.data() + static_cast<std::size_t>(n) * d);
      Vector gflat(grad.data(), grad.data() + static_cast<std::size_t>(n) * d);
      adam.update(flat, gflat);
      std::copy(flat.begin(), flat.end(), pts.data());
    }
    const double heldout_loss = loss_and_grad(pts, heldout, nullptr);
    if (heldout_loss < best_loss) {
      best_loss = heldout_loss;
      best_pts = std::move(pts);
    }
  }
  return PointCloud(d, std::move(best_pts));
}

}  // namespace gmmot
