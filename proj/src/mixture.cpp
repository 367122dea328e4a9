#include "gmmot/mixture.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "gmmot/parallel.hpp"
#include "gmmot/rng.hpp"

namespace gmmot {

namespace {

void check_finite(std::span<const double> values, const char* what) {
  for (double v : values)
    if (!std::isfinite(v)) throw InvalidInput(std::string(what) + ": non-finite value");
}

Vector normalized_weights(Vector w, const char* what) {
  if (w.empty()) throw InvalidInput(std::string(what) + ": needs at least one atom");
  double total = 0.0;
  for (double x : w) {
    if (!std::isfinite(x) || x < 0.0)
      throw InvalidInput(std::string(what) + ": weights must be finite and nonnegative");
    total += x;
  }
  if (total <= 0.0) throw InvalidInput(std::string(what) + ": weights sum to zero");
  // Renormalizing is skipped inside the tolerance so that normalization is a
  // fixed point (round-tripping a file must not keep nudging the weights).
  if (std::fabs(total - 1.0) > 1e-12)
    for (double& x : w) x /= total;
  return w;
}

}  // namespace

GaussianComponent::GaussianComponent(Vector mean_, PsdMatrix cov_)
    : mean(std::move(mean_)), cov(std::move(cov_)) {
  if (static_cast<int>(mean.size()) != cov.dim())
    throw InvalidInput("GaussianComponent: mean/cov dimension mismatch");
  check_finite(mean, "GaussianComponent");
}

Gmm::Gmm(Vector weights_, std::vector<GaussianComponent> components_)
    : weights(normalized_weights(std::move(weights_), "Gmm")),
      components(std::move(components_)) {
  if (components.empty() || components.size() != weights.size())
    throw InvalidInput("Gmm: weights/components size mismatch");
  dim = components.front().dim();
  for (const auto& c : components)
    if (c.dim() != dim) throw InvalidInput("Gmm: components disagree on dimension");
}

Gmm1d::Gmm1d(Vector weights_, Vector means_, Vector stdevs_)
    : weights(normalized_weights(std::move(weights_), "Gmm1d")),
      means(std::move(means_)),
      stdevs(std::move(stdevs_)) {
  if (means.size() != weights.size() || stdevs.size() != weights.size())
    throw InvalidInput("Gmm1d: field size mismatch");
  check_finite(means, "Gmm1d");
  for (double s : stdevs)
    if (!std::isfinite(s) || s < 0.0) throw InvalidInput("Gmm1d: stdevs must be >= 0");
}

PointMeasure1d::PointMeasure1d(Vector supports_, Vector weights_)
    : supports(std::move(supports_)),
      weights(normalized_weights(std::move(weights_), "PointMeasure1d")) {
  if (supports.size() != weights.size())
    throw InvalidInput("PointMeasure1d: field size mismatch");
  check_finite(supports, "PointMeasure1d");
}

PointMeasure2d::PointMeasure2d(std::vector<std::array<double, 2>> supports_, Vector weights_)
    : supports(std::move(supports_)),
      weights(normalized_weights(std::move(weights_), "PointMeasure2d")) {
  if (supports.size() != weights.size())
    throw InvalidInput("PointMeasure2d: field size mismatch");
  for (const auto& s : supports) {
    if (!std::isfinite(s[0]) || !std::isfinite(s[1]))
      throw InvalidInput("PointMeasure2d: non-finite support");
    if (s[1] < 0.0) throw InvalidInput("PointMeasure2d: sigma coordinate must be >= 0");
  }
}

PointCloud::PointCloud(int dim_, Matrix points_, Vector weights_)
    : dim(dim_), points(std::move(points_)) {
  if (dim < 1 || points.cols() != dim || points.rows() < 1)
    throw InvalidInput("PointCloud: bad shape");
  check_finite({points.data(), static_cast<std::size_t>(points.rows()) * dim}, "PointCloud");
  if (!weights_.empty()) {
    if (static_cast<int>(weights_.size()) != points.rows())
      throw InvalidInput("PointCloud: weights size mismatch");
    weights = normalized_weights(std::move(weights_), "PointCloud");
  }
}

std::pair<double, double> project_component(std::span<const double> theta,
                                            const GaussianComponent& g) {
  if (static_cast<int>(theta.size()) != g.dim())
    throw InvalidInput("project_component: dimension mismatch");
  double norm2 = 0.0, dot = 0.0;
  for (int i = 0; i < g.dim(); ++i) {
    norm2 += theta[i] * theta[i];
    dot += theta[i] * g.mean[i];
  }
  if (std::fabs(norm2 - 1.0) > 2.1e-12)
    throw InvalidInput("project_component: direction must be unit-norm");
  const double var = quad_form(g.cov.sym(), theta);
  return {dot, std::sqrt(std::max(0.0, var))};
}

Gmm1d project_gmm(std::span<const double> theta, const Gmm& mu) {
  Vector means(mu.size()), stdevs(mu.size());
  for (int k = 0; k < mu.size(); ++k) {
    const auto [m, s] = project_component(theta, mu.components[k]);
    means[k] = m;
    stdevs[k] = s;
  }
  return Gmm1d(mu.weights, std::move(means), std::move(stdevs));
}

PointMeasure2d nu_map(const Gmm1d& mu) {
  std::vector<std::array<double, 2>> supports(mu.size());
  for (int k = 0; k < mu.size(); ++k) supports[k] = {mu.means[k], mu.stdevs[k]};
  return PointMeasure2d(std::move(supports), mu.weights);
}

PointMeasure1d xi_projection(std::span<const double> theta, double phi, const Gmm& mu) {
  const double c = std::cos(phi), s = std::sin(phi);
  Vector supports(mu.size());
  for (int k = 0; k < mu.size(); ++k) {
    const auto [m, sd] = project_component(theta, mu.components[k]);
    supports[k] = m * c + sd * s;
  }
  return PointMeasure1d(std::move(supports), mu.weights);
}

// ---------------------------------------------------------------------------
// EM
// ---------------------------------------------------------------------------

namespace {

struct CholeskyPdf {
  Matrix l;          // Cholesky factor of the covariance
  double log_norm;   // -(d/2) log(2 pi) - sum log l_ii

  static CholeskyPdf from(const Matrix& cov) {
    const int d = cov.rows();
    CholeskyPdf out;
    out.l = Matrix(d, d);
    for (int j = 0; j < d; ++j) {
      double diag = cov(j, j);
      for (int k = 0; k < j; ++k) diag -= out.l(j, k) * out.l(j, k);
      if (diag <= 0.0) throw NumericalError("em_fit: covariance lost positive definiteness");
      out.l(j, j) = std::sqrt(diag);
      for (int i = j + 1; i < d; ++i) {
        double s = cov(i, j);
        for (int k = 0; k < j; ++k) s -= out.l(i, k) * out.l(j, k);
        out.l(i, j) = s / out.l(j, j);
      }
    }
    out.log_norm = -0.5 * d * std::log(2.0 * M_PI);
    for (int j = 0; j < d; ++j) out.log_norm -= std::log(out.l(j, j));
    return out;
  }

  double log_pdf(std::span<const double> x, const Vector& mean, Vector& scratch) const {
    const int d = l.rows();
    double quad = 0.0;
    for (int i = 0; i < d; ++i) {
      double s = x[i] - mean[i];
      for (int k = 0; k < i; ++k) s -= l(i, k) * scratch[k];
      scratch[i] = s / l(i, i);
      quad += scratch[i] * scratch[i];
    }
    return log_norm - 0.5 * quad;
  }
};

constexpr int kEmChunk = 256;

}  // namespace

EmResult em_fit_detailed(const PointCloud& data, int k, const EmConfig& config) {
  const int n = data.size(), d = data.dim;
  if (k < 1) throw InvalidInput("em_fit: k must be >= 1");
  if (n < k) throw InvalidInput("em_fit: need at least k data points");

  Vector w(n);
  for (int i = 0; i < n; ++i) w[i] = data.weight(i);

  // Global weighted mean / covariance drive the default regularizer and the
  // initial covariances.
  Vector mean0(d, 0.0);
  for (int i = 0; i < n; ++i)
    for (int c = 0; c < d; ++c) mean0[c] += w[i] * data.points(i, c);
  Matrix cov0(d, d);
  double var_trace = 0.0;
  for (int i = 0; i < n; ++i)
    for (int r = 0; r < d; ++r) {
      const double dr = data.points(i, r) - mean0[r];
      for (int c = 0; c <= r; ++c) cov0(r, c) += w[i] * dr * (data.points(i, c) - mean0[c]);
    }
  for (int r = 0; r < d; ++r) {
    var_trace += cov0(r, r);
    for (int c = r + 1; c < d; ++c) cov0(r, c) = cov0(c, r);
  }
  const double cov_reg =
      config.cov_reg >= 0.0 ? config.cov_reg : 1e-6 * std::max(var_trace, 1e-300) / d;

  // k-means++ style seeding on the weighted data.
  RandomStream rng(config.seed);
  std::vector<int> centers;
  centers.push_back(rng.categorical(w));
  Vector dist2(n);
  while (static_cast<int>(centers.size()) < k) {
    Vector score(n);
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (int c : centers) {
        double s = 0.0;
        for (int col = 0; col < d; ++col) {
          const double diff = data.points(i, col) - data.points(c, col);
          s += diff * diff;
        }
        best = std::min(best, s);
      }
      dist2[i] = best;
      score[i] = w[i] * best;
      total += score[i];
    }
    centers.push_back(total > 0.0 ? rng.categorical(score) : rng.categorical(w));
  }

  Vector weights(k, 1.0 / k);
  std::vector<Vector> means(k, Vector(d));
  std::vector<Matrix> covs(k);
  for (int c = 0; c < k; ++c) {
    for (int col = 0; col < d; ++col) means[c][col] = data.points(centers[c], col);
    covs[c] = cov0;
    for (int r = 0; r < d; ++r) covs[c](r, r) += cov_reg;
  }

  const int chunks = (n + kEmChunk - 1) / kEmChunk;
  Matrix resp(n, k);
  Vector point_ll(n);
  EmResult result{Gmm(Vector(1, 1.0), {GaussianComponent(mean0, PsdMatrix::trusted(SymMatrix(cov0)))}), {}, 0};

  double prev_ll = -std::numeric_limits<double>::infinity();
  for (int iter = 0; iter < config.max_iters; ++iter) {
    std::vector<CholeskyPdf> pdfs(k);
    Vector log_w(k);
    for (int c = 0; c < k; ++c) {
      pdfs[c] = CholeskyPdf::from(covs[c]);
      log_w[c] = weights[c] > 0.0 ? std::log(weights[c]) : -1e300;
    }

    // E-step per chunk; chunk partials are folded serially in index order so
    // the result does not depend on the thread count.
    parallel_for(chunks, [&](std::size_t ch) {
      Vector scratch(d);
      const int lo = static_cast<int>(ch) * kEmChunk;
      const int hi = std::min(n, lo + kEmChunk);
      for (int i = lo; i < hi; ++i) {
        double mx = -std::numeric_limits<double>::infinity();
        for (int c = 0; c < k; ++c) {
          resp(i, c) = log_w[c] + pdfs[c].log_pdf(data.points.row(i), means[c], scratch);
          mx = std::max(mx, resp(i, c));
        }
        double s = 0.0;
        for (int c = 0; c < k; ++c) s += std::exp(resp(i, c) - mx);
        point_ll[i] = mx + std::log(s);
        for (int c = 0; c < k; ++c) resp(i, c) = std::exp(resp(i, c) - mx) / s;
      }
    });

    double ll = 0.0;
    for (int i = 0; i < n; ++i) ll += w[i] * point_ll[i];
    result.loglik.push_back(ll);

    // M-step: responsibilities weighted by the data weights.
    Vector nk(k, 0.0);
    std::vector<Vector> sum_x(k, Vector(d, 0.0));
    {
      std::vector<Vector> chunk_nk(chunks, Vector(k, 0.0));
      std::vector<Vector> chunk_sum(chunks, Vector(static_cast<std::size_t>(k) * d, 0.0));
      parallel_for(chunks, [&](std::size_t ch) {
        const int lo = static_cast<int>(ch) * kEmChunk;
        const int hi = std::min(n, lo + kEmChunk);
        for (int i = lo; i < hi; ++i)
          for (int c = 0; c < k; ++c) {
            const double r = w[i] * resp(i, c);
            chunk_nk[ch][c] += r;
            for (int col = 0; col < d; ++col)
              chunk_sum[ch][static_cast<std::size_t>(c) * d + col] += r * data.points(i, col);
          }
      });
      for (int ch = 0; ch < chunks; ++ch)
        for (int c = 0; c < k; ++c) {
          nk[c] += chunk_nk[ch][c];
          for (int col = 0; col < d; ++col)
            sum_x[c][col] += chunk_sum[ch][static_cast<std::size_t>(c) * d + col];
        }
    }

    bool reseeded = false;
    for (int c = 0; c < k; ++c) {
      if (nk[c] < 1e-12) {
        // Empty cluster: restart it at the datum the model explains worst.
        int worst = 0;
        for (int i = 1; i < n; ++i)
          if (point_ll[i] < point_ll[worst]) worst = i;
        for (int col = 0; col < d; ++col) means[c][col] = data.points(worst, col);
        covs[c] = cov0;
        for (int r = 0; r < d; ++r) covs[c](r, r) += cov_reg;
        weights[c] = 1.0 / n;
        ++result.reseeds;
        reseeded = true;
        continue;
      }
      for (int col = 0; col < d; ++col) means[c][col] = sum_x[c][col] / nk[c];
      weights[c] = nk[c];
      Matrix cov(d, d);
      {
        std::vector<Matrix> chunk_cov(chunks, Matrix(d, d));
        parallel_for(chunks, [&](std::size_t ch) {
          Vector diff(d);
          const int lo = static_cast<int>(ch) * kEmChunk;
          const int hi = std::min(n, lo + kEmChunk);
          for (int i = lo; i < hi; ++i) {
            const double r = w[i] * resp(i, c);
            if (r == 0.0) continue;
            for (int col = 0; col < d; ++col) diff[col] = data.points(i, col) - means[c][col];
            for (int a = 0; a < d; ++a)
              for (int b = 0; b <= a; ++b) chunk_cov[ch](a, b) += r * diff[a] * diff[b];
          }
        });
        for (int ch = 0; ch < chunks; ++ch)
          for (int a = 0; a < d; ++a)
            for (int b = 0; b <= a; ++b) cov(a, b) += chunk_cov[ch](a, b);
      }
      for (int a = 0; a < d; ++a) {
        for (int b = 0; b < a; ++b) cov(b, a) = cov(a, b) /= nk[c];
        cov(a, a) = cov(a, a) / nk[c] + cov_reg;
      }
      covs[c] = std::move(cov);
    }
    double wsum = 0.0;
    for (double x : weights) wsum += x;
    for (double& x : weights) x /= wsum;

    if (!reseeded && iter > 0 &&
        std::fabs(ll - prev_ll) < config.rel_tol * (1.0 + std::fabs(ll)))
      break;
    prev_ll = ll;
  }

  std::vector<GaussianComponent> comps;
  comps.reserve(k);
  for (int c = 0; c < k; ++c)
    comps.emplace_back(means[c], PsdMatrix::trusted(SymMatrix(covs[c])));
  result.gmm = Gmm(weights, std::move(comps));
  return result;
}

Gmm em_fit(const PointCloud& data, int k, const EmConfig& config) {
  return em_fit_detailed(data, k, config).gmm;
}

PointCloud sample(const Gmm& mu, int n, std::uint64_t seed) {
  if (n < 1) throw InvalidInput("sample: n must be >= 1");
  std::vector<LowerTriangular> factors;
  factors.reserve(mu.size());
  for (const auto& comp : mu.components) factors.push_back(cholesky(comp.cov));
  RandomStream rng(seed);
  const int d = mu.dim;
  Matrix pts(n, d);
  Vector z(d);
  for (int i = 0; i < n; ++i) {
    const int c = rng.categorical(mu.weights);
    for (int col = 0; col < d; ++col) z[col] = rng.normal();
    const auto& l = factors[c];
    for (int row = 0; row < d; ++row) {
      double x = mu.components[c].mean[row];
      for (int col = 0; col <= row; ++col) x += l(row, col) * z[col];
      pts(i, row) = x;
    }
  }
  return PointCloud(d, std::move(pts));
}

double pdf_2d(const Gmm& mu, double x, double y) {
  if (mu.dim != 2) throw InvalidInput("pdf_2d: defined for d = 2 only");
  double total = 0.0;
  for (int c = 0; c < mu.size(); ++c) {
    const auto& comp = mu.components[c];
    double a = comp.cov(0, 0), b = comp.cov(0, 1), e = comp.cov(1, 1);
    double det = a * e - b * b;
    if (det <= 0.0) {
      const double jitter = 1e-10 * (a + e);
      a += jitter;
      e += jitter;
      det = a * e - b * b;
      if (det <= 0.0) continue;  // an exact Dirac has no density to raster
    }
    const double dx = x - comp.mean[0], dy = y - comp.mean[1];
    const double quad = (e * dx * dx - 2.0 * b * dx * dy + a * dy * dy) / det;
    total += mu.weights[c] * std::exp(-0.5 * quad) / (2.0 * M_PI * std::sqrt(det));
  }
  return total;
}

DensityGrid density_grid(const Gmm& mu, const GridBounds& bounds, int nx, int ny) {
  if (mu.dim != 2) throw InvalidInput("density_grid: defined for d = 2 only");
  if (nx < 1 || ny < 1) throw InvalidInput("density_grid: resolution must be >= 1");
  if (!(bounds.xmax > bounds.xmin) || !(bounds.ymax > bounds.ymin))
    throw InvalidInput("density_grid: bounds enclose zero area");
  DensityGrid grid;
  grid.xmin = bounds.xmin;
  grid.xmax = bounds.xmax;
  grid.ymin = bounds.ymin;
  grid.ymax = bounds.ymax;
  grid.nx = nx;
  grid.ny = ny;
  grid.values.assign(static_cast<std::size_t>(nx) * ny, 0.0);
  const double hx = (bounds.xmax - bounds.xmin) / nx;
  const double hy = (bounds.ymax - bounds.ymin) / ny;
  parallel_for(static_cast<std::size_t>(ny), [&](std::size_t iy) {
    const double y = bounds.ymin + (iy + 0.5) * hy;
    for (int ix = 0; ix < nx; ++ix) {
      const double x = bounds.xmin + (ix + 0.5) * hx;
      grid.values[iy * nx + ix] = pdf_2d(mu, x, y);
    }
  });
  return grid;
}

}  // namespace gmmot
