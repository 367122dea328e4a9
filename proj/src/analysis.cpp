#include "gmmot/analysis.hpp"

#include <chrono>
#include <cmath>

#include "gmmot/parallel.hpp"
#include "gmmot/rng.hpp"

namespace gmmot {

namespace {

DistanceValue eval_metric(const std::string& metric, const Gmm& a, const Gmm& b,
                          const SliceSet& slices) {
  if (metric == "mw") return mw(a, b);
  if (metric == "msw") return msw(a, b, slices);
  if (metric == "smw") return smw(a, b, slices);
  if (metric == "dsmw") return dsmw(a, b, slices);
  if (metric == "sw-gmm") return sw_gmm(a, b, slices);
  throw InvalidInput("unknown metric: " + metric);
}

}  // namespace

ClusterReport detect_clusters(const PointCloud& data, int k_max,
                              const std::string& metric, const ClusterConfig& config) {
  if (k_max < 2) throw InvalidInput("detect_clusters: k_max must be >= 2");
  ClusterReport report;
  report.metric = metric;
  report.tau = config.tau;

  std::vector<std::optional<Gmm>> fits(k_max + 2);
  for (int k = 1; k <= k_max + 1; ++k) {
    EmConfig em = config.em;
    em.seed = config.em.seed ^ static_cast<std::uint64_t>(k);
    try {
      fits[k] = em_fit(data, k, em);
    } catch (const Error&) {
      fits[k] = std::nullopt;  // entry stays missing; detection skips it
    }
  }

  const SliceSet slices =
      SliceSet::monte_carlo(data.dim, config.slices, config.slice_seed);
  report.curve.reserve(k_max);
  for (int k = 1; k <= k_max; ++k) {
    ClusterCurveEntry entry{k, std::nullopt};
    if (fits[k] && fits[k + 1]) {
      try {
        entry.distance = eval_metric(metric, *fits[k], *fits[k + 1], slices).value;
      } catch (const Error&) {
      }
    }
    report.curve.push_back(entry);
  }

  if (fits[1]) {
    Vector mean(data.dim, 0.0);
    for (int i = 0; i < data.size(); ++i)
      for (int c = 0; c < data.dim; ++c) mean[c] += data.weight(i) * data.points(i, c);
    const Gmm dirac(Vector{1.0},
                    {GaussianComponent(mean, PsdMatrix(Matrix(data.dim, data.dim)))});
    try {
      report.scale_anchor = eval_metric(metric, dirac, *fits[1], slices).value;
    } catch (const Error&) {
    }
  }

  double max_dist = report.scale_anchor;
  for (const auto& e : report.curve)
    if (e.distance) max_dist = std::max(max_dist, *e.distance);
  if (max_dist > 0.0) {
    double previous = report.scale_anchor;
    for (const auto& e : report.curve) {
      if (!e.distance) continue;  // missing entries are skipped
      const bool knee = *e.distance < config.tau * max_dist;
      const bool drop = previous > 0.0 && *e.distance < config.drop_tau * previous;
      if (knee || drop) {
        report.detected_k = e.k;
        break;
      }
      previous = *e.distance;
    }
  }
  return report;
}

std::vector<std::pair<double, double>> prop33_ratio_curve(const Vector& eps_list) {
  std::vector<std::pair<double, double>> out;
  out.reserve(eps_list.size());
  const SliceSet slices = SliceSet::equispaced2d(3600, 1);
  for (double eps : eps_list) {
    if (!(eps > 0.0 && eps <= 1.0))
      throw InvalidInput("prop33_ratio_curve: eps must lie in (0, 1]");
    Matrix c0(2, 2), c1(2, 2);
    c0(0, 0) = 1.0;
    c0(1, 1) = eps;
    c1(0, 0) = 1.0;
    c1(1, 1) = 0.0;
    const Gmm mu_eps(Vector{1.0}, {GaussianComponent(Vector{0.0, 0.0}, PsdMatrix(SymMatrix(c0)))});
    const Gmm mu(Vector{1.0}, {GaussianComponent(Vector{0.0, 0.0}, PsdMatrix(SymMatrix(c1)))});
    // Ratio of squared distances, the form of the flat-Gaussian divergence
    // curve; it blows up like eps^{-1/2} as the family degenerates.
    const double w2 = gaussian_w2(mu_eps.components[0], mu.components[0]);
    const double sliced2 = msw(mu_eps, mu, slices).squared;
    out.emplace_back(eps, w2 / sliced2);
  }
  return out;
}

RateReport verify_mc_rate(const std::string& metric, const Gmm& a, const Gmm& b,
                          const std::vector<int>& l_list, int trials,
                          std::uint64_t seed) {
  if (a.dim != 2 || b.dim != 2)
    throw InvalidInput("verify_mc_rate: reference quadrature is defined for d = 2 only");
  if (l_list.empty() || trials < 1) throw InvalidInput("verify_mc_rate: bad arguments");
  const bool use_dsmw = metric == "dsmw";
  if (!use_dsmw && metric != "sw-empirical")
    throw InvalidInput("verify_mc_rate: metric must be dsmw or sw-empirical");

  RateReport report;
  std::optional<PointCloud> ca, cb;
  if (use_dsmw) {
    report.reference_squared = dsmw(a, b, SliceSet::equispaced2d(7200)).squared;
  } else {
    ca = sample(a, 128, mix_seed(seed, 0xC0DE));
    cb = sample(b, 128, mix_seed(seed, 0xC0DE, 1));
    report.reference_squared =
        sw_empirical(*ca, *cb, SliceSet::equispaced2d(7200, 1)).squared;
  }

  for (std::size_t li = 0; li < l_list.size(); ++li) {
    const int l = l_list[li];
    if (l < 1) throw InvalidInput("verify_mc_rate: slice counts must be >= 1");
    Vector errs(trials, 0.0);
    parallel_for(static_cast<std::size_t>(trials), [&](std::size_t t) {
      const SliceSet slices =
          SliceSet::monte_carlo(2, l, mix_seed(seed, li, t, 0x4D43));
      const double est = use_dsmw ? dsmw(a, b, slices).squared
                                  : sw_empirical(*ca, *cb, slices).squared;
      errs[t] = std::fabs(est - report.reference_squared);
    });
    double mean = 0.0;
    for (double e : errs) mean += e;
    mean /= trials;
    report.entries.push_back({l, mean, trials});
  }

  bool positive = true;
  for (const auto& e : report.entries) positive = positive && e.mean_abs_err > 0.0;
  if (!positive) {
    report.degenerate = true;
    report.slope = 0.0;
    return report;
  }
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  const double n = static_cast<double>(report.entries.size());
  for (const auto& e : report.entries) {
    const double x = std::log(static_cast<double>(e.slice_count));
    const double y = std::log(e.mean_abs_err);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  report.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return report;
}

Gmm random_gmm(int dim, int k, std::uint64_t seed) {
  RandomStream rng(seed);
  Vector weights(k);
  for (double& w : weights) w = 0.2 + rng.uniform();
  std::vector<GaussianComponent> comps;
  comps.reserve(k);
  for (int c = 0; c < k; ++c) {
    Vector mean(dim);
    for (double& m : mean) m = rng.uniform(-5.0, 5.0);
    Matrix b(dim, dim);
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j) b(i, j) = rng.normal();
    Matrix cov(dim, dim);
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j <= i; ++j) {
        double s = 0.0;
        for (int l = 0; l < dim; ++l) s += b(i, l) * b(j, l);
        cov(i, j) = cov(j, i) = s / dim;
      }
    for (int i = 0; i < dim; ++i) cov(i, i) += 0.2;
    comps.emplace_back(std::move(mean), PsdMatrix::trusted(SymMatrix(std::move(cov))));
  }
  return Gmm(std::move(weights), std::move(comps));
}

BenchReport bench(const std::vector<std::string>& metrics, const std::vector<int>& dims,
                  const std::vector<int>& ks, int slice_count, int reps,
                  std::uint64_t seed, BenchClock clock) {
  if (metrics.empty() || dims.empty() || ks.empty() || slice_count < 1 || reps < 1)
    throw InvalidInput("bench: all sizes must be >= 1");
  if (!clock) {
    clock = [] {
      return std::chrono::duration<double>(
                 std::chrono::steady_clock::now().time_since_epoch())
          .count();
    };
  }
  BenchReport report;
  report.threads = thread_count();
  for (const auto& metric : metrics) {
    for (int d : dims) {
      for (int k : ks) {
        const Gmm a = random_gmm(d, k, mix_seed(seed, d, k, 1));
        const Gmm b = random_gmm(d, k, mix_seed(seed, d, k, 2));
        const SliceSet slices =
            SliceSet::monte_carlo(d, slice_count, mix_seed(seed, d, k, 3));
        Vector times_ms(reps, 0.0);
        for (int r = 0; r < reps; ++r) {
          const double t0 = clock();
          eval_metric(metric, a, b, slices);
          const double t1 = clock();
          times_ms[r] = (t1 - t0) * 1000.0;
        }
        double mean = 0.0;
        for (double t : times_ms) mean += t;
        mean /= reps;
        double var = 0.0;
        for (double t : times_ms) var += (t - mean) * (t - mean);
        const double stdev = reps > 1 ? std::sqrt(var / (reps - 1)) : 0.0;
        report.rows.push_back({metric, d, k, slice_count, reps, mean, stdev});
      }
    }
  }
  return report;
}

}  // namespace gmmot
