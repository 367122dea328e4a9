#pragma once

#include <functional>
#include <optional>
#include <string>
#include <utility>

#include "gmmot/optimize.hpp"

namespace gmmot {

struct ClusterConfig {
  int slices = 200;
  EmConfig em;  // per-k fits use seed em.seed ^ k
  double tau = 0.1;       // knee threshold relative to the curve maximum
  double drop_tau = 0.55; // sharp-drop threshold relative to the previous entry
  std::uint64_t slice_seed = 0;
};

struct ClusterCurveEntry {
  int k = 0;
  std::optional<double> distance;  // between the k- and (k+1)-component fits
};

struct ClusterReport {
  std::vector<ClusterCurveEntry> curve;  // k = 1..k_max
  std::optional<int> detected_k;
  std::string metric;
  double tau = 0.1;
  double scale_anchor = 0.0;  // k = 0 reference: Dirac at the data mean vs the 1-fit
};

/// Fits k = 1..k_max+1 component mixtures and tracks the chosen distance
/// between consecutive fits on a shared SliceSet. Detection picks the
/// smallest k whose entry either falls below tau times the curve maximum
/// (knee) or below drop_tau times the preceding entry (sharp drop). Both
/// comparisons see a k = 0 anchor - the distance between a point mass at
/// the data mean and the one-component fit - which supplies the data scale
/// when a single cluster keeps the curve flat and small.
ClusterReport detect_clusters(const PointCloud& data, int k_max,
                              const std::string& metric, const ClusterConfig& config);

/// Ratio mw/msw for the N(0, diag(1, eps)) vs N(0, diag(1, 0)) family; the
/// msw side uses equispaced quadrature with 3600 directions and the 1d
/// closed form per slice.
std::vector<std::pair<double, double>> prop33_ratio_curve(const Vector& eps_list);

struct RateEntry {
  int slice_count = 0;
  double mean_abs_err = 0.0;
  int trials = 0;
};

struct RateReport {
  std::vector<RateEntry> entries;
  double slope = 0.0;  // log-log least squares
  bool degenerate = false;
  double reference_squared = 0.0;
};

/// Monte Carlo error decay of a sliced estimator against an equispaced
/// reference (d = 2 only). metric is "dsmw" or "sw-empirical".
RateReport verify_mc_rate(const std::string& metric, const Gmm& a, const Gmm& b,
                          const std::vector<int>& l_list, int trials,
                          std::uint64_t seed);

struct BenchRow {
  std::string metric;
  int d = 0;
  int k = 0;
  int slice_count = 0;
  int reps = 0;
  double mean_ms = 0.0;
  double std_ms = 0.0;
};

struct BenchReport {
  std::vector<BenchRow> rows;
  int threads = 1;
};

/// Monotonic clock returning seconds; injectable so tests can pin down what
/// the timed region covers.
using BenchClock = std::function<double()>;

/// Times the chosen metrics on seeded random GMM pairs per (d, K). SliceSet
/// construction and pair generation stay outside the clocked region; the
/// clock brackets exactly the distance evaluation, once per repetition.
BenchReport bench(const std::vector<std::string>& metrics, const std::vector<int>& dims,
                  const std::vector<int>& ks, int slice_count, int reps,
                  std::uint64_t seed, BenchClock clock = {});

/// Seeded random mixture used by the benchmark harness (well-conditioned
/// covariances, uniformish weights).
Gmm random_gmm(int dim, int k, std::uint64_t seed);

}  // namespace gmmot
