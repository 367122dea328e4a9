#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "gmmot/distances.hpp"
#include "gmmot/mixture.hpp"

namespace gmmot {

/// %.17g rendering used by every text output; round-trips doubles exactly.
std::string format_double(double x);

/// GMM JSON: {"d": int, "weights": [...], "means": [[...]], "covs": [[[...]]]}.
/// On load the weights are renormalized (a warning is recorded past 1e-9
/// deviation, a ParseError raised past 1e-6), covariances are symmetrized
/// (ParseError past 1e-8 asymmetry) and must be PSD within tolerance.
Gmm parse_gmm_json(const std::string& text, std::vector<std::string>* warnings = nullptr);
Gmm load_gmm(const std::string& path, std::vector<std::string>* warnings = nullptr);

/// Canonical serialization: components sorted by descending weight, fixed key
/// order, 17 significant digits. Saving a loaded file is byte-idempotent.
void save_gmm(const Gmm& gmm, std::ostream& os);
void save_gmm_file(const Gmm& gmm, const std::string& path);

/// CSV points: optional header, d numeric columns, optional trailing
/// "weight" column (or forced via flag). ParseErrors carry row/column.
PointCloud load_points(const std::string& path, bool force_weight_column = false,
                       bool normalize_weights = false);
PointCloud parse_points_csv(const std::string& text, bool force_weight_column = false,
                            bool normalize_weights = false);
void save_points(const PointCloud& cloud, const std::string& path);

struct ResultFile {
  std::string metric;
  double value = 0.0;
  double squared = 0.0;
  double stderr_estimate = 0.0;
  long long slices = 0;
  std::uint64_t seed = 0;
  double elapsed_ms = 0.0;
};

/// Single-line JSON document with the fixed key order
/// metric,value,squared,stderr,slices,seed,elapsed_ms,version.
std::string result_to_json(const ResultFile& r);

/// Binary PGM (P5, 16-bit big-endian samples, max-normalized); top row is the
/// highest-y row of the grid.
void write_pgm(const DensityGrid& grid, std::ostream& os);

/// CSV raster, one grid row per line, lowest-y row first.
void write_density_csv(const DensityGrid& grid, std::ostream& os);

/// Dense transport plan, one CSV row per source component.
void write_plan_csv(const TransportPlan& plan, std::ostream& os);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& contents);

}  // namespace gmmot
