#include "gmmot/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

namespace gmmot {

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write file: " + path);
  out << contents;
}

// ---------------------------------------------------------------------------
// GMM JSON
// ---------------------------------------------------------------------------

Gmm parse_gmm_json(const std::string& text, std::vector<std::string>* warnings) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("GMM JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("d") || !j.contains("weights") ||
      !j.contains("means") || !j.contains("covs"))
    throw ParseError("GMM JSON: expected keys d, weights, means, covs");
  int d;
  Vector weights;
  std::vector<Vector> means;
  std::vector<Matrix> covs;
  try {
    d = j.at("d").get<int>();
    weights = j.at("weights").get<Vector>();
    means = j.at("means").get<std::vector<Vector>>();
    const auto covs_raw = j.at("covs").get<std::vector<std::vector<Vector>>>();
    for (const auto& c : covs_raw) {
      Matrix m(static_cast<int>(c.size()), c.empty() ? 0 : static_cast<int>(c[0].size()));
      for (std::size_t r = 0; r < c.size(); ++r) {
        if (static_cast<int>(c[r].size()) != m.cols())
          throw ParseError("GMM JSON: ragged covariance rows");
        for (std::size_t q = 0; q < c[r].size(); ++q) m(static_cast<int>(r), static_cast<int>(q)) = c[r][q];
      }
      covs.push_back(std::move(m));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("GMM JSON: ") + e.what());
  }
  if (d < 1) throw ParseError("GMM JSON: d must be >= 1");
  const std::size_t k = weights.size();
  if (k < 1 || means.size() != k || covs.size() != k)
    throw ParseError("GMM JSON: weights/means/covs must share length K >= 1");

  double sum = 0.0;
  for (double w : weights) {
    if (!std::isfinite(w) || w < 0.0) throw ParseError("GMM JSON: weights must be nonnegative");
    sum += w;
  }
  if (std::fabs(sum - 1.0) > 1e-6)
    throw ParseError("GMM JSON: weights sum deviates from 1 by more than 1e-6");
  if (std::fabs(sum - 1.0) > 1e-9 && warnings)
    warnings->push_back("weights renormalized (sum deviated by " +
                        format_double(sum - 1.0) + ")");

  std::vector<GaussianComponent> comps;
  comps.reserve(k);
  for (std::size_t c = 0; c < k; ++c) {
    if (static_cast<int>(means[c].size()) != d)
      throw ParseError("GMM JSON: mean length disagrees with d");
    if (covs[c].rows() != d || covs[c].cols() != d)
      throw ParseError("GMM JSON: covariance shape disagrees with d");
    double scale = 1.0, asym = 0.0;
    for (int r = 0; r < d; ++r)
      for (int q = 0; q < d; ++q) {
        scale = std::max(scale, std::fabs(covs[c](r, q)));
        asym = std::max(asym, std::fabs(covs[c](r, q) - covs[c](q, r)));
      }
    if (asym > 1e-8 * scale) throw ParseError("GMM JSON: covariance not symmetric within 1e-8");
    try {
      comps.emplace_back(means[c], PsdMatrix(SymMatrix(covs[c])));
    } catch (const NotPsd&) {
      throw ParseError("GMM JSON: covariance of component " + std::to_string(c) +
                       " is not PSD within tolerance");
    }
  }
  return Gmm(std::move(weights), std::move(comps));
}

Gmm load_gmm(const std::string& path, std::vector<std::string>* warnings) {
  return parse_gmm_json(read_file(path), warnings);
}

void save_gmm(const Gmm& gmm, std::ostream& os) {
  // Canonical component order: descending weight, stable.
  std::vector<int> order(gmm.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return gmm.weights[a] > gmm.weights[b]; });
  os << "{\"d\": " << gmm.dim << ", \"weights\": [";
  for (std::size_t i = 0; i < order.size(); ++i)
    os << (i ? ", " : "") << format_double(gmm.weights[order[i]]);
  os << "], \"means\": [";
  for (std::size_t i = 0; i < order.size(); ++i) {
    os << (i ? ", [" : "[");
    const auto& m = gmm.components[order[i]].mean;
    for (int c = 0; c < gmm.dim; ++c) os << (c ? ", " : "") << format_double(m[c]);
    os << "]";
  }
  os << "], \"covs\": [";
  for (std::size_t i = 0; i < order.size(); ++i) {
    os << (i ? ", [" : "[");
    const auto& cov = gmm.components[order[i]].cov;
    for (int r = 0; r < gmm.dim; ++r) {
      os << (r ? ", [" : "[");
      for (int c = 0; c < gmm.dim; ++c) os << (c ? ", " : "") << format_double(cov(r, c));
      os << "]";
    }
    os << "]";
  }
  os << "]}\n";
}

void save_gmm_file(const Gmm& gmm, const std::string& path) {
  std::ostringstream ss;
  save_gmm(gmm, ss);
  write_file(path, ss.str());
}

// ---------------------------------------------------------------------------
// Points CSV
// ---------------------------------------------------------------------------

namespace {

bool parse_cell(const std::string& cell, double& out) {
  const char* b = cell.data();
  const char* e = b + cell.size();
  while (b < e && (*b == ' ' || *b == '\t')) ++b;
  while (e > b && (*(e - 1) == ' ' || *(e - 1) == '\t' || *(e - 1) == '\r')) --e;
  const auto [ptr, ec] = std::from_chars(b, e, out);
  return ec == std::errc{} && ptr == e && b != e && std::isfinite(out);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      cells.push_back(line.substr(start));
      break;
    }
    cells.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return cells;
}

std::string trim(std::string s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) s.pop_back();
  std::size_t b = 0;
  while (b < s.size() && (s[b] == ' ' || s[b] == '\t')) ++b;
  return s.substr(b);
}

}  // namespace

PointCloud parse_points_csv(const std::string& text, bool force_weight_column,
                            bool normalize_weights) {
  std::istringstream in(text);
  std::string line;
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    rows.push_back(split_csv_line(line));
  }
  if (rows.empty()) throw ParseError("points CSV: no rows");

  // Header detection: a first line with any non-numeric cell is a header.
  bool has_header = false;
  for (const auto& cell : rows.front()) {
    double x;
    if (!parse_cell(cell, x)) {
      has_header = true;
      break;
    }
  }
  bool has_weight = force_weight_column;
  std::size_t first_data = 0;
  if (has_header) {
    first_data = 1;
    std::string last = trim(rows.front().back());
    std::transform(last.begin(), last.end(), last.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    if (last == "weight") has_weight = true;
    if (rows.size() < 2) throw ParseError("points CSV: header but no data rows");
  }

  const std::size_t cols = rows[first_data].size();
  if (cols < 1 || (has_weight && cols < 2))
    throw ParseError("points CSV: too few columns");
  const int d = static_cast<int>(cols) - (has_weight ? 1 : 0);
  const int n = static_cast<int>(rows.size() - first_data);
  Matrix pts(n, d);
  Vector weights;
  if (has_weight) weights.resize(n);
  for (int r = 0; r < n; ++r) {
    const auto& cells = rows[first_data + r];
    if (cells.size() != cols)
      throw ParseError("points CSV: row " + std::to_string(first_data + r + 1) +
                       " has " + std::to_string(cells.size()) + " columns, expected " +
                       std::to_string(cols));
    for (std::size_t c = 0; c < cols; ++c) {
      double x;
      if (!parse_cell(cells[c], x))
        throw ParseError("points CSV: cannot parse cell at row " +
                         std::to_string(first_data + r + 1) + ", column " +
                         std::to_string(c + 1));
      if (c < static_cast<std::size_t>(d))
        pts(r, static_cast<int>(c)) = x;
      else
        weights[r] = x;
    }
    if (has_weight && weights[r] < 0.0)
      throw ParseError("points CSV: negative weight at row " +
                       std::to_string(first_data + r + 1));
  }
  if (has_weight && normalize_weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    if (total <= 0.0) throw ParseError("points CSV: weights sum to zero");
    for (double& w : weights) w /= total;
  }
  return PointCloud(d, std::move(pts), std::move(weights));
}

PointCloud load_points(const std::string& path, bool force_weight_column,
                       bool normalize_weights) {
  return parse_points_csv(read_file(path), force_weight_column, normalize_weights);
}

void save_points(const PointCloud& cloud, const std::string& path) {
  std::ostringstream os;
  for (int c = 0; c < cloud.dim; ++c) os << (c ? "," : "") << "x" << c;
  if (!cloud.weights.empty()) os << ",weight";
  os << "\n";
  for (int i = 0; i < cloud.size(); ++i) {
    for (int c = 0; c < cloud.dim; ++c)
      os << (c ? "," : "") << format_double(cloud.points(i, c));
    if (!cloud.weights.empty()) os << "," << format_double(cloud.weights[i]);
    os << "\n";
  }
  write_file(path, os.str());
}

// ---------------------------------------------------------------------------
// Results, rasters, plans
// ---------------------------------------------------------------------------

std::string result_to_json(const ResultFile& r) {
  std::ostringstream os;
  os << "{\"metric\": \"" << r.metric << "\", \"value\": " << format_double(r.value)
     << ", \"squared\": " << format_double(r.squared)
     << ", \"stderr\": " << format_double(r.stderr_estimate)
     << ", \"slices\": " << r.slices << ", \"seed\": " << r.seed
     << ", \"elapsed_ms\": " << format_double(r.elapsed_ms)
     << ", \"version\": \"" << GMMOT_VERSION << "\"}\n";
  return os.str();
}

void write_pgm(const DensityGrid& grid, std::ostream& os) {
  double mx = 0.0;
  for (double v : grid.values) mx = std::max(mx, v);
  os << "P5\n" << grid.nx << " " << grid.ny << "\n65535\n";
  for (int iy = grid.ny - 1; iy >= 0; --iy)
    for (int ix = 0; ix < grid.nx; ++ix) {
      const double v = grid.values[static_cast<std::size_t>(iy) * grid.nx + ix];
      const unsigned s =
          mx > 0.0 ? static_cast<unsigned>(std::lround(65535.0 * v / mx)) : 0u;
      os.put(static_cast<char>((s >> 8) & 0xff));
      os.put(static_cast<char>(s & 0xff));
    }
}

void write_density_csv(const DensityGrid& grid, std::ostream& os) {
  for (int iy = 0; iy < grid.ny; ++iy) {
    for (int ix = 0; ix < grid.nx; ++ix)
      os << (ix ? "," : "")
         << format_double(grid.values[static_cast<std::size_t>(iy) * grid.nx + ix]);
    os << "\n";
  }
}

void write_plan_csv(const TransportPlan& plan, std::ostream& os) {
  for (int i = 0; i < plan.gamma.rows(); ++i) {
    for (int j = 0; j < plan.gamma.cols(); ++j)
      os << (j ? "," : "") << format_double(plan.gamma(i, j));
    os << "\n";
  }
}

}  // namespace gmmot
