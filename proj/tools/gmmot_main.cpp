// gmmot: optimal-transport distances between Gaussian mixture models, plus
// the fitting, quantization, barycenter and benchmark harnesses around them.

#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gmmot/analysis.hpp"
#include "gmmot/io.hpp"
#include "gmmot/parallel.hpp"

using namespace gmmot;

namespace {

void emit(const std::string& text, const std::string& path) {
  if (path.empty()) {
    std::fwrite(text.data(), 1, text.size(), stdout);
  } else {
    write_file(path, text);
  }
}

void warn_all(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
}

Gmm load_gmm_warn(const std::string& path) {
  std::vector<std::string> warnings;
  Gmm g = load_gmm(path, &warnings);
  warn_all(warnings);
  return g;
}

Vector parse_lambda(const std::string& text, std::size_t count) {
  Vector lambda;
  std::stringstream ss(text);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    try {
      lambda.push_back(std::stod(cell));
    } catch (const std::exception&) {
      throw ParseError("--lambda: cannot parse '" + cell + "'");
    }
  }
  if (lambda.size() != count)
    throw InvalidInput("--lambda needs exactly one entry per input");
  double sum = 0.0;
  for (double l : lambda) {
    if (l < 0.0) throw ParseError("--lambda entries must be nonnegative");
    sum += l;
  }
  if (std::fabs(sum - 1.0) > 1e-6)
    throw ParseError("--lambda must sum to 1 within 1e-6");
  for (double& l : lambda) l /= sum;
  return lambda;
}

struct DistanceArgs {
  std::string metric, a_path, b_path, out, plan_out, quadrature = "mc";
  int slices = 100;
  int quad_nodes = 256;
  std::uint64_t seed = 0;
};

int run_distance(const DistanceArgs& args) {
  const Gmm a = load_gmm_warn(args.a_path);
  const Gmm b = load_gmm_warn(args.b_path);
  if (a.dim != b.dim) throw InvalidInput("inputs disagree on dimension");

  SliceSet slices = [&] {
    if (args.quadrature == "equispaced2d") {
      if (a.dim != 2) throw InvalidInput("equispaced2d quadrature needs d = 2");
      return SliceSet::equispaced2d(args.slices);
    }
    if (args.quadrature != "mc") throw InvalidInput("--quadrature must be mc or equispaced2d");
    return SliceSet::monte_carlo(a.dim, args.slices, args.seed);
  }();

  DistanceValue value;
  if (args.metric == "mw") {
    value = mw(a, b);
  } else if (args.metric == "msw") {
    value = msw(a, b, slices);
  } else if (args.metric == "smw") {
    value = smw(a, b, slices);
  } else if (args.metric == "dsmw") {
    value = dsmw(a, b, slices);
  } else if (args.metric == "sw-gmm") {
    value = sw_gmm(a, b, slices, args.quad_nodes);
  } else if (args.metric == "gauss-w2") {
    if (a.size() != 1 || b.size() != 1)
      throw InvalidInput("gauss-w2 needs single-component inputs");
    const double sq = gaussian_w2(a.components[0], b.components[0]);
    value.squared = sq;
    value.value = std::sqrt(std::max(0.0, sq));
    value.slices_used = 0;
  } else {
    throw InvalidInput("unknown metric: " + args.metric);
  }

  if (!args.plan_out.empty()) {
    if (args.metric == "mw" || args.metric == "msw") {
      const TransportResult result =
          args.metric == "mw" ? mw_plan(a, b) : msw_plan(a, b, slices);
      std::ostringstream ss;
      write_plan_csv(result.plan, ss);
      write_file(args.plan_out, ss.str());
    } else {
      std::cerr << "warning: --plan applies to mw and msw only; ignored\n";
    }
  }

  ResultFile out;
  out.metric = args.metric;
  out.value = value.value;
  out.squared = value.squared;
  out.stderr_estimate = value.stderr_estimate;
  out.slices = value.slices_used;
  out.seed = args.seed;
  // Wall time goes to stderr; the serialized field stays zero so reruns with
  // identical flags emit identical bytes.
  out.elapsed_ms = 0.0;
  std::cerr << "elapsed: " << value.elapsed_ms << " ms\n";
  emit(result_to_json(out), args.out);
  return 0;
}

struct FitArgs {
  std::string points_path, out;
  int k = 1;
  bool use_weights = false;
  bool normalize = false;
  int iters = 200;
  double tol = 1e-8;
  double cov_reg = -1.0;
  std::uint64_t seed = 0;
};

int run_fit(const FitArgs& args) {
  const PointCloud data = load_points(args.points_path, args.use_weights, args.normalize);
  EmConfig config;
  config.max_iters = args.iters;
  config.rel_tol = args.tol;
  config.cov_reg = args.cov_reg;
  config.seed = args.seed;
  const EmResult result = em_fit_detailed(data, args.k, config);
  if (result.reseeds > 0)
    std::cerr << "warning: " << result.reseeds << " empty-cluster rescue(s)\n";
  std::ostringstream ss;
  save_gmm(result.gmm, ss);
  emit(ss.str(), args.out);
  return 0;
}

struct QuantizeArgs {
  std::string in_path, out, trace_out;
  int k = 1;
  int slices = 100;
  int steps = 200;
  double lr = 0.03;
  int restarts = 20;
  double sigma = 1.0;
  std::uint64_t seed = 0;
};

std::string trace_csv(const OptimReport& report) {
  std::ostringstream ss;
  for (std::size_t r = 0; r < report.traces.size(); ++r)
    for (std::size_t s = 0; s < report.traces[r].size(); ++s)
      ss << r << "," << s << "," << format_double(report.traces[r][s]) << "\n";
  return ss.str();
}

int run_quantize(const QuantizeArgs& args) {
  const Gmm target = load_gmm_warn(args.in_path);
  OptimConfig config;
  config.slices = args.slices;
  config.steps = args.steps;
  config.lr = args.lr;
  config.restarts = args.restarts;
  config.sigma_floor = args.sigma;
  config.seed = args.seed;
  const OptimReport report = quantize(target, args.k, config);
  warn_all(report.warnings);
  std::ostringstream ss;
  save_gmm(report.best_gmm(), ss);
  emit(ss.str(), args.out);
  if (!args.trace_out.empty()) write_file(args.trace_out, trace_csv(report));
  return 0;
}

struct BarycenterArgs {
  std::string mode = "fixed";
  std::vector<std::string> inputs;
  std::string lambda_text, out;
  int k = 100;
  int slices = 100;
  int steps = -1;  // mode-dependent default
  double lr = 0.03;
  int restarts = 10;
  double sigma = 0.3;
  std::uint64_t seed = 0;
};

int run_barycenter(const BarycenterArgs& args) {
  std::vector<Gmm> inputs;
  for (const auto& path : args.inputs) inputs.push_back(load_gmm_warn(path));
  if (inputs.empty()) throw InvalidInput("--inputs needs at least one file");
  const Vector lambda = parse_lambda(args.lambda_text, inputs.size());
  Gmm result = [&] {
    if (args.mode == "fixed") {
      FixedBarycenterConfig config;
      config.slices = args.slices;
      config.steps = args.steps < 0 ? 10 : args.steps;
      config.lr = args.lr;
      config.seed = args.seed;
      return barycenter_fixed(inputs, lambda, config);
    }
    if (args.mode != "free") throw InvalidInput("--mode must be fixed or free");
    OptimConfig config;
    config.slices = args.slices;
    config.steps = args.steps < 0 ? 200 : args.steps;
    config.lr = args.lr;
    config.restarts = args.restarts;
    config.sigma_floor = args.sigma;
    config.seed = args.seed;
    const OptimReport report = barycenter_free(inputs, lambda, args.k, config);
    warn_all(report.warnings);
    return report.best_gmm();
  }();
  std::ostringstream ss;
  save_gmm(result, ss);
  emit(ss.str(), args.out);
  return 0;
}

struct ClustersArgs {
  std::string points_path, metric = "dsmw", out, curve_out;
  int k_max = 10;
  int slices = 200;
  double tau = 0.1;
  double drop_tau = 0.55;
  std::uint64_t seed = 0;
};

int run_clusters(const ClustersArgs& args) {
  const PointCloud data = load_points(args.points_path);
  ClusterConfig config;
  config.slices = args.slices;
  config.tau = args.tau;
  config.drop_tau = args.drop_tau;
  config.em.seed = args.seed;
  config.slice_seed = args.seed;
  const ClusterReport report = detect_clusters(data, args.k_max, args.metric, config);

  std::ostringstream js;
  js << "{\"metric\": \"" << report.metric << "\", \"tau\": " << format_double(report.tau)
     << ", \"detected_k\": ";
  if (report.detected_k)
    js << *report.detected_k;
  else
    js << "null";
  js << ", \"anchor\": " << format_double(report.scale_anchor) << ", \"seed\": " << args.seed
     << ", \"curve\": [";
  for (std::size_t i = 0; i < report.curve.size(); ++i) {
    js << (i ? ", " : "");
    if (report.curve[i].distance)
      js << format_double(*report.curve[i].distance);
    else
      js << "null";
  }
  js << "]}\n";
  emit(js.str(), args.out);

  if (!args.curve_out.empty()) {
    std::ostringstream cs;
    for (const auto& e : report.curve) {
      cs << e.k << ",";
      if (e.distance)
        cs << format_double(*e.distance);
      else
        cs << "nan";
      cs << "\n";
    }
    write_file(args.curve_out, cs.str());
  }
  return 0;
}

struct BenchArgs {
  std::string metrics_text = "mw,msw,dsmw", dims_text = "2,16,64", ks_text = "5,20";
  std::string out;
  int slices = 100;
  int reps = 3;
  std::uint64_t seed = 0;
};

template <class T>
std::vector<T> parse_list(const std::string& text, T (*conv)(const std::string&)) {
  std::vector<T> out;
  std::stringstream ss(text);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(conv(cell));
  return out;
}

int run_bench(const BenchArgs& args) {
  const auto to_int = +[](const std::string& s) {
    try {
      return std::stoi(s);
    } catch (const std::exception&) {
      throw ParseError("cannot parse integer '" + s + "'");
      return 0;
    }
  };
  const auto to_str = +[](const std::string& s) { return s; };
  const BenchReport report =
      bench(parse_list(args.metrics_text, to_str), parse_list(args.dims_text, to_int),
            parse_list(args.ks_text, to_int), args.slices, args.reps, args.seed);
  std::ostringstream ss;
  ss << "metric,d,K,L,reps,mean_ms,std_ms\n";
  for (const auto& row : report.rows)
    ss << row.metric << "," << row.d << "," << row.k << "," << row.slice_count << ","
       << row.reps << "," << format_double(row.mean_ms) << "," << format_double(row.std_ms)
       << "\n";
  emit(ss.str(), args.out);
  std::cerr << "threads: " << report.threads << "\n";
  return 0;
}

struct DensityArgs {
  std::string in_path, grid_text = "256x256", bounds_text, out, format = "pgm";
};

int run_density(const DensityArgs& args) {
  const Gmm mu = load_gmm_warn(args.in_path);
  int nx = 0, ny = 0;
  if (std::sscanf(args.grid_text.c_str(), "%dx%d", &nx, &ny) != 2)
    throw ParseError("--grid expects WIDTHxHEIGHT");
  GridBounds bounds;
  if (std::sscanf(args.bounds_text.c_str(), "%lf,%lf,%lf,%lf", &bounds.xmin, &bounds.xmax,
                  &bounds.ymin, &bounds.ymax) != 4)
    throw ParseError("--bounds expects xmin,xmax,ymin,ymax");
  const DensityGrid grid = density_grid(mu, bounds, nx, ny);
  std::ostringstream ss;
  if (args.format == "pgm")
    write_pgm(grid, ss);
  else if (args.format == "csv")
    write_density_csv(grid, ss);
  else
    throw InvalidInput("--format must be pgm or csv");
  emit(ss.str(), args.out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Optimal-transport distances between Gaussian mixture models"};
  app.require_subcommand(1);
  int threads = thread_count();
  app.add_option("--threads", threads, "worker threads (also GMMOT_THREADS)")
      ->capture_default_str();

  DistanceArgs dist;
  CLI::App* cmd_distance = app.add_subcommand("distance", "distance between two GMM files");
  cmd_distance->add_option("--metric", dist.metric, "mw|msw|smw|dsmw|sw-gmm|gauss-w2")
      ->required();
  cmd_distance->add_option("--a", dist.a_path, "first GMM JSON")->required();
  cmd_distance->add_option("--b", dist.b_path, "second GMM JSON")->required();
  cmd_distance->add_option("--slices", dist.slices, "slice count L")->capture_default_str();
  cmd_distance->add_option("--seed", dist.seed, "slice seed")->capture_default_str();
  cmd_distance->add_option("--quadrature", dist.quadrature, "mc|equispaced2d")
      ->capture_default_str();
  cmd_distance->add_option("--quad-nodes", dist.quad_nodes, "quantile quadrature nodes (sw-gmm)")
      ->capture_default_str();
  cmd_distance->add_option("--plan", dist.plan_out, "write the transport plan CSV here");
  cmd_distance->add_option("-o,--out", dist.out, "output file (default: stdout)");

  FitArgs fit;
  CLI::App* cmd_fit = app.add_subcommand("fit", "fit a GMM to CSV points with EM");
  cmd_fit->add_option("--points", fit.points_path, "points CSV")->required();
  cmd_fit->add_option("--k", fit.k, "component count")->required();
  cmd_fit->add_flag("--weights", fit.use_weights, "treat the last column as weights");
  cmd_fit->add_flag("--normalize", fit.normalize, "divide weights by their total");
  cmd_fit->add_option("--iters", fit.iters, "EM iteration cap")->capture_default_str();
  cmd_fit->add_option("--tol", fit.tol, "relative log-likelihood tolerance")
      ->capture_default_str();
  cmd_fit->add_option("--cov-reg", fit.cov_reg, "covariance ridge (default: auto)");
  cmd_fit->add_option("--seed", fit.seed, "seeding RNG")->capture_default_str();
  cmd_fit->add_option("-o,--out", fit.out, "output GMM JSON")->required();

  QuantizeArgs quant;
  CLI::App* cmd_quantize = app.add_subcommand("quantize", "compress a GMM to fewer components");
  cmd_quantize->add_option("--in", quant.in_path, "input GMM JSON")->required();
  cmd_quantize->add_option("--k", quant.k, "target component count")->required();
  cmd_quantize->add_option("--slices", quant.slices, "L per gradient step")
      ->capture_default_str();
  cmd_quantize->add_option("--steps", quant.steps, "Adam steps")->capture_default_str();
  cmd_quantize->add_option("--lr", quant.lr, "Adam step size")->capture_default_str();
  cmd_quantize->add_option("--restarts", quant.restarts, "random restarts")
      ->capture_default_str();
  cmd_quantize->add_option("--sigma", quant.sigma, "covariance floor sigma")
      ->capture_default_str();
  cmd_quantize->add_option("--seed", quant.seed, "RNG seed")->capture_default_str();
  cmd_quantize->add_option("-o,--out", quant.out, "output GMM JSON")->required();
  cmd_quantize->add_option("--trace", quant.trace_out, "write restart,step,loss CSV here");

  BarycenterArgs bary;
  CLI::App* cmd_barycenter = app.add_subcommand("barycenter", "barycenter of several GMMs");
  cmd_barycenter->add_option("--mode", bary.mode, "fixed|free")->capture_default_str();
  cmd_barycenter->add_option("--inputs", bary.inputs, "input GMM JSON files")
      ->required()
      ->expected(-1);
  cmd_barycenter->add_option("--lambda", bary.lambda_text, "comma-separated simplex weights")
      ->required();
  cmd_barycenter->add_option("--k", bary.k, "components (free mode)")->capture_default_str();
  cmd_barycenter->add_option("--slices", bary.slices, "L per gradient step")
      ->capture_default_str();
  cmd_barycenter->add_option("--steps", bary.steps, "Adam steps (default 10 fixed / 200 free)");
  cmd_barycenter->add_option("--lr", bary.lr, "Adam step size")->capture_default_str();
  cmd_barycenter->add_option("--restarts", bary.restarts, "restarts (free mode)")
      ->capture_default_str();
  cmd_barycenter->add_option("--sigma", bary.sigma, "covariance floor (free mode)")
      ->capture_default_str();
  cmd_barycenter->add_option("--seed", bary.seed, "RNG seed")->capture_default_str();
  cmd_barycenter->add_option("-o,--out", bary.out, "output GMM JSON")->required();

  ClustersArgs clus;
  CLI::App* cmd_clusters = app.add_subcommand("clusters", "detect the cluster count of points");
  cmd_clusters->add_option("--points", clus.points_path, "points CSV")->required();
  cmd_clusters->add_option("--kmax", clus.k_max, "largest k to scan")->capture_default_str();
  cmd_clusters->add_option("--metric", clus.metric, "mw|msw|smw|dsmw")->capture_default_str();
  cmd_clusters->add_option("--slices", clus.slices, "shared slice count")
      ->capture_default_str();
  cmd_clusters->add_option("--tau", clus.tau, "knee threshold")->capture_default_str();
  cmd_clusters->add_option("--drop-tau", clus.drop_tau, "sharp-drop threshold")
      ->capture_default_str();
  cmd_clusters->add_option("--seed", clus.seed, "EM/slice seed")->capture_default_str();
  cmd_clusters->add_option("-o,--out", clus.out, "report JSON (default: stdout)");
  cmd_clusters->add_option("--curve", clus.curve_out, "write the k,distance CSV here");

  BenchArgs ben;
  CLI::App* cmd_bench = app.add_subcommand("bench", "time metrics on random GMM pairs");
  cmd_bench->add_option("--metrics", ben.metrics_text, "comma list of metrics")
      ->capture_default_str();
  cmd_bench->add_option("--dims", ben.dims_text, "comma list of dimensions")
      ->capture_default_str();
  cmd_bench->add_option("--ks", ben.ks_text, "comma list of component counts")
      ->capture_default_str();
  cmd_bench->add_option("--slices", ben.slices, "slice count L")->capture_default_str();
  cmd_bench->add_option("--reps", ben.reps, "repetitions per row")->capture_default_str();
  cmd_bench->add_option("--seed", ben.seed, "pair generation seed")->capture_default_str();
  cmd_bench->add_option("-o,--out", ben.out, "bench CSV (default: stdout)");

  DensityArgs dens;
  CLI::App* cmd_density = app.add_subcommand("density", "raster a 2d GMM density");
  cmd_density->add_option("--in", dens.in_path, "input GMM JSON")->required();
  cmd_density->add_option("--grid", dens.grid_text, "resolution WIDTHxHEIGHT")
      ->capture_default_str();
  cmd_density->add_option("--bounds", dens.bounds_text, "xmin,xmax,ymin,ymax")->required();
  cmd_density->add_option("--format", dens.format, "pgm|csv")->capture_default_str();
  cmd_density->add_option("-o,--out", dens.out, "output file (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help path
    app.exit(e);
    return 2;
  }

  set_thread_count(threads);
  try {
    if (*cmd_distance) return run_distance(dist);
    if (*cmd_fit) return run_fit(fit);
    if (*cmd_quantize) return run_quantize(quant);
    if (*cmd_barycenter) return run_barycenter(bary);
    if (*cmd_clusters) return run_clusters(clus);
    if (*cmd_bench) return run_bench(ben);
    if (*cmd_density) return run_density(dens);
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ResourceGuard& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 5;
  } catch (const InvalidInput& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const Error& e) {  // NotPsd, NumericalError and friends
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
  return 0;
}
