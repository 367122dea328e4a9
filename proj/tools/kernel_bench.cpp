// Compares the OpenMP sliced kernels against their serial reference
// implementations: same math, same results, different wall time.

#include <chrono>
#include <cstdio>

#include "gmmot/analysis.hpp"
#include "gmmot/parallel.hpp"
#include "gmmot/reference.hpp"

using namespace gmmot;

namespace {

double seconds(const std::function<double()>& body, double* checksum) {
  const auto t0 = std::chrono::steady_clock::now();
  *checksum = body();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

int main(int argc, char** argv) {
  const int slices = argc > 1 ? std::atoi(argv[1]) : 2000;
  const int dim = argc > 2 ? std::atoi(argv[2]) : 32;
  const int comps = argc > 3 ? std::atoi(argv[3]) : 24;

  const Gmm a = random_gmm(dim, comps, 1);
  const Gmm b = random_gmm(dim, comps, 2);
  const SliceSet mc = SliceSet::monte_carlo(dim, slices, 3);

  std::printf("kernel comparison: d=%d K=%d L=%d threads=%d\n", dim, comps, slices,
              thread_count());
  std::printf("%-14s %12s %12s %8s %9s\n", "kernel", "serial_ms", "parallel_ms", "speedup",
              "match");

  struct Row {
    const char* name;
    std::function<double()> serial;
    std::function<double()> parallel;
  };
  const Row rows[] = {
      {"dsmw", [&] { return reference::dsmw_squared(a, b, mc); },
       [&] { return dsmw(a, b, mc).squared; }},
      {"smw", [&] { return reference::smw_squared(a, b, mc); },
       [&] { return smw(a, b, mc).squared; }},
      {"msw", [&] { return reference::msw_squared(a, b, mc); },
       [&] { return msw(a, b, mc).squared; }},
      {"mw", [&] { return solve_exact(reference::mw_cost_matrix(a, b), a.weights, b.weights).cost; },
       [&] { return mw(a, b).squared; }},
  };
  for (const Row& row : rows) {
    double ref = 0.0, par = 0.0;
    const double ts = seconds(row.serial, &ref);
    const double tp = seconds(row.parallel, &par);
    std::printf("%-14s %12.2f %12.2f %7.2fx %9s\n", row.name, ts * 1e3, tp * 1e3, ts / tp,
                ref == par ? "bitwise" : "DIFFER");
  }
  return 0;
}
