#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "gmmot/mixture.hpp"
#include "gmmot/rng.hpp"
#include "support/oracles.hpp"

using namespace gmmot;

namespace {

Matrix diag2(double a, double b) {
  Matrix m(2, 2);
  m(0, 0) = a;
  m(1, 1) = b;
  return m;
}

GaussianComponent gauss2(double mx, double my, Matrix cov) {
  return GaussianComponent(Vector{mx, my}, PsdMatrix(SymMatrix(std::move(cov))));
}

Gmm single2(double mx, double my, Matrix cov) {
  return Gmm(Vector{1.0}, {gauss2(mx, my, std::move(cov))});
}

}  // namespace

TEST_CASE("project_component axis cases and oblique direction") {
  const GaussianComponent g(Vector{3.0, 5.0}, PsdMatrix(SymMatrix(diag2(4.0, 9.0))));
  const auto [m1, s1] = project_component(Vector{1.0, 0.0}, g);
  CHECK(m1 == doctest::Approx(3.0));
  CHECK(s1 == doctest::Approx(2.0));
  const auto [m2, s2] = project_component(Vector{0.0, 1.0}, g);
  CHECK(m2 == doctest::Approx(5.0));
  CHECK(s2 == doctest::Approx(3.0));

  const GaussianComponent iso(Vector{0.0, 0.0}, PsdMatrix(Matrix::identity(2)));
  const double r = 1.0 / std::sqrt(2.0);
  const auto [m3, s3] = project_component(Vector{r, r}, iso);
  CHECK(m3 == doctest::Approx(0.0));
  CHECK(s3 == doctest::Approx(1.0));

  CHECK_THROWS_AS(project_component(Vector{1.0, 0.0, 0.0}, g), InvalidInput);
  CHECK_THROWS_AS(project_component(Vector{0.5, 0.5}, g), InvalidInput);
}

TEST_CASE("project_gmm keeps weights and matches quad_form stdevs") {
  RandomStream rng(2);
  const Gmm mu = oracles::random_gmm(3, 4, rng);
  const Vector theta = rng.unit_vector(3);
  const Gmm1d proj = project_gmm(theta, mu);
  for (int k = 0; k < mu.size(); ++k) {
    CHECK(proj.weights[k] == mu.weights[k]);  // exactly
    const double var = quad_form(mu.components[k].cov.sym(), theta);
    CHECK(std::fabs(proj.stdevs[k] - std::sqrt(std::max(0.0, var))) < 1e-12);
  }
}

TEST_CASE("projection of the flat-Gaussian family follows cos/sin mixing") {
  // N(0, diag(1, eps)) projected along (cos a, sin a) has stdev
  // sqrt(cos^2 a + eps sin^2 a).
  const double eps = 1e-3;
  const Gmm mu = single2(0.0, 0.0, diag2(1.0, eps));
  for (int i = 0; i < 16; ++i) {
    const double a = 2.0 * M_PI * i / 16.0;
    const Vector theta{std::cos(a), std::sin(a)};
    const auto [m, s] = project_component(theta, mu.components[0]);
    CHECK(m == doctest::Approx(0.0));
    const double want = std::sqrt(std::cos(a) * std::cos(a) + eps * std::sin(a) * std::sin(a));
    CHECK(s == doctest::Approx(want).epsilon(1e-12));
  }
}

TEST_CASE("nu_map keeps coincident atoms separate") {
  const Gmm1d std_normal(Vector{1.0}, Vector{0.0}, Vector{1.0});
  const PointMeasure2d nu1 = nu_map(std_normal);
  CHECK(nu1.size() == 1);
  CHECK(nu1.supports[0][0] == 0.0);
  CHECK(nu1.supports[0][1] == 1.0);

  const Gmm1d two(Vector{0.5, 0.5}, Vector{0.0, 2.0}, Vector{1.0, 1.0});
  const PointMeasure2d nu2 = nu_map(two);
  CHECK(nu2.size() == 2);
  CHECK(nu2.supports[1][0] == 2.0);

  const Gmm1d diracs(Vector{0.5, 0.5}, Vector{0.0, 2.0}, Vector{0.0, 0.0});
  const PointMeasure2d nu3 = nu_map(diracs);
  CHECK(nu3.supports[0][1] == 0.0);
  CHECK(nu3.supports[1][1] == 0.0);

  const Gmm1d dup(Vector{0.25, 0.75}, Vector{1.0, 1.0}, Vector{2.0, 2.0});
  CHECK(nu_map(dup).size() == 2);  // no merging
}

TEST_CASE("xi_projection limit angles and composition identity") {
  RandomStream rng(9);
  const Gmm mu = oracles::random_gmm(2, 3, rng);
  const Vector theta = rng.unit_vector(2);

  const PointMeasure1d at0 = xi_projection(theta, 0.0, mu);
  const Gmm1d proj = project_gmm(theta, mu);
  for (int k = 0; k < mu.size(); ++k)
    CHECK(at0.supports[k] == doctest::Approx(proj.means[k]).epsilon(1e-15));

  const PointMeasure1d at90 = xi_projection(theta, M_PI / 2.0, mu);
  for (int k = 0; k < mu.size(); ++k)
    CHECK(at90.supports[k] == doctest::Approx(proj.stdevs[k]).epsilon(1e-12));

  // composition identity: xi == <(cos phi, sin phi), nu(project(theta, mu))>
  const double phi = 2.2345;
  const PointMeasure1d direct = xi_projection(theta, phi, mu);
  const PointMeasure2d nu = nu_map(proj);
  for (int k = 0; k < mu.size(); ++k) {
    const double composed = nu.supports[k][0] * std::cos(phi) + nu.supports[k][1] * std::sin(phi);
    CHECK(direct.supports[k] == composed);  // bitwise
  }
}

TEST_CASE("xi_projection of an isotropic Gaussian is a single atom sigma sin(phi)") {
  const double sigma = 1.7;
  for (int d : {2, 5}) {
    Matrix cov(d, d);
    for (int i = 0; i < d; ++i) cov(i, i) = sigma * sigma;
    const Gmm mu(Vector{1.0},
                 {GaussianComponent(Vector(d, 0.0), PsdMatrix(SymMatrix(cov)))});
    RandomStream rng(d);
    const Vector theta = rng.unit_vector(d);
    for (double phi : {0.3, 1.9, 4.4}) {
      const PointMeasure1d atom = xi_projection(theta, phi, mu);
      CHECK(atom.size() == 1);
      CHECK(atom.supports[0] == doctest::Approx(sigma * std::sin(phi)).epsilon(1e-12));
    }
  }
}

TEST_CASE("em_fit with one component is the closed-form weighted MLE") {
  RandomStream rng(31);
  const int n = 200, d = 3;
  Matrix pts(n, d);
  Vector w(n);
  for (int i = 0; i < n; ++i) {
    for (int c = 0; c < d; ++c) pts(i, c) = rng.normal() + c;
    w[i] = 0.2 + rng.uniform();
  }
  const PointCloud cloud(d, pts, w);
  EmConfig config;
  config.cov_reg = 1e-4;
  config.seed = 5;
  const Gmm fit = em_fit(cloud, 1, config);

  Vector mean(d, 0.0);
  for (int i = 0; i < n; ++i)
    for (int c = 0; c < d; ++c) mean[c] += cloud.weight(i) * pts(i, c);
  for (int c = 0; c < d; ++c) CHECK(fit.components[0].mean[c] == doctest::Approx(mean[c]).epsilon(1e-9));
  for (int r = 0; r < d; ++r)
    for (int c = 0; c < d; ++c) {
      double cov = 0.0;
      for (int i = 0; i < n; ++i)
        cov += cloud.weight(i) * (pts(i, r) - mean[r]) * (pts(i, c) - mean[c]);
      if (r == c) cov += 1e-4;
      CHECK(fit.components[0].cov(r, c) == doctest::Approx(cov).epsilon(1e-8));
    }
}

TEST_CASE("em_fit degenerate cluster: identical points") {
  Matrix pts(5, 2);
  for (int i = 0; i < 5; ++i) {
    pts(i, 0) = 1.5;
    pts(i, 1) = -2.0;
  }
  EmConfig config;
  config.cov_reg = 1e-3;
  const Gmm fit = em_fit(PointCloud(2, pts), 1, config);
  CHECK(fit.components[0].mean[0] == doctest::Approx(1.5));
  CHECK(fit.components[0].mean[1] == doctest::Approx(-2.0));
  CHECK(fit.components[0].cov(0, 0) == doctest::Approx(1e-3));
  CHECK(fit.components[0].cov(1, 1) == doctest::Approx(1e-3));
  CHECK(fit.components[0].cov(0, 1) == doctest::Approx(0.0));
}

TEST_CASE("em_fit separates two blobs and is monotone in log-likelihood") {
  Matrix c0 = Matrix::identity(2);
  const Gmm truth(Vector{0.5, 0.5}, {gauss2(-5.0, 0.0, c0), gauss2(5.0, 0.0, c0)});
  const PointCloud data = sample(truth, 1000, 77);
  EmConfig config;
  config.seed = 3;
  const EmResult result = em_fit_detailed(data, 2, config);
  REQUIRE(result.gmm.size() == 2);
  if (result.reseeds == 0) {
    for (std::size_t i = 1; i < result.loglik.size(); ++i)
      CHECK(result.loglik[i] >= result.loglik[i - 1] - 1e-8);
  }
  // means near +-5 e1, weights near 1/2
  const int left = result.gmm.components[0].mean[0] < 0 ? 0 : 1;
  CHECK(std::fabs(result.gmm.components[left].mean[0] + 5.0) < 0.2);
  CHECK(std::fabs(result.gmm.components[1 - left].mean[0] - 5.0) < 0.2);
  CHECK(std::fabs(result.gmm.weights[0] - 0.5) < 0.05);
}

TEST_CASE("em_fit recovers means of a sampled mixture within three standard errors") {
  Matrix c0 = Matrix::identity(2);
  const Gmm truth(Vector{0.5, 0.5}, {gauss2(-4.0, 1.0, c0), gauss2(4.0, -1.0, c0)});
  const PointCloud data = sample(truth, 10000, 123);
  EmConfig config;
  config.seed = 9;
  const Gmm fit = em_fit(data, 2, config);
  const double se = 3.0 / std::sqrt(5000.0);  // 3 standard errors per axis
  const int left = fit.components[0].mean[0] < 0 ? 0 : 1;
  CHECK(std::fabs(fit.components[left].mean[0] + 4.0) < 3 * se + 0.02);
  CHECK(std::fabs(fit.components[left].mean[1] - 1.0) < 3 * se + 0.02);
  CHECK(std::fabs(fit.components[1 - left].mean[0] - 4.0) < 3 * se + 0.02);
}

TEST_CASE("em_fit weighted data equals duplicated data") {
  // Integer multiplicities as weights must give the same fit as physically
  // repeating the rows.
  Matrix base(4, 1);
  base(0, 0) = 0.0;
  base(1, 0) = 1.0;
  base(2, 0) = 4.0;
  base(3, 0) = 5.0;
  Vector mult{2.0, 1.0, 3.0, 1.0};
  Matrix dup(7, 1);
  int at = 0;
  for (int i = 0; i < 4; ++i)
    for (int r = 0; r < static_cast<int>(mult[i]); ++r) dup(at++, 0) = base(i, 0);
  EmConfig config;
  config.cov_reg = 1e-3;
  config.max_iters = 60;
  const Gmm a = em_fit(PointCloud(1, base, mult), 1, config);
  const Gmm b = em_fit(PointCloud(1, dup), 1, config);
  CHECK(a.components[0].mean[0] == doctest::Approx(b.components[0].mean[0]).epsilon(1e-12));
  CHECK(a.components[0].cov(0, 0) == doctest::Approx(b.components[0].cov(0, 0)).epsilon(1e-12));
}

TEST_CASE("em_fit rescues an empty cluster and reports it") {
  // Three heavy points and one with negligible weight: the component seeded
  // on the light point starves and is re-seeded.
  Matrix pts(4, 1);
  pts(0, 0) = 0.0;
  pts(1, 0) = 1.0;
  pts(2, 0) = 2.0;
  pts(3, 0) = 50.0;
  const Vector w{1.0, 1.0, 1.0, 1e-30};
  EmConfig config;
  config.cov_reg = 1e-2;
  config.max_iters = 10;
  config.seed = 1;
  const EmResult result = em_fit_detailed(PointCloud(1, pts, w), 4, config);
  CHECK(result.reseeds > 0);
}

TEST_CASE("em_fit requires at least k points") {
  Matrix pts(2, 1);
  pts(1, 0) = 1.0;
  CHECK_THROWS_AS(em_fit(PointCloud(1, pts), 3, EmConfig{}), InvalidInput);
}

TEST_CASE("sample from a Dirac component repeats the mean") {
  const Gmm dirac(Vector{1.0}, {gauss2(2.5, -1.0, Matrix(2, 2))});
  const PointCloud pts = sample(dirac, 50, 4);
  for (int i = 0; i < pts.size(); ++i) {
    CHECK(pts.points(i, 0) == 2.5);
    CHECK(pts.points(i, 1) == -1.0);
  }
}

TEST_CASE("sample mean of a standard normal is near zero") {
  const Gmm std2 = single2(0.0, 0.0, Matrix::identity(2));
  const PointCloud pts = sample(std2, 100000, 19);
  for (int c = 0; c < 2; ++c) {
    double mean = 0.0;
    for (int i = 0; i < pts.size(); ++i) mean += pts.points(i, c);
    mean /= pts.size();
    CHECK(std::fabs(mean) < 0.02);
  }
}

TEST_CASE("sample mixture proportions follow the weights") {
  const Gmm mix(Vector{0.5, 0.5}, {gauss2(0.0, 0.0, Matrix(2, 2)), gauss2(7.0, 0.0, Matrix(2, 2))});
  const PointCloud pts = sample(mix, 10000, 21);
  int at_a = 0;
  for (int i = 0; i < pts.size(); ++i)
    if (pts.points(i, 0) < 3.5) ++at_a;
  CHECK(std::fabs(at_a / 10000.0 - 0.5) < 0.02);
}

TEST_CASE("sample is deterministic per seed") {
  RandomStream rng(33);
  const Gmm mu = oracles::random_gmm(3, 2, rng);
  const PointCloud a = sample(mu, 64, 5);
  const PointCloud b = sample(mu, 64, 5);
  CHECK(a.points == b.points);
}

TEST_CASE("density_grid peak of the standard normal") {
  const Gmm std2 = single2(0.0, 0.0, Matrix::identity(2));
  const DensityGrid grid = density_grid(std2, {-1.0, 1.0, -1.0, 1.0}, 21, 21);
  // cell (10, 10) is centered at the origin
  CHECK(grid.values[10 * 21 + 10] == doctest::Approx(1.0 / (2.0 * M_PI)).epsilon(1e-12));
}

TEST_CASE("density_grid mass agrees with a Monte Carlo estimate") {
  RandomStream rng(61);
  const Gmm mu = oracles::random_gmm(2, 3, rng, 1.5, 0.3);
  const GridBounds bounds{-6.0, 6.0, -6.0, 6.0};
  const DensityGrid grid = density_grid(mu, bounds, 200, 200);
  double mass = 0.0;
  for (double v : grid.values) mass += v;
  mass *= grid.cell_area();

  const PointCloud pts = sample(mu, 200000, 8);
  int inside = 0;
  for (int i = 0; i < pts.size(); ++i) {
    const double x = pts.points(i, 0), y = pts.points(i, 1);
    if (x >= bounds.xmin && x <= bounds.xmax && y >= bounds.ymin && y <= bounds.ymax)
      ++inside;
  }
  const double mc = inside / 200000.0;
  CHECK(std::fabs(mass - mc) < 0.02 * std::max(mass, mc) + 0.005);
}

TEST_CASE("density_grid is deterministic and validates bounds") {
  RandomStream rng(62);
  const Gmm mu = oracles::random_gmm(2, 2, rng);
  const DensityGrid a = density_grid(mu, {-2, 2, -2, 2}, 32, 16);
  const DensityGrid b = density_grid(mu, {-2, 2, -2, 2}, 32, 16);
  CHECK(a.values == b.values);  // bit for bit
  CHECK_THROWS_AS(density_grid(mu, {1, 1, -2, 2}, 8, 8), InvalidInput);
  Matrix c3(3, 3);
  c3(0, 0) = c3(1, 1) = c3(2, 2) = 1.0;
  const Gmm mu3(Vector{1.0}, {GaussianComponent(Vector{0, 0, 0}, PsdMatrix(SymMatrix(c3)))});
  CHECK_THROWS_AS(density_grid(mu3, {-1, 1, -1, 1}, 8, 8), InvalidInput);
}
