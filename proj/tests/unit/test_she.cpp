#include <doctest.h>

#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>
#include <vector>

#include "kpzlab/errors.hpp"
#include "kpzlab/she.hpp"

using namespace kpzlab;

TEST_CASE("spectral heat step matches the image-sum reference") {
  const double L = 4.0;
  const std::size_t n = 32;
  std::vector<double> u(n);
  for (std::size_t i = 0; i < n; ++i) u[i] = 1.0 + 0.5 * std::sin(0.7 * i) + (i == 5 ? 3.0 : 0.0);
  SheSolver solver(L, n, 0.25 * (L / n) * (L / n));
  for (double s : {0.01, 0.1, 1.0}) {
    std::vector<double> v = u;
    solver.heat(v, s);
    const auto ref = lattice_heat_reference(u, L, s);
    for (std::size_t i = 0; i < n; ++i) CHECK(v[i] == doctest::Approx(ref[i]).epsilon(1e-12));
  }
}

TEST_CASE("noiseless scheme conserves mass") {
  const std::vector<double> t = {1.0};
  SheInitial init{InitialKind::stationary_bridge, {}};
  const auto start = solve_she(4.0, 32, 1.0 / 256.0, std::vector<double>{1.0 / 256.0}, init, 3, 0, false).front();
  const auto end = solve_she(4.0, 32, 1.0 / 256.0, t, init, 3, 0, false).front();
  const double m0 = std::accumulate(start.values.begin(), start.values.end(), 0.0);
  const double m1 = std::accumulate(end.values.begin(), end.values.end(), 0.0);
  CHECK(std::abs(m1 / m0 - 1.0) < 1e-10);
}

TEST_CASE("noisy fields stay positive") {
  const std::vector<double> t = {0.5, 2.0};
  const auto fields = solve_she(4.0, 64, 0.25 * (4.0 / 64) * (4.0 / 64), t, {}, 5);
  for (const auto& f : fields) {
    for (double v : f.values) CHECK(v > 0.0);
  }
  CHECK(fields[1].t == doctest::Approx(2.0));
}

TEST_CASE("replica mean tracks the deterministic heat flow") {
  const double L = 4.0;
  const std::size_t n = 16;
  const double dx = L / n;
  const double dt = 0.25 * dx * dx;
  std::vector<double> u0(n);
  for (std::size_t i = 0; i < n; ++i) u0[i] = 1.0 + 0.8 * std::cos(2.0 * std::numbers::pi * i / n);
  const double t = 0.5;
  SheSolver solver(L, n, dt);
  std::vector<double> heat = u0;
  solver.heat(heat, t);
  SheInitial init{InitialKind::field, u0};
  std::vector<Moments> m(n);
  const std::vector<double> ts = {t};
  for (std::uint64_t r = 0; r < 400; ++r) {
    const auto f = solve_she(L, n, dt, ts, init, 8, r).front();
    for (std::size_t i = 0; i < n; ++i) m[i].add(f.values[i]);
  }
  for (std::size_t i = 0; i < n; i += 4) CHECK(std::abs(m[i].mean - heat[i]) < 4.0 * m[i].std_error());
}

TEST_CASE("endpoint density integrates to one") {
  const auto f = solve_she(4.0, 32, 1.0 / 256.0, std::vector<double>{0.25}, {}, 1).front();
  const auto rho = endpoint_density(f);
  double total = 0.0;
  for (double v : rho.values) total += v * rho.dx;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("field checkpoints round-trip") {
  SheField f;
  f.L = 4.0;
  f.n_x = 5;
  f.dt = 0.01;
  f.t = 1.25;
  f.values = {1.0, 2.5, 1e-300, 3.25, 7.0};
  std::stringstream ss;
  write_field(ss, f);
  CHECK(ss.str().size() == 8 * 4 + 8 * 5);
  const auto g = read_field(ss);
  CHECK(g.L == f.L);
  CHECK(g.n_x == f.n_x);
  CHECK(g.dt == f.dt);
  CHECK(g.t == f.t);
  CHECK(g.values == f.values);
  std::stringstream truncated(ss.str().substr(0, 20));
  CHECK_THROWS(read_field(truncated));
}

TEST_CASE("solver guards") {
  CHECK_THROWS_AS(SheSolver(4.0, 32, 1.0), InvalidArgument);
  CHECK_THROWS_AS(SheSolver(4.0, 2, 1e-4), InvalidArgument);
  ResolutionPolicy tight;
  tight.max_cell_updates = 1e3;
  CHECK_THROWS_AS(estimate_height_variance(0.0, 4.0, std::vector<double>{4.0}, 100, tight, 1), ResourceGuard);
}

TEST_CASE("stationary increments are Brownian bridges") {
  const double L = 4.0;
  const std::size_t n = 32;
  const auto p = increment_variance_profile(L, n, 0.25 * (L / n) * (L / n), 0.5, 400, 13);
  const std::size_t mid = n / 2;
  CHECK(std::abs(p.variance[mid] - L / 4.0) < 4.0 * p.std_error[mid]);
  CHECK(p.variance[0] == 0.0);
}

TEST_CASE("height variance grows and doubling replicas shrinks its error") {
  ResolutionPolicy policy;
  policy.cells_per_unit = 8.0;
  const std::vector<double> ts = {1.0, 4.0};
  const auto a = estimate_height_variance(0.0, 4.0, ts, 200, policy, 3);
  const auto b = estimate_height_variance(0.0, 4.0, ts, 400, policy, 4);
  CHECK(a[0].var_estimate > 0.0);
  CHECK(a[1].var_estimate > a[0].var_estimate);
  CHECK(b[1].std_error / a[1].std_error == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(0.3));
}

TEST_CASE("Y_L sandwich holds and variance is positive") {
  const auto e = estimate_YL_variance(8.0, 200, 100, 128, 5);
  CHECK(e.sandwich_violations == 0);
  CHECK(e.sandwich_checked == 200 * 100);
  CHECK(e.variance > 0.0);
}

TEST_CASE("time reversal with equal densities is trivially consistent") {
  const double L = 4.0;
  const std::size_t n = 16;
  const auto r = check_time_reversal(0.5, L, n, 0.5 / 32.0, 300, 7, true);
  CHECK(std::abs(r.mean_z) < 4.0);
  CHECK(r.n_replicas == 300);
}

TEST_CASE("von Mises density is normalised") {
  const auto f = von_mises_density(4.0, 64, 1.0, 2.0);
  double total = 0.0;
  for (double v : f) total += v * 4.0 / 64.0;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
}
