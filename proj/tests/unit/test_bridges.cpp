#include <doctest.h>

#include <cmath>
#include <vector>

#include "kpzlab/bridges.hpp"
#include "kpzlab/errors.hpp"
#include "kpzlab/stats.hpp"

using namespace kpzlab;

TEST_CASE("bridges are pinned at both ends") {
  const auto b = sample_bridge(8.0, 64, 3);
  CHECK(b[0] == 0.0);
  CHECK(std::abs(b[64]) < 1e-12);
  CHECK(b.intervals() == 64);
}

TEST_CASE("bridge marginal variance is x (L - x) / L") {
  const double L = 4.0;
  const std::size_t n = 16;
  const auto m = sample_moments(
      100000,
      [&](std::uint64_t i) {
        RandomStream s(1, tag_of("bvar"), i);
        std::vector<double> v(n + 1);
        fill_bridge(v, L, s);
        return v[4] * v[4];
      },
      Exec::serial);
  CHECK(std::abs(m.mean - 0.75) < 4.0 * m.std_error());
}

TEST_CASE("correlated pair has the requested correlation") {
  const double L = 2.0;
  const std::size_t n = 8;
  for (double r : {0.0, 0.25, 0.5}) {
    Moments cross;
    for (std::uint64_t i = 0; i < 50000; ++i) {
      RandomStream s(2, tag_of("pair"), i);
      std::vector<double> u1(n + 1), u2(n + 1), sc(n + 1);
      fill_correlated_pair(u1, u2, sc, L, r, s);
      cross.add(u1[4] * u2[4]);
    }
    // Var U_k(L/2) = 2 (L/2)(L/2) / L = 1.
    CHECK(std::abs(cross.mean - r) < 4.0 * cross.std_error());
  }
}

TEST_CASE("omega is translation-covariant along h") {
  const Vec2 v{0.3, -1.2};
  CHECK(omega(v + 2.5 * wedge_geometry::h) == doctest::Approx(omega(v) + 2.5));
  CHECK(wedge_geometry::v1.dot(wedge_geometry::h) == doctest::Approx(1.0));
  CHECK(wedge_geometry::v2.dot(wedge_geometry::h) == doctest::Approx(1.0));
}

TEST_CASE("log_exp_integral matches the trapezoid rule") {
  const std::vector<double> v = {0.0, 1.0, -0.5, 2.0};
  const double h = 0.5;
  const double trap = h * (0.5 * std::exp(0.0) + std::exp(1.0) + std::exp(-0.5) + 0.5 * std::exp(2.0));
  CHECK(log_exp_integral(v, h) == doctest::Approx(std::log(trap)).epsilon(1e-14));
}

TEST_CASE("walker reaches its endpoint") {
  PlanarBridgeWalker w(4.0, 32, {1.0, 0.5}, {-0.2, 0.3});
  RandomStream s(3, 4, 5);
  Vec2 last;
  while (!w.done()) last = w.step(s);
  CHECK(last.x == doctest::Approx(-0.2).epsilon(1e-12));
  CHECK(last.y == doctest::Approx(0.3).epsilon(1e-12));
}

TEST_CASE("invalid grids are rejected") {
  CHECK_THROWS_AS(sample_bridge(1.0, 0, 1), InvalidArgument);
  CHECK_THROWS_AS(CorrelationSpec(1.5), InvalidArgument);
}
