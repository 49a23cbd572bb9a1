#include <doctest.h>

#include <cmath>
#include <numbers>

#include "kpzlab/errors.hpp"
#include "kpzlab/harmonic.hpp"

using namespace kpzlab;

TEST_CASE("arctan tail values and limits") {
  const double hn = wedge_geometry::h_norm;
  CHECK(hn == doctest::Approx(std::sqrt(6.0) / 3.0));
  CHECK(arctan_tail(1.0, hn) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(arctan_tail(2.0, 2.0 * hn) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(arctan_tail(1.0, 2.0 * hn) ==
        doctest::Approx(2.0 / std::numbers::pi * std::atan(std::pow(2.0, -1.5))).epsilon(1e-15));
  CHECK(arctan_tail(1.0, 1e12) < 1e-15);
  CHECK(arctan_tail(1.0, 1e-12) == doctest::Approx(1.0));
  double prev = 1.0;
  for (double xi = 0.01; xi < 100.0; xi *= 1.3) {
    const double t = arctan_tail(1.0, xi);
    CHECK(t <= prev);
    prev = t;
  }
}

TEST_CASE("conformal map examples") {
  const double q = 1.5;
  const Vec2 apex = q * wedge_geometry::h;
  const Vec2 one = conformal_map(apex + Vec2{1.0, 0.0}, q);
  CHECK(one.x == doctest::Approx(1.0));
  CHECK(one.y == doctest::Approx(0.0));

  const double r = 2.0;
  const Vec2 edge = conformal_map(apex + r * Vec2{std::cos(std::numbers::pi / 3), std::sin(std::numbers::pi / 3)}, q);
  CHECK(std::atan2(edge.y, edge.x) == doctest::Approx(std::numbers::pi / 2));

  const Vec2 mid = conformal_map(apex + r * Vec2{std::cos(std::numbers::pi / 6), std::sin(std::numbers::pi / 6)}, q);
  CHECK(std::atan2(mid.y, mid.x) == doctest::Approx(std::numbers::pi / 4));
  CHECK(mid.norm() == doctest::Approx(std::pow(r, 1.5)));

  for (double th : {-0.9, -0.3, 0.2, 1.0}) {
    const Vec2 w = conformal_map(apex + 0.7 * Vec2{std::cos(th), std::sin(th)}, q);
    CHECK(std::atan2(w.y, w.x) == doctest::Approx(1.5 * th));
  }
  CHECK_THROWS_AS(conformal_map(apex + Vec2{-1.0, 0.1}, q), InvalidArgument);
}

TEST_CASE("time change is increasing and inverts") {
  const double L = 10.0;
  double prev = -1.0;
  for (double y = 0.0; y < 1e4; y = 2.0 * y + 0.1) {
    const double x = bridge_time(y, L);
    CHECK(x > prev);
    CHECK(x < L);
    CHECK(bm_time(x, L) == doctest::Approx(y).epsilon(1e-9));
    prev = x;
  }
}

TEST_CASE("hit locations lie on the boundary") {
  const double L = 16.0;
  const double q = 1.0;
  const auto batch = simulate_hits(L, q, 2048, 500, 3);
  REQUIRE(batch.fine.size() > 400);
  for (const auto& h : batch.fine) {
    // Linear refinement of a convex omega lands on or just inside the boundary.
    CHECK(omega(h.location) <= q + 1e-12);
    CHECK(omega(h.location) >= q - 0.05);
    CHECK(h.tau > 0.0);
    CHECK(h.tau < L);
    CHECK(h.kappa == doctest::Approx(bm_time(h.tau, L)));
    CHECK(bridge_time(h.kappa, L) == doctest::Approx(h.tau).epsilon(1e-9));
  }
  const auto one = simulate_first_hit(L, q, 512, 3);
  CHECK(std::abs(omega(one.location) - q) < 0.05);
}

TEST_CASE("hits are identical under serial and parallel execution") {
  const auto s = simulate_hits(8.0, 1.0, 128, 200, 9, Exec::serial);
  const auto p = simulate_hits(8.0, 1.0, 128, 200, 9, Exec::parallel);
  REQUIRE(s.fine.size() == p.fine.size());
  for (std::size_t i = 0; i < s.fine.size(); ++i) CHECK(s.fine[i].tau == p.fine[i].tau);
}

TEST_CASE("apex distances roughly follow the arctan law") {
  const double q = 1.0;
  const auto batch = simulate_hits(16.0, q, 2048, 4000, 11);
  const auto d = apex_distances(batch.fine, q);
  const double n = static_cast<double>(d.size());
  const double xi = wedge_geometry::h_norm;
  double above = 0.0;
  for (double x : d) above += x >= xi ? 1.0 : 0.0;
  CHECK(std::abs(above / n - 0.5) < 4.0 * std::sqrt(0.25 / n) + 0.03);
}
