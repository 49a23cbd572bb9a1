#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>

#include "kpzlab/bessel.hpp"
#include "kpzlab/errors.hpp"
#include "kpzlab/wedge.hpp"

using namespace kpzlab;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Vec2 polar(double r, double theta) { return WedgePoint{r, theta}.cartesian(); }

}  // namespace

TEST_CASE("kernel is symmetric") {
  for (double x : {0.5, 1.0, 4.0}) {
    const Vec2 u = polar(1.2, 0.4);
    const Vec2 v = polar(0.7, -0.9);
    const double a = wedge_kernel({x, u, v, 0.0});
    const double b = wedge_kernel({x, v, u, 0.0});
    CHECK(std::abs(a - b) <= 1e-12 * a);
  }
}

TEST_CASE("kernel vanishes on the boundary") {
  const Vec2 u = polar(1.0, 0.2);
  CHECK(wedge_kernel({1.0, u, polar(1.3, kWedgeHalfAngle), 0.0}) == 0.0);
  CHECK(wedge_kernel({1.0, u, polar(1.3, -kWedgeHalfAngle), 0.0}) == 0.0);
}

TEST_CASE("killed kernel is dominated by the free kernel") {
  for (double x : {0.25, 1.0, 3.0}) {
    for (double r1 : {0.2, 1.0, 2.5}) {
      for (double t1 : {-0.8, 0.0, 0.6}) {
        for (double r2 : {0.5, 1.5}) {
          const Vec2 u = polar(r1, t1);
          const Vec2 v = polar(r2, 0.3);
          CHECK(wedge_kernel({x, u, v, 0.0}) <= free_kernel(x, u, v) * (1.0 + 1e-12));
        }
      }
    }
  }
}

TEST_CASE("diagonal at -a h matches the displayed sum times 3/pi") {
  for (double a : {0.5, 1.0, 2.0}) {
    for (double x : {0.5, 1.0, 4.0}) {
      const double z = 2.0 * a * a / (3.0 * x);
      double sum = 0.0;
      for (int j = 1; j < 200; j += 2) sum += std::exp(log_bessel_I_series(1.5 * j, z) - z);
      const double expected = kWedgeKernelNorm * sum / x;
      const Vec2 p = -a * wedge_geometry::h;
      CHECK(wedge_kernel({x, p, p, 0.0}) == doctest::Approx(expected).epsilon(1e-11));
    }
  }
}

TEST_CASE("truncation certificate bounds ten extra terms") {
  for (double x : {0.3, 1.0, 5.0}) {
    const WedgePoint p1{1.5, 0.3};
    const WedgePoint p2{0.8, -0.5};
    const auto v = wedge_kernel_certified({x, p1.cartesian(), p2.cartesian(), 0.0});
    const double more = wedge_kernel_terms(x, p1, p2, v.terms + 10);
    CHECK(v.tail_bound >= std::abs(more - v.value));
  }
}

TEST_CASE("offset wedges translate the kernel") {
  const Vec2 u = polar(1.0, 0.1);
  const Vec2 v = polar(0.5, -0.3);
  const double base = wedge_kernel({1.0, u, v, 0.0});
  const Vec2 s = 2.0 * wedge_geometry::h;
  CHECK(wedge_kernel({1.0, u + s, v + s, 2.0}) == doctest::Approx(base).epsilon(1e-14));
  CHECK(wedge_kernel({1.0, u, v, kInf}) == free_kernel(1.0, u, v));
  CHECK_THROWS_AS(wedge_kernel({1.0, polar(1.0, 1.2), v, 0.0}), InvalidArgument);
}

TEST_CASE("survival probability limits and range") {
  CHECK(survival_probability(kInf, 10.0) == 1.0);
  CHECK(survival_probability(1e-3, 16.0) < 1e-6);
  CHECK(survival_probability(20.0, 1.0) == doctest::Approx(1.0).epsilon(1e-9));
  for (double a : {0.5, 1.0, 2.0, 4.0}) {
    for (double L : {1.0, 16.0, 256.0}) {
      const double p = survival_probability(a, L);
      CHECK(p >= 0.0);
      CHECK(p <= 1.0);
    }
  }
  CHECK(survival_probability(2.0, 16.0) > survival_probability(2.0, 64.0));
  CHECK_THROWS_AS(survival_probability(0.0, 1.0), InvalidArgument);
}

TEST_CASE("bridge stay probability") {
  CHECK(bridge_stay_probability(1.0, 16.0, wedge_geometry::h + polar(0.5, kWedgeHalfAngle)) == 0.0);
  CHECK_THROWS_AS(bridge_stay_probability(1.0, 16.0, {-3.0, 0.0}), InvalidArgument);
  for (double J : {0.5, 4.0, 16.0}) {
    for (Vec2 w : {Vec2{0.2, 0.1}, Vec2{1.0, -0.5}, Vec2{-0.3, 0.0}}) {
      const double p = bridge_stay_probability(1.0, J, w);
      CHECK(p >= 0.0);
      CHECK(p <= 1.0);
    }
  }
}

TEST_CASE("Chapman-Kolmogorov at s = t = 1") {
  const Vec2 u = polar(1.0, 0.0);
  const Vec2 v = polar(1.5, 0.2);
  const double direct = wedge_kernel({2.0, u, v, 0.0});
  CHECK(std::abs(wedge_two_step(1.0, 1.0, u, v) - direct) < 1e-6);
}

TEST_CASE("survival mass is sub-Markov") {
  for (Vec2 u : {polar(0.5, 0.0), polar(2.0, 0.9), polar(5.0, 0.1)}) {
    const double m = wedge_mass(1.0, u);
    CHECK(m >= 0.0);
    CHECK(m <= 1.0 + 1e-9);
  }
  CHECK(wedge_mass(1.0, polar(8.0, 0.0)) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("Monte Carlo survival: coarse over-survives and brackets the series") {
  const auto mc = survival_probability_mc(1.0, 4.0, 20000, 7, {32.0, Exec::parallel});
  const double exact = survival_probability(1.0, 4.0);
  CHECK(mc.coarse >= mc.fine);
  CHECK(mc.margin >= 0.0);
  CHECK(std::abs(mc.fine - exact) <= 3.0 * mc.fine_std_error + mc.margin);
}

TEST_CASE("Monte Carlo serial and parallel agree bitwise") {
  const auto s = survival_probability_mc(1.0, 2.0, 3000, 1, {16.0, Exec::serial});
  const auto p = survival_probability_mc(1.0, 2.0, 3000, 1, {16.0, Exec::parallel});
  CHECK(s.fine == p.fine);
  CHECK(s.coarse == p.coarse);
}

TEST_CASE("smooth cutoff shape") {
  CHECK(smooth_cutoff(0.0) == 0.0);
  CHECK(smooth_cutoff(1.0) == 0.0);
  CHECK(smooth_cutoff(2.0) == 1.0);
  CHECK(smooth_cutoff(5.0) == 1.0);
  CHECK(smooth_cutoff(-1.5) == smooth_cutoff(1.5));
  CHECK(smooth_cutoff(1.5) == doctest::Approx(0.5));
}

TEST_CASE("barrier profile bound and symmetry") {
  for (double L : {8.0, 32.0}) {
    const std::size_t n = 64;
    const auto q = barrier_profile(L, 0.4, n);
    REQUIRE(q.size() == n + 1);
    for (std::size_t i = 0; i <= n / 2; ++i) {
      const double y = L * static_cast<double>(i) / n;
      CHECK(q[i] <= std::pow(y, 0.4) + 1e-12);
      CHECK(q[i] == doctest::Approx(q[n - i]).epsilon(1e-13));
    }
  }
}

TEST_CASE("conditional moment: symmetric in x and L - x") {
  const double L = 8.0;
  const auto a = conditional_abs_moment(2.0, L, 20000, 3);
  const auto b = conditional_abs_moment(6.0, L, 20000, 3);
  CHECK(a.mean >= 0.0);
  CHECK(a.acceptance_rate > 0.0);
  CHECK(std::abs(a.mean - b.mean) < 4.0 * std::hypot(a.std_error, b.std_error));
  CHECK_THROWS_AS(conditional_abs_moment(2.0, L, 150, 3), InsufficientAcceptance);
}

TEST_CASE("entropic repulsion estimate is a probability") {
  const auto e = entropic_repulsion(8.0, 0.4, 20000, 5);
  CHECK(e.mean > 0.0);
  CHECK(e.mean <= 1.0);
  CHECK_THROWS_AS(entropic_repulsion(8.0, 0.6, 1000, 5), InvalidArgument);
}
