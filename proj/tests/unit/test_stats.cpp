#include <doctest.h>

#include <cmath>
#include <vector>

#include "kpzlab/rng.hpp"
#include "kpzlab/stats.hpp"

using namespace kpzlab;

TEST_CASE("serial and parallel reductions are bit-identical") {
  auto fn = [](std::uint64_t i) {
    RandomStream s(5, tag_of("red"), i);
    return std::exp(s.normal());
  };
  const auto a = sample_moments(10007, fn, Exec::serial);
  const auto b = sample_moments(10007, fn, Exec::parallel);
  CHECK(a.n == b.n);
  CHECK(a.mean == b.mean);
  CHECK(a.m2 == b.m2);
}

TEST_CASE("merged moments equal a single pass") {
  Moments all, left, right;
  for (int i = 0; i < 50; ++i) {
    const double x = std::sin(i) * 3.0 + i * 0.1;
    all.add(x);
    (i < 20 ? left : right).add(x);
  }
  left.merge(right);
  CHECK(left.mean == doctest::Approx(all.mean).epsilon(1e-14));
  CHECK(left.variance() == doctest::Approx(all.variance()).epsilon(1e-12));
}

TEST_CASE("exact power law fits to machine precision") {
  std::vector<PowerLawPoint> pts;
  for (double L : {10.0, 100.0, 1000.0}) pts.push_back({L, 7.0 / std::sqrt(L), 0.0});
  const auto fit = fit_exponent(pts);
  CHECK(fit.slope == doctest::Approx(-0.5).epsilon(1e-12));
  CHECK(fit.intercept == doctest::Approx(std::log(7.0)).epsilon(1e-12));
  CHECK(fit.slope_halfwidth == doctest::Approx(2.0 * fit.slope_std_error));
}

TEST_CASE("noisy power law: half-width covers the truth in most repetitions") {
  int covered = 0;
  for (std::uint64_t rep = 0; rep < 100; ++rep) {
    RandomStream s(99, tag_of("fit"), rep);
    std::vector<PowerLawPoint> pts;
    for (double L = 16; L <= 512; L *= 2) {
      const double v = 3.0 * std::pow(L, -0.5) * (1.0 + 0.05 * s.normal());
      pts.push_back({L, v, 0.05 * 3.0 * std::pow(L, -0.5)});
    }
    const auto fit = fit_exponent(pts);
    if (std::abs(fit.slope + 0.5) <= fit.slope_halfwidth) ++covered;
  }
  CHECK(covered >= 90);
}

TEST_CASE("jackknife variance of a known sample") {
  const std::vector<double> xs = {1, 2, 3, 4, 5};
  const auto v = jackknife_variance(xs);
  CHECK(v.variance == doctest::Approx(2.5));
  CHECK(v.std_error > 0.0);
}

TEST_CASE("ks statistic and critical values") {
  std::vector<double> grid;
  for (int i = 0; i < 1000; ++i) grid.push_back((i + 0.5) / 1000.0);
  CHECK(ks_statistic(grid, [](double x) { return x; }) == doctest::Approx(0.0005).epsilon(1e-9));
  CHECK(ks_critical_value(10000, 0.01) == doctest::Approx(1.6276 / 100.0).epsilon(1e-3));
  CHECK(ks_critical_value(10000, 0.05) < ks_critical_value(10000, 0.01));
  CHECK(ks_two_sample({1, 2, 3}, {1, 2, 3}) == 0.0);
  CHECK(ks_two_sample({0, 0}, {1, 1}) == 1.0);
}
