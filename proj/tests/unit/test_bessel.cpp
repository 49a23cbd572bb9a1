#include <doctest.h>

#include <cmath>
#include <numbers>

#include "kpzlab/bessel.hpp"
#include "kpzlab/errors.hpp"

using namespace kpzlab;

TEST_CASE("values at zero argument") {
  CHECK(bessel_I(0.0, 0.0) == 1.0);
  CHECK(bessel_I(1.5, 0.0) == 0.0);
}

TEST_CASE("half-integer closed form") {
  for (double z : {0.5, 1.0, 5.0}) {
    const double exact = std::sqrt(2.0 / (std::numbers::pi * z)) * std::sinh(z);
    CHECK(std::abs(bessel_I(0.5, z) / exact - 1.0) < 1e-10);
    // I_{3/2}(z) = sqrt(2 / (pi z)) (cosh z - sinh z / z).
    const double exact32 = std::sqrt(2.0 / (std::numbers::pi * z)) * (std::cosh(z) - std::sinh(z) / z);
    CHECK(std::abs(bessel_I(1.5, z) / exact32 - 1.0) < 1e-10);
  }
}

TEST_CASE("series and quadrature agree across the supported range") {
  for (double nu : {0.0, 0.5, 1.5, 3.0, 7.5, 30.0, 100.5, 200.0}) {
    for (double z : {1e-3, 0.1, 1.0, 10.0, 50.0, 200.0, 700.0}) {
      const auto c = bessel_I_cross_check(nu, z);
      INFO("nu = " << nu << ", z = " << z);
      CHECK(c.rel_diff < kBesselCrossTolerance);
    }
  }
}

TEST_CASE("lemma sandwich with Gamma(nu + 1)") {
  for (double nu : {1.5, 3.0, 7.5}) {
    for (double z : {0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0}) {
      const double log_core = nu * std::log(z / 2.0) - std::lgamma(nu + 1.0);
      const double log_i = log_bessel_I_series(nu, z);
      CHECK(log_i >= log_core - z - 1e-12);
      CHECK(log_i <= log_core + z + 1e-12);
    }
  }
}

TEST_CASE("the Gamma(nu + 1/2) lower bound fails somewhere on the grid") {
  int failures = 0;
  for (double nu : {1.5, 3.0, 7.5}) {
    for (double z : {0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0}) {
      const double lower = nu * std::log(z / 2.0) - std::lgamma(nu + 0.5) - z;
      if (log_bessel_I_series(nu, z) < lower) ++failures;
    }
  }
  CHECK(failures > 0);
}

TEST_CASE("out-of-range arguments") {
  CHECK_THROWS_AS(bessel_I(-1.0, 1.0), OutOfRange);
  CHECK_THROWS_AS(bessel_I(1.0, 701.0), OutOfRange);
  CHECK_THROWS_AS(bessel_I(201.0, 1.0), OutOfRange);
  CHECK(bessel_I_checked(2.5, 3.0) == doctest::Approx(bessel_I(2.5, 3.0)).epsilon(1e-14));
  CHECK(bessel_I_scaled(1.0, 700.0) > 0.0);
}
