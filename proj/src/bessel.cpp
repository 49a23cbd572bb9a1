#include "kpzlab/bessel.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include <boost/math/quadrature/gauss.hpp>

#include "kpzlab/errors.hpp"

namespace kpzlab {

namespace {

void check_range(double nu, double z) {
  if (!(nu >= 0.0 && nu <= kBesselMaxOrder) || !(z >= 0.0 && z <= kBesselMaxArgument)) {
    throw OutOfRange("bessel_I supports 0 <= nu <= 200 and 0 <= z <= 700, got nu=" + std::to_string(nu) +
                     " z=" + std::to_string(z));
  }
}

// log of int_a^b exp(phi(t) - shift) dt with one 30-point rule.
template <class F>
double panel(F&& f, double a, double b) {
  return boost::math::quadrature::gauss<double, 30>::integrate(f, a, b);
}

}  // namespace

double log_bessel_I_series(double nu, double z) {
  if (!(nu >= 0.0) || !(z >= 0.0) || z > kBesselMaxArgument || !std::isfinite(nu)) {
    throw OutOfRange("log_bessel_I_series: need nu >= 0 and 0 <= z <= 700");
  }
  if (z == 0.0) return nu == 0.0 ? 0.0 : -std::numeric_limits<double>::infinity();
  const double log_t0 = nu * std::log(0.5 * z) - std::lgamma(nu + 1.0);
  const double q = 0.25 * z * z;
  // Terms t_k / t_0 grow until k ~ z/2 then decay faster than geometrically.
  double term = 1.0;
  double sum = 1.0;
  double log_scale = 0.0;
  for (int k = 1; k < 100000; ++k) {
    const double ratio = q / (static_cast<double>(k) * (nu + static_cast<double>(k)));
    term *= ratio;
    sum += term;
    if (sum > 1e280) {
      term *= 1e-280;
      sum *= 1e-280;
      log_scale += 280.0 * std::numbers::ln10;
    }
    if (ratio < 0.5 && term < 1e-17 * sum) break;
  }
  return log_t0 + log_scale + std::log(sum);
}

double log_bessel_I_quadrature(double nu, double z) {
  check_range(nu, z);
  if (z == 0.0) return nu == 0.0 ? 0.0 : -std::numeric_limits<double>::infinity();
  // Integrand exp(phi), phi(t) = z cos t + 2 nu log sin t; shift by its maximum.
  double c_star = 1.0;
  if (nu > 0.0) c_star = (std::sqrt(nu * nu + z * z) - nu) / z;
  const double t_star = std::acos(std::min(1.0, c_star));
  auto phi = [&](double t) {
    const double s = std::sin(t);
    return nu == 0.0 ? z * std::cos(t) : z * std::cos(t) + 2.0 * nu * std::log(s);
  };
  const double phi_max = nu == 0.0 ? z : phi(t_star);
  auto f = [&](double t) { return std::exp(phi(t) - phi_max); };

  constexpr int kPanels = 64;
  constexpr int kGrading = 18;
  const double w = std::numbers::pi / kPanels;
  double total = 0.0;
  for (int p = 1; p + 1 < kPanels; ++p) total += panel(f, p * w, (p + 1) * w);
  // End panels split geometrically towards the endpoints, where sin^{2nu}
  // has a fractional-power singularity.
  for (int side = 0; side < 2; ++side) {
    double hi = w;
    for (int g = 0; g < kGrading; ++g) {
      const double lo = g + 1 == kGrading ? 0.0 : hi * 0.125;
      total += side == 0 ? panel(f, lo, hi) : panel(f, std::numbers::pi - hi, std::numbers::pi - lo);
      hi = lo;
    }
  }
  return nu * std::log(0.5 * z) - 0.5 * std::log(std::numbers::pi) - std::lgamma(nu + 0.5) + phi_max +
         std::log(total);
}

BesselCrossCheck bessel_I_cross_check(double nu, double z) {
  check_range(nu, z);
  BesselCrossCheck c;
  c.series = log_bessel_I_series(nu, z);
  c.quadrature = log_bessel_I_quadrature(nu, z);
  if (std::isinf(c.series) && std::isinf(c.quadrature)) {
    c.rel_diff = 0.0;
  } else {
    c.rel_diff = std::abs(std::expm1(c.quadrature - c.series));
  }
  return c;
}

double bessel_I(double nu, double z) {
  check_range(nu, z);
  return std::exp(log_bessel_I_series(nu, z));
}

double bessel_I_scaled(double nu, double z) {
  check_range(nu, z);
  return std::exp(log_bessel_I_series(nu, z) - z);
}

double bessel_I_checked(double nu, double z) {
  const auto c = bessel_I_cross_check(nu, z);
  if (!(c.rel_diff <= kBesselCrossTolerance)) {
    throw ConvergenceFailure("bessel_I: series and quadrature disagree (rel " + std::to_string(c.rel_diff) + ")",
                             std::exp(c.series), std::abs(std::exp(c.series) - std::exp(c.quadrature)));
  }
  return std::exp(c.series);
}

}  // namespace kpzlab
