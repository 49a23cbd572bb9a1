#include "kpzlab/sigma.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "kpzlab/bridges.hpp"
#include "kpzlab/errors.hpp"
#include "kpzlab/rng.hpp"

namespace kpzlab {

namespace {

struct Scratch {
  std::vector<double> a, b, c, d;
  void resize(std::size_t n) {
    a.resize(n);
    b.resize(n);
    c.resize(n);
    d.resize(n);
  }
};

Scratch& scratch(std::size_t n) {
  thread_local Scratch s;
  s.resize(n);
  return s;
}

void check_common(double L, std::uint64_t n_samples, std::size_t n_grid) {
  if (!(L >= 1.0)) throw InvalidArgument("sigma estimators need L >= 1, got " + std::to_string(L));
  if (n_samples < 100) throw InvalidArgument("sigma estimators need n_samples >= 100");
  if (n_grid != 0 && n_grid < 2) throw InvalidArgument("n_grid must be 0 (auto) or >= 2");
}

enum class Pairing { correlated, identical, independent };

// One sample of L / (int e^{U1} int e^{U2}) for the requested pairing.
double pair_sample(double L, std::size_t n, double r, Pairing pairing, RandomStream& rng, bool negate) {
  auto& s = scratch(n + 1);
  const double dx = L / static_cast<double>(n);
  switch (pairing) {
    case Pairing::correlated:
      fill_correlated_pair(s.a, s.b, s.c, L, r, rng, negate);
      return shifted_integrand(s.a, s.b, dx);
    case Pairing::identical: {
      fill_bridge(s.a, L, rng, negate);
      for (auto& v : s.a) v *= std::numbers::sqrt2;
      const double li = log_exp_integral(s.a, dx);
      return std::exp(std::log(L) - 2.0 * li);
    }
    case Pairing::independent:
      fill_bridge(s.a, L, rng, negate);
      fill_bridge(s.b, L, rng, negate);
      for (std::size_t i = 0; i <= n; ++i) {
        s.a[i] *= std::numbers::sqrt2;
        s.b[i] *= std::numbers::sqrt2;
      }
      return shifted_integrand(s.a, s.b, dx);
  }
  return 0.0;
}

double form_sample(double L, std::size_t n, SigmaForm form, RandomStream& rng, bool negate) {
  auto& s = scratch(n + 1);
  const double dx = L / static_cast<double>(n);
  switch (form) {
    case SigmaForm::definition:
      fill_bridge(s.a, L, rng, negate);
      fill_bridge(s.b, L, rng, negate);
      fill_bridge(s.c, L, rng, negate);
      return definition_integrand(s.a, s.b, s.c, dx);
    case SigmaForm::shifted:
      fill_correlated_pair(s.a, s.b, s.c, L, 0.5, rng, negate);
      return shifted_integrand(s.a, s.b, dx);
    case SigmaForm::wedge: {
      fill_bridge(s.c, L, rng, negate);
      fill_bridge(s.d, L, rng, negate);
      const Vec2 v1 = wedge_geometry::v1;
      const Vec2 v2 = wedge_geometry::v2;
      for (std::size_t i = 0; i <= n; ++i) {
        s.a[i] = v1.x * s.c[i] + v1.y * s.d[i];
        s.b[i] = v2.x * s.c[i] + v2.y * s.d[i];
      }
      return shifted_integrand(s.a, s.b, dx);
    }
  }
  return 0.0;
}

template <class SampleFn>
SigmaEstimate run(double L, std::uint64_t n_samples, std::size_t n_grid, std::uint64_t seed,
                  std::uint64_t tag, const SigmaOptions& options, SampleFn sample) {
  const std::size_t n = n_grid == 0 ? default_sigma_grid(L) : n_grid;
  tag = mix64(tag ^ std::bit_cast<std::uint64_t>(L));
  const Moments m = sample_moments(
      n_samples,
      [&](std::uint64_t i) {
        RandomStream rng(seed, tag, i);
        double v = sample(n, rng, false);
        if (options.antithetic) {
          RandomStream mirror(seed, tag, i);
          v = 0.5 * (v + sample(n, mirror, true));
        }
        return v;
      },
      options.exec);
  SigmaEstimate est;
  est.L = L;
  est.mean = m.mean;
  est.std_error = m.std_error();
  est.n_samples = n_samples;
  est.n_grid = n;
  return est;
}

}  // namespace

std::string_view to_string(SigmaForm form) noexcept {
  switch (form) {
    case SigmaForm::definition:
      return "definition";
    case SigmaForm::shifted:
      return "shifted";
    case SigmaForm::wedge:
      return "wedge";
  }
  return "?";
}

SigmaForm parse_sigma_form(std::string_view name) {
  if (name == "definition") return SigmaForm::definition;
  if (name == "shifted") return SigmaForm::shifted;
  if (name == "wedge") return SigmaForm::wedge;
  throw InvalidArgument("unknown sigma form '" + std::string(name) + "' (definition, shifted, wedge)");
}

std::size_t default_sigma_grid(double L) {
  return std::max<std::size_t>(1024, static_cast<std::size_t>(std::ceil(64.0 * L)));
}

std::uint64_t sigma_stream_tag(SigmaForm form, double r) noexcept {
  const auto bits = std::bit_cast<std::uint64_t>(r);
  return mix64(tag_of(to_string(form)) ^ mix64(bits));
}

double shifted_integrand(std::span<const double> u1, std::span<const double> u2, double spacing) {
  const double L = spacing * static_cast<double>(u1.size() - 1);
  return std::exp(std::log(L) - log_exp_integral(u1, spacing) - log_exp_integral(u2, spacing));
}

double definition_integrand(std::span<const double> b1, std::span<const double> b2,
                            std::span<const double> b3, double spacing) {
  const std::size_t n = b1.size();
  thread_local std::vector<double> num, d1, d2;
  num.resize(n);
  d1.resize(n);
  d2.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    num[i] = b1[i] + b2[i] + 2.0 * b3[i];
    d1[i] = b1[i] + b3[i];
    d2[i] = b2[i] + b3[i];
  }
  return std::exp(log_exp_integral(num, spacing) - log_exp_integral(d1, spacing) - log_exp_integral(d2, spacing));
}

double shifted_integrand_bound(std::span<const double> u1, std::span<const double> u2, double length) {
  const double m1 = *std::min_element(u1.begin(), u1.end());
  const double m2 = *std::min_element(u2.begin(), u2.end());
  return std::exp(-m1 - m2) / length;
}

SigmaEstimate estimate_sigma2(double L, std::uint64_t n_samples, std::size_t n_grid, SigmaForm form,
                              std::uint64_t seed, const SigmaOptions& options) {
  check_common(L, n_samples, n_grid);
  auto est = run(L, n_samples, n_grid, seed, sigma_stream_tag(form, 0.5), options,
                 [&](std::size_t n, RandomStream& rng, bool neg) { return form_sample(L, n, form, rng, neg); });
  est.form = form;
  est.r = 0.5;
  return est;
}

SigmaEstimate estimate_sigma2_r(double L, double r, std::uint64_t n_samples, std::size_t n_grid,
                                std::uint64_t seed, const SigmaOptions& options) {
  check_common(L, n_samples, n_grid);
  if (!(r >= 0.0 && r < 1.0)) {
    throw InvalidArgument("estimate_sigma2_r needs r in [0, 1); use the identical-bridge variant for r = 1");
  }
  auto est = run(L, n_samples, n_grid, seed, sigma_stream_tag(SigmaForm::shifted, r), options,
                 [&](std::size_t n, RandomStream& rng, bool neg) {
                   return pair_sample(L, n, r, Pairing::correlated, rng, neg);
                 });
  est.form = SigmaForm::shifted;
  est.r = r;
  return est;
}

SigmaEstimate estimate_sigma2_identical(double L, std::uint64_t n_samples, std::size_t n_grid,
                                        std::uint64_t seed, const SigmaOptions& options) {
  check_common(L, n_samples, n_grid);
  auto est = run(L, n_samples, n_grid, seed, sigma_stream_tag(SigmaForm::shifted, 1.0) ^ tag_of("identical"),
                 options, [&](std::size_t n, RandomStream& rng, bool neg) {
                   return pair_sample(L, n, 1.0, Pairing::identical, rng, neg);
                 });
  est.form = SigmaForm::shifted;
  est.r = 1.0;
  return est;
}

SigmaEstimate estimate_sigma2_independent(double L, std::uint64_t n_samples, std::size_t n_grid,
                                          std::uint64_t seed, const SigmaOptions& options) {
  check_common(L, n_samples, n_grid);
  auto est = run(L, n_samples, n_grid, seed, sigma_stream_tag(SigmaForm::shifted, 0.0) ^ tag_of("independent"),
                 options, [&](std::size_t n, RandomStream& rng, bool neg) {
                   return pair_sample(L, n, 0.0, Pairing::independent, rng, neg);
                 });
  est.form = SigmaForm::shifted;
  est.r = 0.0;
  return est;
}

double predicted_exponent(double r) {
  if (!(r >= 0.0 && r < 1.0)) throw InvalidArgument("predicted_exponent needs r in [0, 1)");
  return 1.0 - std::numbers::pi / (std::numbers::pi - std::acos(r));
}

}  // namespace kpzlab
