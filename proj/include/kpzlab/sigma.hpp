#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

#include "kpzlab/stats.hpp"

namespace kpzlab {

/// Which exact rewriting of the diffusion constant the estimator averages.
///   definition: int e^{B1+B2+2B3} / (int e^{B1+B3} int e^{B2+B3})
///   shifted:    L / (int e^{U1} int e^{U2}),   U_k = B_k + B3
///   wedge:      L / prod_k int e^{v_k . V},    V a planar bridge
enum class SigmaForm { definition, shifted, wedge };

std::string_view to_string(SigmaForm form) noexcept;
SigmaForm parse_sigma_form(std::string_view name);

struct SigmaEstimate {
  double L = 0.0;
  SigmaForm form = SigmaForm::shifted;
  double mean = 0.0;
  double std_error = 0.0;
  std::uint64_t n_samples = 0;
  double r = 0.5;
  std::size_t n_grid = 0;
};

struct SigmaOptions {
  /// Average each sample with its increment-negated partner.
  bool antithetic = false;
  Exec exec = Exec::parallel;
};

/// Grid used when the caller passes n_grid = 0: max(1024, 64 L).
std::size_t default_sigma_grid(double L);

SigmaEstimate estimate_sigma2(double L, std::uint64_t n_samples, std::size_t n_grid, SigmaForm form,
                              std::uint64_t seed, const SigmaOptions& options = {});

/// Shifted form with bridges of correlation r in [0, 1).
SigmaEstimate estimate_sigma2_r(double L, double r, std::uint64_t n_samples, std::size_t n_grid,
                                std::uint64_t seed, const SigmaOptions& options = {});

/// U1 = U2: L / (int e^U)^2. Recorded with r = 1.
SigmaEstimate estimate_sigma2_identical(double L, std::uint64_t n_samples, std::size_t n_grid,
                                        std::uint64_t seed, const SigmaOptions& options = {});

/// U2 replaced by an independent copy of U1 (r = 0); exact value 1/L.
SigmaEstimate estimate_sigma2_independent(double L, std::uint64_t n_samples, std::size_t n_grid,
                                          std::uint64_t seed, const SigmaOptions& options = {});

/// 1 - pi / (pi - arccos r), the decay exponent for correlation r in [0, 1).
double predicted_exponent(double r);

// Per-sample integrands on grid values (spacing = L / n).
double shifted_integrand(std::span<const double> u1, std::span<const double> u2, double spacing);
double definition_integrand(std::span<const double> b1, std::span<const double> b2,
                            std::span<const double> b3, double spacing);
/// exp(-min U1 - min U2) / L, a pathwise upper bound for shifted_integrand.
double shifted_integrand_bound(std::span<const double> u1, std::span<const double> u2, double length);

/// Base stream tag of each estimator. Sample i at length L draws from
/// RandomStream(seed, mix64(tag ^ bits(L)), i), so different L are independent.
std::uint64_t sigma_stream_tag(SigmaForm form, double r) noexcept;

}  // namespace kpzlab
