#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace kpzlab {

/// How a Monte Carlo loop is executed. Both paths visit the same fixed
/// chunk partition and merge chunk results in chunk order, so they return
/// bit-identical results for any thread count.
enum class Exec { serial, parallel };

/// Streaming mean/variance (Welford), mergeable with Chan's formula.
struct Moments {
  std::uint64_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) noexcept {
    ++n;
    const double d = x - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (x - mean);
  }

  void merge(const Moments& o) noexcept {
    if (o.n == 0) return;
    if (n == 0) {
      *this = o;
      return;
    }
    const double na = static_cast<double>(n);
    const double nb = static_cast<double>(o.n);
    const double d = o.mean - mean;
    const double nt = na + nb;
    mean += d * nb / nt;
    m2 += o.m2 + d * d * na * nb / nt;
    n += o.n;
  }

  double variance() const noexcept { return n > 1 ? m2 / static_cast<double>(n - 1) : 0.0; }
  double std_error() const noexcept { return n > 1 ? std::sqrt(variance() / static_cast<double>(n)) : 0.0; }
};

inline constexpr std::uint64_t kDefaultChunk = 64;

/// Runs body(begin, end, chunk_index) over [0, n) split into fixed chunks.
void for_each_chunk(std::uint64_t n, std::uint64_t chunk, Exec exec,
                    const std::function<void(std::uint64_t, std::uint64_t, std::uint64_t)>& body);

/// Moments of fn(i) for i in [0, n); fn must be a pure function of i.
Moments sample_moments(std::uint64_t n, const std::function<double(std::uint64_t)>& fn, Exec exec,
                       std::uint64_t chunk = kDefaultChunk);

/// Sample variance with a delete-one jackknife standard error.
struct VarianceWithError {
  double variance = 0.0;
  double std_error = 0.0;
};
VarianceWithError jackknife_variance(std::span<const double> xs);

/// Log-log weighted least squares output.
struct FitPoint {
  double log_L = 0.0;
  double log_value = 0.0;
  double weight = 0.0;
  double residual = 0.0;
};

struct FitResult {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_std_error = 0.0;
  double slope_halfwidth = 0.0;  // 2 * slope_std_error
  std::vector<FitPoint> points;
};

struct PowerLawPoint {
  double L = 0.0;
  double estimate = 0.0;
  double std_error = 0.0;
};

/// Weighted least squares of log(estimate) on log(L) with weights
/// 1/(std_error/estimate)^2. When every std_error is zero the weights are
/// equal and the slope error comes from the residuals alone; otherwise the
/// known-variance error is inflated by sqrt(chi2/dof) when that exceeds one.
FitResult fit_exponent(std::span<const PowerLawPoint> points);

/// Kolmogorov-Smirnov distance between the empirical law of xs and cdf.
double ks_statistic(std::vector<double> xs, const std::function<double(double)>& cdf);

/// sup |F_a - F_b| between two empirical distribution functions.
double ks_two_sample(std::vector<double> a, std::vector<double> b);

/// Asymptotic one-sample KS critical value at level alpha (0.01 or 0.05).
double ks_critical_value(std::size_t n, double alpha);

}  // namespace kpzlab
