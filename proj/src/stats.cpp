#include "kpzlab/stats.hpp"

#include <algorithm>
#include <limits>

#include "kpzlab/errors.hpp"

namespace kpzlab {

void for_each_chunk(std::uint64_t n, std::uint64_t chunk, Exec exec,
                    const std::function<void(std::uint64_t, std::uint64_t, std::uint64_t)>& body) {
  if (chunk == 0) throw InvalidArgument("chunk size must be positive");
  const std::uint64_t n_chunks = (n + chunk - 1) / chunk;
  if (exec == Exec::serial) {
    for (std::uint64_t c = 0; c < n_chunks; ++c) {
      body(c * chunk, std::min(n, (c + 1) * chunk), c);
    }
    return;
  }
  const auto total = static_cast<std::int64_t>(n_chunks);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::int64_t c = 0; c < total; ++c) {
    const auto cu = static_cast<std::uint64_t>(c);
    body(cu * chunk, std::min(n, (cu + 1) * chunk), cu);
  }
}

Moments sample_moments(std::uint64_t n, const std::function<double(std::uint64_t)>& fn, Exec exec,
                       std::uint64_t chunk) {
  const std::uint64_t n_chunks = (n + chunk - 1) / chunk;
  std::vector<Moments> parts(n_chunks);
  for_each_chunk(n, chunk, exec, [&](std::uint64_t begin, std::uint64_t end, std::uint64_t c) {
    Moments m;
    for (std::uint64_t i = begin; i < end; ++i) m.add(fn(i));
    parts[c] = m;
  });
  Moments total;
  for (const auto& p : parts) total.merge(p);
  return total;
}

VarianceWithError jackknife_variance(std::span<const double> xs) {
  const std::size_t n = xs.size();
  if (n < 3) throw InvalidArgument("jackknife needs at least 3 values");
  Moments all;
  for (double x : xs) all.add(x);
  const double nd = static_cast<double>(n);
  double sq = 0.0;
  for (double x : xs) sq += (x - all.mean) * (x - all.mean);
  // Leave-one-out variance in closed form: the sum of squared deviations
  // about the reduced mean drops by n/(n-1) * (x_i - mean)^2.
  Moments loo;
  for (double x : xs) {
    const double d = x - all.mean;
    const double ss = sq - nd / (nd - 1.0) * d * d;
    loo.add(ss / (nd - 2.0));
  }
  VarianceWithError out;
  out.variance = all.variance();
  out.std_error = std::sqrt((nd - 1.0) / nd * loo.m2);
  return out;
}

FitResult fit_exponent(std::span<const PowerLawPoint> points) {
  if (points.size() < 3) throw InvalidArgument("fit_exponent needs at least 3 points");
  bool any_error = false;
  bool any_zero = false;
  for (const auto& p : points) {
    if (!(p.estimate > 0.0) || !std::isfinite(p.estimate)) {
      throw InvalidArgument("fit_exponent: estimates must be positive and finite");
    }
    if (!(p.L > 0.0)) throw InvalidArgument("fit_exponent: L must be positive");
    if (p.std_error < 0.0) throw InvalidArgument("fit_exponent: negative std_error");
    (p.std_error > 0.0 ? any_error : any_zero) = true;
  }
  if (any_error && any_zero) {
    throw InvalidArgument("fit_exponent: std_errors must be all zero or all positive");
  }

  FitResult fit;
  fit.points.reserve(points.size());
  for (const auto& p : points) {
    FitPoint fp;
    fp.log_L = std::log(p.L);
    fp.log_value = std::log(p.estimate);
    const double rel = p.std_error / p.estimate;
    fp.weight = any_error ? 1.0 / (rel * rel) : 1.0;
    fit.points.push_back(fp);
  }

  double sw = 0.0, sx = 0.0, sy = 0.0;
  for (const auto& p : fit.points) {
    sw += p.weight;
    sx += p.weight * p.log_L;
    sy += p.weight * p.log_value;
  }
  const double xbar = sx / sw;
  const double ybar = sy / sw;
  double sxx = 0.0, sxy = 0.0;
  for (const auto& p : fit.points) {
    sxx += p.weight * (p.log_L - xbar) * (p.log_L - xbar);
    sxy += p.weight * (p.log_L - xbar) * (p.log_value - ybar);
  }
  if (!(sxx > 0.0)) throw InvalidArgument("fit_exponent: all L values coincide");
  fit.slope = sxy / sxx;
  fit.intercept = ybar - fit.slope * xbar;

  double chi2 = 0.0;
  for (auto& p : fit.points) {
    p.residual = p.log_value - (fit.intercept + fit.slope * p.log_L);
    chi2 += p.weight * p.residual * p.residual;
  }
  const double dof = static_cast<double>(fit.points.size() - 2);
  if (any_error) {
    const double inflation = std::max(1.0, std::sqrt(chi2 / dof));
    fit.slope_std_error = inflation / std::sqrt(sxx);
  } else {
    fit.slope_std_error = std::sqrt(chi2 / dof / sxx);
  }
  fit.slope_halfwidth = 2.0 * fit.slope_std_error;
  return fit;
}

double ks_statistic(std::vector<double> xs, const std::function<double(double)>& cdf) {
  if (xs.empty()) throw InvalidArgument("ks_statistic: no samples");
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = cdf(xs[i]);
    d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
  }
  return d;
}

double ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw InvalidArgument("ks_two_sample: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

double ks_critical_value(std::size_t n, double alpha) {
  double k = 0.0;
  if (alpha == 0.01) {
    k = 1.62762;
  } else if (alpha == 0.05) {
    k = 1.35810;
  } else {
    throw InvalidArgument("ks_critical_value: alpha must be 0.01 or 0.05");
  }
  return k / std::sqrt(static_cast<double>(n));
}

}  // namespace kpzlab
