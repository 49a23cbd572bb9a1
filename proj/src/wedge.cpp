#include "kpzlab/wedge.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <string>

#include <boost/math/quadrature/gauss.hpp>

#include "kpzlab/bessel.hpp"
#include "kpzlab/errors.hpp"
#include "kpzlab/rng.hpp"

namespace kpzlab {

namespace {

constexpr double kAngleSlack = 1e-12;

// Sums K streams of per-path statistics over the fixed chunk partition.
template <std::size_t K, class Fn>
std::array<Moments, K> reduce_paths(std::uint64_t n, Exec exec, Fn&& fn) {
  const std::uint64_t chunks = (n + kDefaultChunk - 1) / kDefaultChunk;
  std::vector<std::array<Moments, K>> parts(chunks);
  for_each_chunk(n, kDefaultChunk, exec, [&](std::uint64_t b, std::uint64_t e, std::uint64_t c) {
    for (std::uint64_t i = b; i < e; ++i) fn(i, parts[c]);
  });
  std::array<Moments, K> total{};
  for (const auto& p : parts)
    for (std::size_t k = 0; k < K; ++k) total[k].merge(p[k]);
  return total;
}

std::uint64_t param_tag(std::string_view name, std::initializer_list<double> params) {
  std::uint64_t t = tag_of(name);
  for (double p : params) t = mix64(t ^ std::bit_cast<std::uint64_t>(p));
  return t;
}

std::size_t grid_count(double length, double per_unit) {
  return std::max<std::size_t>(2, static_cast<std::size_t>(std::ceil(per_unit * length)));
}

// Paired fine/coarse stay indicators for a bridge from start to end.
StayEstimate stay_mc(double length, Vec2 start, Vec2 end, double level, std::uint64_t n_paths,
                     std::uint64_t seed, std::uint64_t tag, const WedgeMcOptions& options) {
  if (n_paths < 2) throw InvalidArgument("stay Monte Carlo needs at least 2 paths");
  const std::size_t n_fine = 2 * grid_count(length, options.grid_per_unit);
  const bool start_in = omega(start) <= level;
  auto m = reduce_paths<2>(n_paths, options.exec, [&](std::uint64_t i, std::array<Moments, 2>& acc) {
    bool fine = start_in;
    bool coarse = start_in;
    if (start_in) {
      RandomStream rng(seed, tag, i);
      PlanarBridgeWalker walk(length, n_fine, start, end);
      while (!walk.done() && coarse) {
        const Vec2 p = walk.step(rng);
        if (omega(p) > level) {
          fine = false;
          if (walk.index() % 2 == 0) coarse = false;
        }
      }
    }
    acc[0].add(fine ? 1.0 : 0.0);
    acc[1].add(coarse ? 1.0 : 0.0);
  });
  StayEstimate s;
  s.fine = m[0].mean;
  s.fine_std_error = m[0].std_error();
  s.coarse = m[1].mean;
  s.coarse_std_error = m[1].std_error();
  s.margin = (s.coarse - s.fine) / (std::numbers::sqrt2 - 1.0);
  s.n_paths = n_paths;
  s.n_grid_fine = n_fine;
  return s;
}

// Angle in [-pi/3, pi/3] of a point of N, snapping rounding noise at the edges.
bool polar_in_wedge(Vec2 v, WedgePoint& out) {
  out.r = v.norm();
  if (out.r == 0.0) {
    out.theta = 0.0;
    return true;
  }
  out.theta = std::atan2(v.y, v.x);
  if (std::abs(out.theta) > kWedgeHalfAngle + kAngleSlack) return false;
  if (std::abs(std::abs(out.theta) - kWedgeHalfAngle) <= kAngleSlack) {
    out.theta = std::copysign(kWedgeHalfAngle, out.theta);
  }
  return true;
}

bool on_edge(const WedgePoint& p) { return std::abs(p.theta) == kWedgeHalfAngle; }

// log of (q/2)^nu / Gamma(nu + 1): majorant of e^{-q} I_nu(q).
double log_majorant(double nu, double q) { return nu * std::log(0.5 * q) - std::lgamma(nu + 1.0); }

KernelValue series(double x, const WedgePoint& p1, const WedgePoint& p2, int fixed_terms) {
  KernelValue out;
  if (p1.r == 0.0 || p2.r == 0.0 || on_edge(p1) || on_edge(p2)) return out;
  const double q = p1.r * p2.r / x;
  if (q > kBesselMaxArgument) {
    throw OutOfRange("wedge kernel: r1 r2 / x = " + std::to_string(q) + " exceeds the supported 700");
  }
  const double envelope = kWedgeKernelNorm * std::exp(-(p1.r - p2.r) * (p1.r - p2.r) / (2.0 * x)) / x;
  const double phi1 = p1.theta + kWedgeHalfAngle;
  const double phi2 = p2.theta + kWedgeHalfAngle;
  double partial = 0.0;
  double magnitude = 0.0;
  const int limit = fixed_terms > 0 ? fixed_terms : kKernelMaxTerms;
  for (int j = 1; j <= limit; ++j) {
    const double nu = 1.5 * j;
    const double b = std::exp(log_bessel_I_series(nu, q) - q);
    partial += envelope * b * std::sin(nu * phi1) * std::sin(nu * phi2);
    magnitude += envelope * b;
    out.terms = j;
    // Majorant terms are log-concave in j, so once they shrink the remainder
    // is dominated by a geometric series.
    const double l1 = log_majorant(1.5 * (j + 1), q);
    const double l2 = log_majorant(1.5 * (j + 2), q);
    const double rho = std::exp(l2 - l1);
    double tail = std::numeric_limits<double>::infinity();
    if (rho < 1.0) tail = envelope * std::exp(l1) / (1.0 - rho);
    out.tail_bound = tail;
    if (fixed_terms > 0) continue;
    if (tail <= kKernelRelTol * std::abs(partial) || tail <= 1e-15 * magnitude) {
      out.value = partial;
      return out;
    }
  }
  out.value = partial;
  if (fixed_terms > 0) return out;
  throw ConvergenceFailure("wedge kernel: tail bound not below tolerance after 500 terms", partial, out.tail_bound);
}

WedgePoint shifted_point(Vec2 u, double a, const char* which) {
  WedgePoint p;
  if (!polar_in_wedge(u - a * wedge_geometry::h, p)) {
    throw InvalidArgument(std::string("wedge kernel: ") + which + " is outside the wedge N_a");
  }
  return p;
}

// Composite Gauss-Legendre over [0, R] with geometric refinement towards 0.
template <class F>
double radial_integral(F&& f, double R) {
  using GL = boost::math::quadrature::gauss<double, 20>;
  const int panels = std::max(8, static_cast<int>(std::ceil(R / 0.25)));
  const double w = R / panels;
  double total = 0.0;
  for (int p = 1; p < panels; ++p) total += GL::integrate(f, p * w, (p + 1) * w);
  double hi = w;
  for (int g = 0; g < 8; ++g) {
    const double lo = g == 7 ? 0.0 : hi * 0.25;
    total += GL::integrate(f, lo, hi);
    hi = lo;
  }
  return total;
}

template <class F>
double polar_wedge_integral(F&& f, double R) {
  using GL = boost::math::quadrature::gauss<double, 40>;
  return radial_integral(
      [&](double r) {
        return r * GL::integrate([&](double th) { return f(WedgePoint{r, th}); }, -kWedgeHalfAngle, kWedgeHalfAngle);
      },
      R);
}

void check_time(double x, const char* what) {
  if (!(x > 0.0) || !std::isfinite(x)) throw InvalidArgument(std::string(what) + " must be positive and finite");
}

}  // namespace

WedgePoint WedgePoint::from_cartesian(Vec2 v) {
  WedgePoint p;
  if (!polar_in_wedge(v, p)) throw InvalidArgument("point is outside the wedge N");
  return p;
}

Vec2 WedgePoint::cartesian() const noexcept { return {r * std::cos(theta), r * std::sin(theta)}; }

double free_kernel(double x, Vec2 u1, Vec2 u2) {
  check_time(x, "kernel time x");
  const Vec2 d = u1 - u2;
  return std::exp(-d.dot(d) / (2.0 * x)) / (2.0 * std::numbers::pi * x);
}

KernelValue wedge_kernel_certified(const KernelQuery& query) {
  check_time(query.x, "kernel time x");
  if (std::isinf(query.a) && query.a > 0.0) return {free_kernel(query.x, query.u1, query.u2), 0.0, 0};
  if (!std::isfinite(query.a)) throw InvalidArgument("wedge offset a must be finite or +inf");
  const WedgePoint p1 = shifted_point(query.u1, query.a, "u1");
  const WedgePoint p2 = shifted_point(query.u2, query.a, "u2");
  return series(query.x, p1, p2, 0);
}

double wedge_kernel(const KernelQuery& query) { return wedge_kernel_certified(query).value; }

double wedge_kernel_terms(double x, WedgePoint p1, WedgePoint p2, int terms) {
  check_time(x, "kernel time x");
  if (terms < 1) throw InvalidArgument("terms must be >= 1");
  return series(x, p1, p2, terms).value;
}

double survival_probability(double a, double L) {
  if (!(L > 0.0) || !std::isfinite(L)) throw InvalidArgument("survival_probability needs L > 0");
  if (std::isinf(a) && a > 0.0) return 1.0;
  if (!(a > 0.0) || !std::isfinite(a)) throw InvalidArgument("survival_probability needs a > 0");
  const Vec2 origin{};
  return 2.0 * std::numbers::pi * L * wedge_kernel({L, origin, origin, a});
}

double bridge_stay_probability(double q, double J, Vec2 w) {
  if (!(q > 0.0) || !std::isfinite(q)) throw InvalidArgument("bridge_stay_probability needs q > 0");
  check_time(J, "bridge length J");
  if (omega(w) > q + kAngleSlack * std::max(1.0, w.norm())) {
    throw InvalidArgument("bridge_stay_probability: w lies outside N_q");
  }
  const Vec2 origin{};
  return wedge_kernel({J, w, origin, q}) / free_kernel(J, w, origin);
}

double wedge_two_step(double s, double t, Vec2 u, Vec2 v) {
  check_time(s, "s");
  check_time(t, "t");
  const WedgePoint pu = WedgePoint::from_cartesian(u);
  const WedgePoint pv = WedgePoint::from_cartesian(v);
  const double R = std::max(pu.r, pv.r) + 12.0 * std::sqrt(std::max(s, t));
  return polar_wedge_integral(
      [&](const WedgePoint& w) { return series(s, pu, w, 0).value * series(t, w, pv, 0).value; }, R);
}

double wedge_mass(double x, Vec2 u) {
  check_time(x, "x");
  const WedgePoint pu = WedgePoint::from_cartesian(u);
  const double R = pu.r + 12.0 * std::sqrt(x);
  return polar_wedge_integral([&](const WedgePoint& w) { return series(x, pu, w, 0).value; }, R);
}

StayEstimate survival_probability_mc(double a, double L, std::uint64_t n_paths, std::uint64_t seed,
                                     const WedgeMcOptions& options) {
  if (!(a > 0.0) || !(L > 0.0)) throw InvalidArgument("survival_probability_mc needs a > 0 and L > 0");
  return stay_mc(L, {}, {}, a, n_paths, seed, param_tag("wedge/survival", {a, L}), options);
}

StayEstimate bridge_stay_probability_mc(double q, double J, Vec2 w, std::uint64_t n_paths, std::uint64_t seed,
                                        const WedgeMcOptions& options) {
  if (!(q > 0.0) || !(J > 0.0)) throw InvalidArgument("bridge_stay_probability_mc needs q > 0 and J > 0");
  if (omega(w) > q) throw InvalidArgument("bridge_stay_probability_mc: w lies outside N_q");
  return stay_mc(J, w, {}, q, n_paths, seed, param_tag("wedge/bridge-stay", {q, J, w.x, w.y}), options);
}

double smooth_cutoff(double x) noexcept {
  const double t = std::clamp(std::abs(x) - 1.0, 0.0, 1.0);
  return t * t * t * (t * (6.0 * t - 15.0) + 10.0);
}

std::vector<double> barrier_profile(double L, double gamma, std::size_t n) {
  detail::check_grid(L, n);
  if (!(gamma > 0.0 && gamma < 1.0)) throw InvalidArgument("barrier exponent gamma must lie in (0, 1)");
  auto integrand = [&](double x) {
    const double chi = smooth_cutoff(x) * smooth_cutoff(x - 0.5 * L) * smooth_cutoff(x - L);
    if (chi == 0.0) return 0.0;
    const double sgn = x < 0.5 * L ? 1.0 : (x > 0.5 * L ? -1.0 : 0.0);
    return gamma * chi * sgn * std::pow(std::min(x, L - x), gamma - 1.0);
  };
  using GL = boost::math::quadrature::gauss<double, 10>;
  const double dx = L / static_cast<double>(n);
  // The cutoff has kinks at |x| = 1, 2 around each centre; refining every
  // cell keeps those well resolved.
  constexpr int kSub = 8;
  std::vector<double> cell(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double a0 = dx * static_cast<double>(i);
    double acc = 0.0;
    for (int k = 0; k < kSub; ++k) acc += GL::integrate(integrand, a0 + k * dx / kSub, a0 + (k + 1) * dx / kSub);
    cell[i] = acc;
  }
  // Accumulate from both ends towards the middle so the profile is exactly
  // mirror-symmetric when the grid is.
  std::vector<double> q(n + 1, 0.0);
  for (std::size_t i = 0; i < n / 2; ++i) q[i + 1] = q[i] + cell[i];
  for (std::size_t i = n; i > n - n / 2; --i) q[i - 1] = q[i] - cell[i - 1];
  return q;
}

ConditionalEstimate conditional_abs_moment(double x, double L, std::uint64_t n_samples, std::uint64_t seed,
                                           const RejectionOptions& options) {
  if (!(L >= 2.0)) throw InvalidArgument("conditional_abs_moment needs L >= 2");
  if (!(x >= 1.0 && x <= L - 1.0)) throw InvalidArgument("conditional_abs_moment needs x in [1, L - 1]");
  const std::size_t n = grid_count(L, options.grid_per_unit);
  const double dx = L / static_cast<double>(n);
  const auto target = static_cast<std::size_t>(std::llround(x / dx));
  const std::uint64_t tag = param_tag("wedge/abs-moment", {x, L});
  auto m = reduce_paths<2>(n_samples, options.exec, [&](std::uint64_t i, std::array<Moments, 2>& acc) {
    RandomStream rng(seed, tag, i);
    PlanarBridgeWalker walk(L, n, {}, {});
    double value = 0.0;
    bool alive = true;
    while (!walk.done()) {
      const Vec2 p = walk.step(rng);
      if (omega(p) > 1.0) {
        alive = false;
        break;
      }
      if (walk.index() == target) value = p.norm();
    }
    acc[0].add(alive ? 1.0 : 0.0);
    if (alive) acc[1].add(value);
  });
  ConditionalEstimate est;
  est.n_samples = n_samples;
  est.n_accepted = m[1].n;
  est.acceptance_rate = m[0].mean;
  if (est.n_accepted < kMinAccepted) {
    throw InsufficientAcceptance("conditional_abs_moment: only " + std::to_string(est.n_accepted) +
                                     " accepted paths; raise n_samples",
                                 est.acceptance_rate);
  }
  est.mean = m[1].mean;
  est.std_error = m[1].std_error();
  return est;
}

ConditionalEstimate entropic_repulsion(double L, double gamma, std::uint64_t n_samples, std::uint64_t seed,
                                       const RejectionOptions& options) {
  if (!(L >= 4.0)) throw InvalidArgument("entropic_repulsion needs L >= 4");
  if (!(gamma > 0.0 && gamma < 0.5)) throw InvalidArgument("entropic_repulsion needs gamma in (0, 1/2)");
  const std::size_t n = grid_count(L, options.grid_per_unit);
  const std::vector<double> q = barrier_profile(L, gamma, n);
  const std::uint64_t tag = param_tag("wedge/entropic", {L, gamma});
  auto m = reduce_paths<2>(n_samples, options.exec, [&](std::uint64_t i, std::array<Moments, 2>& acc) {
    RandomStream rng(seed, tag, i);
    PlanarBridgeWalker walk(L, n, {}, {});
    bool alive = true;
    bool below = true;
    while (!walk.done()) {
      const double w = omega(walk.step(rng));
      if (w > 1.0) {
        alive = false;
        break;
      }
      if (w > 1.0 - q[walk.index()]) below = false;
    }
    acc[0].add(alive ? 1.0 : 0.0);
    if (alive) acc[1].add(below ? 1.0 : 0.0);
  });
  ConditionalEstimate est;
  est.n_samples = n_samples;
  est.n_accepted = m[1].n;
  est.acceptance_rate = m[0].mean;
  if (est.n_accepted < kMinAccepted) {
    throw InsufficientAcceptance("entropic_repulsion: only " + std::to_string(est.n_accepted) +
                                     " accepted paths; raise n_samples",
                                 est.acceptance_rate);
  }
  est.mean = m[1].mean;
  est.std_error = m[1].std_error();
  return est;
}

}  // namespace kpzlab
