#include "kpzlab/she.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <istream>
#include <mutex>
#include <numbers>
#include <ostream>
#include <string>

#include <fftw3.h>

#include "kpzlab/bessel.hpp"
#include "kpzlab/bridges.hpp"
#include "kpzlab/errors.hpp"

namespace kpzlab {

namespace {

// FFTW's planner is not reentrant; execution on distinct plans is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

std::uint64_t bits(double v) { return std::bit_cast<std::uint64_t>(v); }

double positive_sum(std::span<const double> u) {
  double s = 0.0;
  for (double v : u) s += v;
  return s;
}

// log of sum_i a_i b_i dx: the periodic trapezoid for int a b.
double log_pair_integral(std::span<const double> a, std::span<const double> b, double dx) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return std::log(s * dx);
}

void check_field(std::span<const double> u, const char* where) {
  for (double v : u) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw ConvergenceFailure(std::string(where) + ": field lost positivity or overflowed", v, 0.0);
    }
  }
}

}  // namespace

struct SheSolver::Impl {
  double L;
  std::size_t n;
  double dt;
  double dx;
  double* real = nullptr;
  fftw_complex* spec = nullptr;
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;
  std::vector<double> full;  // multipliers for dt, including 1/n
  std::vector<double> half;  // for dt / 2
  std::vector<double> scratch;

  Impl(double L_, std::size_t n_, double dt_) : L(L_), n(n_), dt(dt_), dx(L_ / static_cast<double>(n_)) {
    real = fftw_alloc_real(n);
    spec = fftw_alloc_complex(n / 2 + 1);
    {
      std::lock_guard lock(planner_mutex());
      forward = fftw_plan_dft_r2c_1d(static_cast<int>(n), real, spec, FFTW_ESTIMATE);
      backward = fftw_plan_dft_c2r_1d(static_cast<int>(n), spec, real, FFTW_ESTIMATE);
    }
    full = multipliers(dt);
    half = multipliers(0.5 * dt);
  }

  ~Impl() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(forward);
    fftw_destroy_plan(backward);
    fftw_free(real);
    fftw_free(spec);
  }

  // Symbol of the nearest-neighbour (1/2) Laplacian: -(1 - cos(2 pi m / n)) / dx^2.
  std::vector<double> multipliers(double s) const {
    std::vector<double> m(n / 2 + 1);
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t k = 0; k < m.size(); ++k) {
      const double theta = 2.0 * std::numbers::pi * static_cast<double>(k) * inv_n;
      m[k] = std::exp(-s * (1.0 - std::cos(theta)) / (dx * dx)) * inv_n;
    }
    return m;
  }

  void apply(std::span<double> u, const std::vector<double>& mult) {
    std::copy(u.begin(), u.end(), real);
    fftw_execute(forward);
    for (std::size_t k = 0; k < mult.size(); ++k) {
      spec[k][0] *= mult[k];
      spec[k][1] *= mult[k];
    }
    fftw_execute(backward);
    std::copy(real, real + n, u.begin());
  }
};

SheSolver::SheSolver(double L, std::size_t n_x, double dt) {
  if (!(L > 0.0) || !std::isfinite(L)) throw InvalidArgument("SHE: L must be positive");
  if (n_x < 4) throw InvalidArgument("SHE: n_x must be >= 4");
  const double dx = L / static_cast<double>(n_x);
  if (!(dt > 0.0) || dt > 0.25 * dx * dx * (1.0 + 1e-12)) {
    throw InvalidArgument("SHE: stability needs 0 < dt <= dx^2/4 (dx = " + std::to_string(dx) +
                          ", dt = " + std::to_string(dt) + ")");
  }
  impl_ = std::make_unique<Impl>(L, n_x, dt);
}

SheSolver::~SheSolver() = default;
SheSolver::SheSolver(SheSolver&&) noexcept = default;
SheSolver& SheSolver::operator=(SheSolver&&) noexcept = default;

double SheSolver::L() const noexcept { return impl_->L; }
std::size_t SheSolver::n_x() const noexcept { return impl_->n; }
double SheSolver::dt() const noexcept { return impl_->dt; }

void SheSolver::heat(std::span<double> u, double s) {
  if (u.size() != impl_->n) throw InvalidArgument("SHE: field size does not match the solver");
  if (s < 0.0) throw InvalidArgument("SHE: heat flow time must be >= 0");
  impl_->apply(u, impl_->multipliers(s));
}

void SheSolver::advance(std::span<double> u, std::uint64_t steps, RandomStream* rng) {
  if (u.size() != impl_->n) throw InvalidArgument("SHE: field size does not match the solver");
  if (steps == 0) return;
  auto& im = *impl_;
  const double amp = std::sqrt(im.dt / im.dx);
  const double comp = im.dt / (2.0 * im.dx);
  // Consecutive half steps of the heat flow are merged into full steps.
  im.apply(u, im.half);
  for (std::uint64_t k = 0; k < steps; ++k) {
    if (rng != nullptr) {
      for (auto& v : u) v *= std::exp(amp * rng->normal() - comp);
    }
    im.apply(u, k + 1 < steps ? im.full : im.half);
  }
  check_field(u, "SHE step");
}

std::vector<double> lattice_heat_reference(std::span<const double> u, double L, double s) {
  const std::size_t n = u.size();
  const double dx = L / static_cast<double>(n);
  const double a = s / (dx * dx);
  std::vector<double> kernel(n, 0.0);
  if (a == 0.0) {
    kernel[0] = 1.0;
  } else {
    if (a > kBesselMaxArgument) throw OutOfRange("lattice_heat_reference: s / dx^2 exceeds 700");
    const double reach = a + 40.0 * std::sqrt(a) + 50.0;
    const auto jmax = static_cast<long>(std::ceil(reach));
    for (long j = -jmax; j <= jmax; ++j) {
      const double w = std::exp(log_bessel_I_series(static_cast<double>(std::labs(j)), a) - a);
      const long idx = ((j % static_cast<long>(n)) + static_cast<long>(n)) % static_cast<long>(n);
      kernel[static_cast<std::size_t>(idx)] += w;
    }
  }
  std::vector<double> out(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) acc += kernel[(i + n - j) % n] * u[j];
    out[i] = acc;
  }
  return out;
}

std::vector<double> stationary_bridge_field(double L, std::size_t n_x, RandomStream& rng) {
  std::vector<double> b(n_x + 1);
  fill_bridge(b, L, rng);
  b.pop_back();
  for (auto& v : b) v = std::exp(v);
  return b;
}

EndpointDensity endpoint_density(const SheField& field) {
  const double dx = field.dx();
  EndpointDensity rho;
  rho.dx = dx;
  rho.values = field.values;
  const double z = positive_sum(field.values) * dx;
  if (!(z > 0.0) || !std::isfinite(z)) throw InvalidArgument("endpoint_density: field must be positive");
  for (auto& v : rho.values) v /= z;
  return rho;
}

namespace {

std::vector<std::uint64_t> checkpoint_steps(std::span<const double> checkpoints, double dt) {
  std::vector<std::uint64_t> steps;
  double prev = 0.0;
  for (double t : checkpoints) {
    if (!(t >= prev)) throw InvalidArgument("SHE checkpoints must be non-negative and ascending");
    prev = t;
    steps.push_back(static_cast<std::uint64_t>(std::llround(t / dt)));
  }
  return steps;
}

constexpr std::uint64_t kInitTag = tag_of("she/init");
constexpr std::uint64_t kNoiseTag = tag_of("she/noise");

}  // namespace

std::vector<SheField> solve_she(double L, std::size_t n_x, double dt, std::span<const double> checkpoints,
                                const SheInitial& initial, std::uint64_t seed, std::uint64_t replica, bool noise) {
  SheSolver solver(L, n_x, dt);
  std::vector<double> u;
  if (initial.kind == InitialKind::field) {
    if (initial.field.size() != n_x) throw InvalidArgument("solve_she: initial field must have n_x values");
    u = initial.field;
    check_field(u, "solve_she initial field");
  } else {
    RandomStream init(seed, kInitTag, replica);
    u = stationary_bridge_field(L, n_x, init);
  }
  RandomStream rng(seed, kNoiseTag, replica);
  std::vector<SheField> out;
  std::uint64_t done = 0;
  for (std::uint64_t target : checkpoint_steps(checkpoints, dt)) {
    solver.advance(u, target - done, noise ? &rng : nullptr);
    done = target;
    out.push_back({L, n_x, dt, static_cast<double>(done) * dt, u});
  }
  return out;
}

std::vector<VariancePoint> estimate_height_variance(double alpha, double lambda, std::span<const double> t_list,
                                                    std::uint64_t n_replicas, const ResolutionPolicy& policy,
                                                    std::uint64_t seed) {
  if (!(alpha >= 0.0 && alpha <= 2.0 / 3.0 + 1e-12)) throw InvalidArgument("alpha must lie in [0, 2/3]");
  if (!(lambda > 0.0)) throw InvalidArgument("lambda must be positive");
  if (n_replicas < 4) throw InvalidArgument("need at least 4 replicas");
  if (t_list.empty()) throw InvalidArgument("t_list is empty");
  for (double t : t_list) {
    if (!(t > 0.0)) throw InvalidArgument("every t must be positive");
  }

  // Times that share a torus size share one checkpointed trajectory.
  struct Group {
    double L;
    std::size_t n_x;
    double dt;
    std::vector<double> times;
    std::vector<std::size_t> slots;
  };
  std::vector<Group> groups;
  for (std::size_t i = 0; i < t_list.size(); ++i) {
    const double L = lambda * std::pow(t_list[i], alpha);
    auto it = std::find_if(groups.begin(), groups.end(), [&](const Group& g) { return g.L == L; });
    if (it == groups.end()) {
      groups.push_back({L, 0, 0.0, {}, {}});
      it = groups.end() - 1;
    }
    it->times.push_back(t_list[i]);
    it->slots.push_back(i);
  }
  double cell_updates = 0.0;
  for (auto& g : groups) {
    std::vector<std::size_t> order(g.times.size());
    for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return g.times[a] < g.times[b]; });
    std::vector<double> times;
    std::vector<std::size_t> slots;
    for (auto k : order) {
      times.push_back(g.times[k]);
      slots.push_back(g.slots[k]);
    }
    g.times = times;
    g.slots = slots;
    g.n_x = std::max<std::size_t>(4, static_cast<std::size_t>(std::ceil(policy.cells_per_unit * g.L)));
    const double dx = g.L / static_cast<double>(g.n_x);
    const double t_max = g.times.back();
    const double steps = std::ceil(t_max / (policy.dt_factor * dx * dx) - 1e-9);
    g.dt = t_max / steps;
    cell_updates += static_cast<double>(n_replicas) * static_cast<double>(g.n_x) * steps;
  }
  if (cell_updates > policy.max_cell_updates) {
    throw ResourceGuard("she-variance needs " + std::to_string(cell_updates) + " cell updates, over the budget of " +
                        std::to_string(policy.max_cell_updates));
  }

  std::vector<VariancePoint> points(t_list.size());
  for (const auto& g : groups) {
    const std::uint64_t group_seed = child_seed(seed, tag_of("she/variance"), bits(g.L));
    std::vector<std::vector<double>> h(g.times.size(), std::vector<double>(n_replicas));
    for_each_chunk(n_replicas, 4, policy.exec, [&](std::uint64_t b, std::uint64_t e, std::uint64_t) {
      for (std::uint64_t r = b; r < e; ++r) {
        auto fields = solve_she(g.L, g.n_x, g.dt, g.times, {}, group_seed, r);
        for (std::size_t k = 0; k < fields.size(); ++k) h[k][r] = std::log(fields[k].values[0]);
      }
    });
    for (std::size_t k = 0; k < g.times.size(); ++k) {
      const auto v = jackknife_variance(h[k]);
      auto& p = points[g.slots[k]];
      p.t = g.times[k];
      p.L = g.L;
      p.alpha = alpha;
      p.lambda = lambda;
      p.var_estimate = v.variance;
      p.std_error = v.std_error;
      p.n_replicas = n_replicas;
      p.n_x = g.n_x;
      p.dt = g.dt;
    }
  }
  return points;
}

IncrementProfile increment_variance_profile(double L, std::size_t n_x, double dt, double t,
                                            std::uint64_t n_replicas, std::uint64_t seed, Exec exec) {
  if (n_replicas < 4) throw InvalidArgument("need at least 4 replicas");
  std::vector<std::vector<double>> inc(n_x, std::vector<double>(n_replicas));
  const double times[] = {t};
  for_each_chunk(n_replicas, 4, exec, [&](std::uint64_t b, std::uint64_t e, std::uint64_t) {
    for (std::uint64_t r = b; r < e; ++r) {
      const auto f = solve_she(L, n_x, dt, times, {}, seed, r).front();
      const double h0 = std::log(f.values[0]);
      for (std::size_t i = 0; i < n_x; ++i) inc[i][r] = std::log(f.values[i]) - h0;
    }
  });
  IncrementProfile p;
  const double dx = L / static_cast<double>(n_x);
  for (std::size_t i = 0; i < n_x; ++i) {
    p.x.push_back(dx * static_cast<double>(i));
    if (i == 0) {
      p.variance.push_back(0.0);
      p.std_error.push_back(0.0);
      continue;
    }
    const auto v = jackknife_variance(inc[i]);
    p.variance.push_back(v.variance);
    p.std_error.push_back(v.std_error);
  }
  return p;
}

YLEstimate estimate_YL_variance(double L, std::uint64_t n_outer, std::uint64_t n_inner, std::size_t n_grid,
                                std::uint64_t seed, Exec exec) {
  if (!(L > 0.0)) throw InvalidArgument("estimate_YL_variance needs L > 0");
  if (n_inner < 100) throw InvalidArgument("estimate_YL_variance needs n_inner >= 100");
  if (n_outer < 4) throw InvalidArgument("estimate_YL_variance needs n_outer >= 4");
  detail::check_grid(L, n_grid);
  const double dx = L / static_cast<double>(n_grid);
  const double logL = std::log(L);
  const std::uint64_t tag_b = mix64(tag_of("yl/B") ^ bits(L));
  const std::uint64_t tag_w = mix64(tag_of("yl/W") ^ bits(L));
  std::vector<double> ybar(n_outer);
  std::vector<double> within(n_outer);
  std::vector<std::uint64_t> violations(n_outer, 0);
  for_each_chunk(n_outer, 1, exec, [&](std::uint64_t b, std::uint64_t e, std::uint64_t) {
    std::vector<double> B(n_grid + 1);
    std::vector<double> W(n_grid + 1);
    for (std::uint64_t i = b; i < e; ++i) {
      RandomStream rb(seed, tag_b, i);
      fill_bridge(B, L, rb);
      Moments m;
      for (std::uint64_t k = 0; k < n_inner; ++k) {
        RandomStream rw(seed, mix64(tag_w ^ i), k);
        fill_bridge(W, L, rw);
        double lo = B[0] + W[0];
        double hi = lo;
        for (std::size_t j = 0; j <= n_grid; ++j) {
          W[j] += B[j];
          lo = std::min(lo, W[j]);
          hi = std::max(hi, W[j]);
        }
        const double y = log_exp_integral(W, dx);
        const double centred = y - logL;
        const double slack = 1e-12 * (1.0 + std::abs(y));
        if (centred < lo - slack || centred > hi + slack) ++violations[i];
        m.add(y);
      }
      ybar[i] = m.mean;
      within[i] = m.variance();
    }
  });
  YLEstimate est;
  est.L = L;
  est.n_outer = n_outer;
  est.n_inner = n_inner;
  Moments mo;
  double within_mean = 0.0;
  for (std::uint64_t i = 0; i < n_outer; ++i) {
    mo.add(ybar[i]);
    within_mean += within[i];
    est.sandwich_violations += violations[i];
  }
  within_mean /= static_cast<double>(n_outer);
  est.sandwich_checked = n_outer * n_inner;
  est.mean = mo.mean;
  est.mean_std_error = mo.std_error();
  const auto v = jackknife_variance(ybar);
  est.variance = v.variance - within_mean / static_cast<double>(n_inner);
  est.variance_std_error = v.std_error;
  return est;
}

IVarianceEstimate estimate_I_variance(double t, double L, std::uint64_t n_f, std::uint64_t n_outer, std::size_t n_x,
                                      double dt, std::uint64_t seed, const ResolutionPolicy& policy) {
  if (!(t > 0.0)) throw InvalidArgument("estimate_I_variance needs t > 0");
  if (n_f < 2 || n_outer < 4) throw InvalidArgument("estimate_I_variance needs n_f >= 2 and n_outer >= 4");
  const auto steps = static_cast<std::uint64_t>(std::llround(t / dt));
  if (steps == 0 || std::abs(static_cast<double>(steps) * dt - t) > 1e-9 * t) {
    throw InvalidArgument("estimate_I_variance: t must be a multiple of dt");
  }
  const double updates = static_cast<double>(n_outer) * static_cast<double>(n_x) * static_cast<double>(steps);
  if (updates > policy.max_cell_updates) {
    throw ResourceGuard("i-variance needs " + std::to_string(updates) + " cell updates, over the budget of " +
                        std::to_string(policy.max_cell_updates));
  }
  const double dx = L / static_cast<double>(n_x);
  const std::uint64_t run_seed = child_seed(seed, tag_of("she/i-variance"), mix64(bits(t) ^ mix64(bits(L))));
  const std::uint64_t tag_f = tag_of("ivar/f");
  std::vector<double> D(n_outer);
  std::vector<double> within(n_outer);
  for_each_chunk(n_outer, 4, policy.exec, [&](std::uint64_t b, std::uint64_t e, std::uint64_t) {
    SheSolver solver(L, n_x, dt);
    std::vector<double> fs(n_f * n_x);
    std::vector<double> x0(n_f);
    for (std::uint64_t i = b; i < e; ++i) {
      RandomStream init(run_seed, kInitTag, i);
      std::vector<double> u = stationary_bridge_field(L, n_x, init);
      for (std::uint64_t k = 0; k < n_f; ++k) {
        RandomStream rf(run_seed, mix64(tag_f ^ i), k);
        const auto f = stationary_bridge_field(L, n_x, rf);
        std::copy(f.begin(), f.end(), fs.begin() + static_cast<std::ptrdiff_t>(k * n_x));
        x0[k] = log_pair_integral(u, f, dx);
      }
      RandomStream noise(run_seed, kNoiseTag, i);
      solver.advance(u, steps, &noise);
      Moments m;
      for (std::uint64_t k = 0; k < n_f; ++k) {
        const std::span<const double> f(fs.data() + k * n_x, n_x);
        m.add(log_pair_integral(u, f, dx) - x0[k]);
      }
      D[i] = m.mean;
      within[i] = m.variance();
    }
  });
  IVarianceEstimate est;
  est.t = t;
  est.L = L;
  est.n_f = n_f;
  est.n_outer = n_outer;
  est.n_x = n_x;
  est.dt = dt;
  const auto v = jackknife_variance(D);
  double w = 0.0;
  for (double s : within) w += s;
  w /= static_cast<double>(n_outer);
  est.raw_variance = v.variance;
  est.inner_correction = w / static_cast<double>(n_f);
  est.variance = v.variance - est.inner_correction;
  est.std_error = v.std_error;
  return est;
}

std::vector<double> von_mises_density(double L, std::size_t n_x, double centre, double kappa) {
  std::vector<double> f(n_x);
  const double dx = L / static_cast<double>(n_x);
  double z = 0.0;
  for (std::size_t i = 0; i < n_x; ++i) {
    f[i] = std::exp(kappa * std::cos(2.0 * std::numbers::pi * (dx * static_cast<double>(i) - centre) / L));
    z += f[i] * dx;
  }
  for (auto& v : f) v /= z;
  return f;
}

TimeReversalReport check_time_reversal(double t, double L, std::size_t n_x, double dt, std::uint64_t n_replicas,
                                       std::uint64_t seed, bool same_densities, Exec exec) {
  if (n_replicas < 4) throw InvalidArgument("check_time_reversal needs at least 4 replicas");
  const auto steps = static_cast<std::uint64_t>(std::llround(t / dt));
  if (steps == 0 || std::abs(static_cast<double>(steps) * dt - t) > 1e-9 * t) {
    throw InvalidArgument("check_time_reversal: t must be a multiple of dt");
  }
  const double dx = L / static_cast<double>(n_x);
  const auto f = von_mises_density(L, n_x, 0.25 * L, 2.0);
  const auto g = same_densities ? f : von_mises_density(L, n_x, 0.6 * L, 0.7);
  const std::uint64_t tag_fwd = tag_of("reversal/forward");
  const std::uint64_t tag_swp = tag_of("reversal/swapped");
  std::vector<double> fwd(n_replicas);
  std::vector<double> swp(n_replicas);
  for_each_chunk(n_replicas, 4, exec, [&](std::uint64_t b, std::uint64_t e, std::uint64_t) {
    SheSolver solver(L, n_x, dt);
    for (std::uint64_t i = b; i < e; ++i) {
      std::vector<double> u = g;
      RandomStream r1(seed, tag_fwd, i);
      solver.advance(u, steps, &r1);
      fwd[i] = log_pair_integral(u, f, dx);
      u = f;
      RandomStream r2(seed, tag_swp, i);
      solver.advance(u, steps, &r2);
      swp[i] = log_pair_integral(u, g, dx);
    }
  });
  Moments mf;
  Moments ms;
  for (std::uint64_t i = 0; i < n_replicas; ++i) {
    mf.add(fwd[i]);
    ms.add(swp[i]);
  }
  const auto vf = jackknife_variance(fwd);
  const auto vs = jackknife_variance(swp);
  TimeReversalReport rep;
  rep.n_replicas = n_replicas;
  rep.mean_forward = mf.mean;
  rep.mean_swapped = ms.mean;
  rep.mean_std_error = std::hypot(mf.std_error(), ms.std_error());
  rep.var_forward = vf.variance;
  rep.var_swapped = vs.variance;
  rep.var_std_error = std::hypot(vf.std_error, vs.std_error);
  rep.mean_z = rep.mean_std_error > 0.0 ? (rep.mean_forward - rep.mean_swapped) / rep.mean_std_error : 0.0;
  rep.var_z = rep.var_std_error > 0.0 ? (rep.var_forward - rep.var_swapped) / rep.var_std_error : 0.0;
  return rep;
}

namespace {

template <class T>
void put_le(std::ostream& out, T v) {
  auto u = std::bit_cast<std::uint64_t>(v);
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((u >> (8 * i)) & 0xffu);
  out.write(b, 8);
}

template <class T>
T get_le(std::istream& in) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  if (!in) throw InvalidArgument("read_field: truncated input");
  std::uint64_t u = 0;
  for (int i = 0; i < 8; ++i) u |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return std::bit_cast<T>(u);
}

}  // namespace

void write_field(std::ostream& out, const SheField& field) {
  put_le<std::uint64_t>(out, field.n_x);
  put_le(out, field.L);
  put_le(out, field.t);
  put_le(out, field.dt);
  for (double v : field.values) put_le(out, v);
}

SheField read_field(std::istream& in) {
  SheField f;
  f.n_x = get_le<std::uint64_t>(in);
  f.L = get_le<double>(in);
  f.t = get_le<double>(in);
  f.dt = get_le<double>(in);
  if (f.n_x == 0 || f.n_x > (1u << 28)) throw InvalidArgument("read_field: implausible n_x");
  f.values.resize(f.n_x);
  for (auto& v : f.values) v = get_le<double>(in);
  return f;
}

}  // namespace kpzlab
