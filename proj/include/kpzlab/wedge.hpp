#pragma once

#include <cstdint>
#include <limits>
#include <numbers>
#include <vector>

#include "kpzlab/bridges.hpp"
#include "kpzlab/stats.hpp"

namespace kpzlab {

/// Half opening angle of the wedge N = {r e^{i theta} : |theta| <= pi/3}.
inline constexpr double kWedgeHalfAngle = std::numbers::pi / 3.0;

/// A point of N in polar form.
struct WedgePoint {
  double r = 0.0;
  double theta = 0.0;

  /// Throws InvalidArgument when v is not in N (angle tolerance 1e-12).
  static WedgePoint from_cartesian(Vec2 v);
  Vec2 cartesian() const noexcept;
};

/// Killed-kernel query p_x^{N_a}(u1, u2) with N_a = N + a h.
/// a = +inf means N_a is the whole plane (free kernel).
struct KernelQuery {
  double x = 1.0;
  Vec2 u1;
  Vec2 u2;
  double a = 0.0;
};

struct KernelValue {
  double value = 0.0;
  double tail_bound = 0.0;  // majorant of the dropped terms
  int terms = 0;
};

inline constexpr int kKernelMaxTerms = 500;
inline constexpr double kKernelRelTol = 1e-12;

/// (2 pi x)^{-1} exp(-|u1 - u2|^2 / 2x).
double free_kernel(double x, Vec2 u1, Vec2 u2);

/// 2 / (opening angle): the constant in front of the wedge eigenfunction
/// expansion. Without it the series fails Chapman-Kolmogorov by a factor
/// pi/3 and survival tends to pi/3 instead of 1 far from the edges.
inline constexpr double kWedgeKernelNorm = 3.0 / std::numbers::pi;

/// Bessel sine series
///   (3 / (pi x)) sum_j e^{-q} I_{3j/2}(q) e^{-(r1-r2)^2/2x} sin(3j/2 (th1 + pi/3)) sin(3j/2 (th2 + pi/3)),
/// q = r1 r2 / x, truncated once the majorant (q/2)^nu / Gamma(nu + 1) of the
/// remaining scaled Bessel factors sums below 1e-12 of the partial sum (or
/// 1e-15 of the sum of term magnitudes when the sines nearly cancel).
/// Throws ConvergenceFailure past kKernelMaxTerms, OutOfRange when q > 700.
KernelValue wedge_kernel_certified(const KernelQuery& query);
double wedge_kernel(const KernelQuery& query);

/// Same series with the truncation index fixed (for certificate checks).
double wedge_kernel_terms(double x, WedgePoint p1, WedgePoint p2, int terms);

/// Probability that a planar bridge of length L pinned at 0 stays in N_a:
/// 2 pi L p_L^N(-a h, -a h). a = +inf gives 1.
double survival_probability(double a, double L);

/// p_J^{N_q}(w, 0) / p_J(w, 0): probability that a bridge from w to 0 over
/// time J stays in N_q. w on the boundary gives 0; w outside throws.
double bridge_stay_probability(double q, double J, Vec2 w);

/// int_N p_s^N(u, w) p_t^N(w, v) dw by polar Gauss-Legendre quadrature.
double wedge_two_step(double s, double t, Vec2 u, Vec2 v);

/// int_N p_x^N(u, w) dw, the survival mass from u.
double wedge_mass(double x, Vec2 u);

/// Paired Monte Carlo estimate of a stay probability on two grids: each path
/// is generated on the fine grid, the coarse grid is every other point.
/// Discrete monitoring over-survives, so coarse >= fine pathwise.
struct StayEstimate {
  double fine = 0.0;
  double fine_std_error = 0.0;
  double coarse = 0.0;
  double coarse_std_error = 0.0;
  /// (coarse - fine) / (sqrt 2 - 1): extrapolated residual bias of `fine`
  /// under the sqrt(spacing) law of discrete crossing.
  double margin = 0.0;
  std::uint64_t n_paths = 0;
  std::size_t n_grid_fine = 0;
};

struct WedgeMcOptions {
  /// Coarse grid intervals per unit length; the fine grid doubles it.
  double grid_per_unit = 64.0;
  Exec exec = Exec::parallel;
};

StayEstimate survival_probability_mc(double a, double L, std::uint64_t n_paths, std::uint64_t seed,
                                     const WedgeMcOptions& options = {});
StayEstimate bridge_stay_probability_mc(double q, double J, Vec2 w, std::uint64_t n_paths, std::uint64_t seed,
                                        const WedgeMcOptions& options = {});

/// Rejection estimate conditioned on E_{1,0,L} = {max grid omega(V) <= 1}.
struct ConditionalEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  double acceptance_rate = 0.0;
  std::uint64_t n_accepted = 0;
  std::uint64_t n_samples = 0;
};

inline constexpr std::uint64_t kMinAccepted = 100;

struct RejectionOptions {
  double grid_per_unit = 32.0;
  Exec exec = Exec::parallel;
};

/// E[|V(x)| | E_{1,0,L}] with x snapped to the nearest grid point.
/// Throws InsufficientAcceptance below kMinAccepted kept paths.
ConditionalEstimate conditional_abs_moment(double x, double L, std::uint64_t n_samples, std::uint64_t seed,
                                           const RejectionOptions& options = {});

/// Quintic smoothstep cutoff: 0 on [-1, 1], 1 outside [-2, 2], even.
double smooth_cutoff(double x) noexcept;

/// q_{gamma,L}(y) = gamma int_0^y chi_L(x) sgn(L/2 - x) [x ^ (L - x)]^{gamma - 1} dx
/// with chi_L(x) = chi(x) chi(x - L/2) chi(x - L), on the grid y_i = i L / n.
std::vector<double> barrier_profile(double L, double gamma, std::size_t n);

/// P[omega(V(x)) <= 1 - q_{gamma,L}(x) on the grid | E_{1,0,L}].
ConditionalEstimate entropic_repulsion(double L, double gamma, std::uint64_t n_samples, std::uint64_t seed,
                                       const RejectionOptions& options = {});

}  // namespace kpzlab
