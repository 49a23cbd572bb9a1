#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "kpzlab/rng.hpp"
#include "kpzlab/stats.hpp"

namespace kpzlab {

/// Periodic lattice field U on the torus [0, L) with n_x cells.
struct SheField {
  double L = 0.0;
  std::size_t n_x = 0;
  double dt = 0.0;
  double t = 0.0;
  std::vector<double> values;

  double dx() const noexcept { return L / static_cast<double>(n_x); }
};

/// rho = U / (sum U dx); sums (times dx) to one.
struct EndpointDensity {
  double dx = 0.0;
  std::vector<double> values;
};

EndpointDensity endpoint_density(const SheField& field);

/// Strang-split lattice SHE  dU = (1/2) Lap_dx U dt + U dW / sqrt(dx):
/// heat half step, per-cell factor exp(sqrt(dt/dx) xi - dt/(2 dx)), heat half
/// step. The heat flow is the exact semigroup of the nearest-neighbour
/// Laplacian, applied spectrally with FFTW; it is positive and conserves
/// mass, so the scheme keeps U > 0.
class SheSolver {
 public:
  /// Throws InvalidArgument unless dt <= dx^2 / 4 and n_x >= 4.
  SheSolver(double L, std::size_t n_x, double dt);
  ~SheSolver();
  SheSolver(SheSolver&&) noexcept;
  SheSolver& operator=(SheSolver&&) noexcept;

  double L() const noexcept;
  std::size_t n_x() const noexcept;
  double dt() const noexcept;

  /// Exact lattice heat flow for time s.
  void heat(std::span<double> u, double s);

  /// `steps` full Strang steps. rng == nullptr runs the noiseless scheme.
  void advance(std::span<double> u, std::uint64_t steps, RandomStream* rng);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Lattice heat flow by the image sum of the continuous-time random-walk
/// kernel e^{-a} I_j(a), a = s / dx^2; the independent reference for
/// SheSolver::heat.
std::vector<double> lattice_heat_reference(std::span<const double> u, double L, double s);

/// e^{B} on the grid, B a standard bridge sampled with n_x intervals.
std::vector<double> stationary_bridge_field(double L, std::size_t n_x, RandomStream& rng);

enum class InitialKind { field, stationary_bridge };

struct SheInitial {
  InitialKind kind = InitialKind::stationary_bridge;
  std::vector<double> field;  // used when kind == field
};

/// One solve; returns the field at each checkpoint (snapped to the step grid).
/// Noise and initial data come from stream `replica` of `seed`.
std::vector<SheField> solve_she(double L, std::size_t n_x, double dt, std::span<const double> checkpoints,
                                const SheInitial& initial, std::uint64_t seed, std::uint64_t replica = 0,
                                bool noise = true);

/// Grid and budget choices for SHE experiments.
struct ResolutionPolicy {
  double cells_per_unit = 16.0;
  double dt_factor = 0.25;               // dt = dt_factor * dx^2
  double max_cell_updates = 4.0e11;      // refuse configurations beyond this
  Exec exec = Exec::parallel;
};

struct VariancePoint {
  double t = 0.0;
  double L = 0.0;
  double alpha = 0.0;
  double lambda = 0.0;
  double var_estimate = 0.0;
  double std_error = 0.0;
  std::uint64_t n_replicas = 0;
  std::size_t n_x = 0;
  double dt = 0.0;
};

/// Sample variance of h(t, 0) = log U(t, 0) over independent replicas with
/// L = lambda t^alpha, stationary-bridge initial data; jackknife std_error.
std::vector<VariancePoint> estimate_height_variance(double alpha, double lambda, std::span<const double> t_list,
                                                    std::uint64_t n_replicas, const ResolutionPolicy& policy,
                                                    std::uint64_t seed);

/// Variance of h(t, .) - h(t, 0) at every grid point, for the stationarity check.
struct IncrementProfile {
  std::vector<double> x;
  std::vector<double> variance;
  std::vector<double> std_error;
};
IncrementProfile increment_variance_profile(double L, std::size_t n_x, double dt, double t,
                                            std::uint64_t n_replicas, std::uint64_t seed, Exec exec = Exec::parallel);

/// Y_L = E_W log int e^{B + W}: outer over B, inner average over W.
struct YLEstimate {
  double L = 0.0;
  double mean = 0.0;
  double mean_std_error = 0.0;
  double variance = 0.0;  // corrected for the finite inner average
  double variance_std_error = 0.0;
  std::uint64_t n_outer = 0;
  std::uint64_t n_inner = 0;
  std::uint64_t sandwich_violations = 0;  // samples breaking min <= log(int/L) <= max
  std::uint64_t sandwich_checked = 0;
};

YLEstimate estimate_YL_variance(double L, std::uint64_t n_outer, std::uint64_t n_inner, std::size_t n_grid,
                                std::uint64_t seed, Exec exec = Exec::parallel);

/// Var I_L(t) from D = E_f[X_{f,g}(t) - X_{f,g}(0)], X = log int U(t,.;g) f,
/// f = e^W. The t = 0 term removes the g-dependent centering exactly; the
/// finite-n_f inner variance is subtracted.
struct IVarianceEstimate {
  double t = 0.0;
  double L = 0.0;
  double variance = 0.0;
  double std_error = 0.0;
  double raw_variance = 0.0;       // before the inner-variance correction
  double inner_correction = 0.0;   // mean within-replica variance / n_f
  std::uint64_t n_f = 0;
  std::uint64_t n_outer = 0;
  std::size_t n_x = 0;
  double dt = 0.0;
};

IVarianceEstimate estimate_I_variance(double t, double L, std::uint64_t n_f, std::uint64_t n_outer, std::size_t n_x,
                                      double dt, std::uint64_t seed, const ResolutionPolicy& policy = {});

/// Two-sample comparison of log int int Z(t,x;0,y) f(x) g(y) computed forward
/// (start from g, pair with f) and swapped (start from f, pair with g) on
/// independent noise replicas.
struct TimeReversalReport {
  double mean_forward = 0.0;
  double mean_swapped = 0.0;
  double mean_std_error = 0.0;  // combined
  double var_forward = 0.0;
  double var_swapped = 0.0;
  double var_std_error = 0.0;  // combined jackknife
  double mean_z = 0.0;
  double var_z = 0.0;
  std::uint64_t n_replicas = 0;
};

/// Smooth positive density on the torus: exp(kappa cos(2 pi (x - centre) / L)), normalised.
std::vector<double> von_mises_density(double L, std::size_t n_x, double centre, double kappa);

TimeReversalReport check_time_reversal(double t, double L, std::size_t n_x, double dt, std::uint64_t n_replicas,
                                       std::uint64_t seed, bool same_densities = false,
                                       Exec exec = Exec::parallel);

/// Binary checkpoint: header (uint64 n_x, double L, double t, double dt)
/// followed by n_x doubles, all little-endian.
void write_field(std::ostream& out, const SheField& field);
SheField read_field(std::istream& in);

}  // namespace kpzlab
