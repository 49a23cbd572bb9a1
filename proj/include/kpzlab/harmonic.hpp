#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "kpzlab/bridges.hpp"
#include "kpzlab/stats.hpp"

namespace kpzlab {

/// (2/pi) arctan((q|h| / xi)^{3/2}): P[|Y(kappa) - q h| >= xi] for planar BM
/// from 0 stopped on the boundary of N_q.
double arctan_tail(double q, double xi);
/// 1 - arctan_tail.
double arctan_cdf(double q, double xi);

/// (z - q h)^{3/2} on the principal branch, via polar form (r^{3/2}, 3 theta / 2).
/// Maps N_q onto the closed right half plane; throws outside N_q.
Vec2 conformal_map(Vec2 z, double q);

/// Time change between the bridge clock x in [0, L) and the BM clock y >= 0.
double bm_time(double x, double L) noexcept;      // y = L x / (L - x)
double bridge_time(double y, double L) noexcept;  // x = L y / (L + y)

/// First grid crossing of the boundary of N_q by V(x) / (1 - x/L).
struct HitSample {
  double tau = 0.0;    // bridge time of the hit, linearly refined
  double kappa = 0.0;  // bm_time(tau)
  Vec2 location;       // V(tau) / (1 - tau/L), on the boundary of N_q
  Vec2 raw;            // V(tau)
  /// |location - q h|, the quantity with the arctan law.
  double apex_distance(double q) const noexcept;
};

/// Hits stop being searched at x = L (1 - kNoHitEpsilon).
inline constexpr double kNoHitEpsilon = 1e-3;

/// One hit from stream 0 of `seed`; throws NoHit when the discretized path
/// never crosses before L (1 - 1e-3).
HitSample simulate_first_hit(double L, double q, std::size_t n_grid, std::uint64_t seed);

/// Many hits, each path observed on two grids: the fine grid with 2 n_grid
/// intervals and the coarse grid made of its even points.
struct HitBatch {
  std::vector<HitSample> fine;
  std::vector<HitSample> coarse;
  std::uint64_t no_hit_fine = 0;
  std::uint64_t no_hit_coarse = 0;
  std::size_t n_grid_fine = 0;
};

HitBatch simulate_hits(double L, double q, std::size_t n_grid, std::uint64_t n_samples, std::uint64_t seed,
                       Exec exec = Exec::parallel);

/// Apex distances |location - q h| of a set of hits.
std::vector<double> apex_distances(const std::vector<HitSample>& hits, double q);

}  // namespace kpzlab
