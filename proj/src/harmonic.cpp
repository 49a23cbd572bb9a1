#include "kpzlab/harmonic.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <string>

#include "kpzlab/errors.hpp"
#include "kpzlab/rng.hpp"

namespace kpzlab {

namespace {

void check_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) throw InvalidArgument(std::string(what) + " must be positive and finite");
}

struct Tracker {
  double L;
  double q;
  double limit;  // last bridge time searched
  double prev_x = 0.0;
  Vec2 prev_v{};
  double prev_f;  // omega(Y) - q at the previous observation
  std::optional<HitSample> hit;

  Tracker(double L_, double q_) : L(L_), q(q_), limit(L_ * (1.0 - kNoHitEpsilon)), prev_f(-q_) {}

  // Feeds the observation V(x); returns true once the crossing is found.
  bool observe(double x, Vec2 v) {
    if (hit) return true;
    if (x > limit) return false;
    const double scale = 1.0 / (1.0 - x / L);
    const double f = omega(scale * v) - q;
    if (f >= 0.0) {
      // Linear refinement of omega(Y) between the two grid points.
      const double s = prev_f / (prev_f - f);
      const double prev_scale = 1.0 / (1.0 - prev_x / L);
      HitSample h;
      h.tau = prev_x + s * (x - prev_x);
      h.kappa = bm_time(h.tau, L);
      h.location = prev_scale * prev_v + s * (scale * v - prev_scale * prev_v);
      h.raw = prev_v + s * (v - prev_v);
      hit = h;
      return true;
    }
    prev_x = x;
    prev_v = v;
    prev_f = f;
    return false;
  }
};

std::uint64_t hit_tag(double L, double q) {
  return mix64(mix64(tag_of("harmonic/hit") ^ std::bit_cast<std::uint64_t>(L)) ^ std::bit_cast<std::uint64_t>(q));
}

}  // namespace

double arctan_tail(double q, double xi) {
  check_positive(q, "q");
  if (!(xi > 0.0)) throw InvalidArgument("xi must be positive");
  if (std::isinf(xi)) return 0.0;
  return 2.0 / std::numbers::pi * std::atan(std::pow(q * wedge_geometry::h_norm / xi, 1.5));
}

double arctan_cdf(double q, double xi) {
  if (xi <= 0.0) return 0.0;
  return 1.0 - arctan_tail(q, xi);
}

Vec2 conformal_map(Vec2 z, double q) {
  const Vec2 w = z - q * wedge_geometry::h;
  const double r = w.norm();
  if (r == 0.0) return {};
  const double theta = std::atan2(w.y, w.x);
  if (std::abs(theta) > std::numbers::pi / 3.0 + 1e-12) {
    throw InvalidArgument("conformal_map: z - q h lies outside the wedge N");
  }
  const double rr = std::pow(r, 1.5);
  return {rr * std::cos(1.5 * theta), rr * std::sin(1.5 * theta)};
}

double bm_time(double x, double L) noexcept { return L * x / (L - x); }
double bridge_time(double y, double L) noexcept { return L * y / (L + y); }

double HitSample::apex_distance(double q) const noexcept { return (location - q * wedge_geometry::h).norm(); }

HitSample simulate_first_hit(double L, double q, std::size_t n_grid, std::uint64_t seed) {
  check_positive(L, "L");
  check_positive(q, "q");
  RandomStream rng(seed, hit_tag(L, q), 0);
  PlanarBridgeWalker walk(L, n_grid, {}, {});
  Tracker t(L, q);
  while (!walk.done()) {
    const Vec2 v = walk.step(rng);
    if (t.observe(walk.time(), v)) return *t.hit;
    if (walk.time() > t.limit) break;
  }
  throw NoHit("simulate_first_hit: no boundary crossing before L (1 - 1e-3)");
}

HitBatch simulate_hits(double L, double q, std::size_t n_grid, std::uint64_t n_samples, std::uint64_t seed,
                       Exec exec) {
  check_positive(L, "L");
  check_positive(q, "q");
  detail::check_grid(L, n_grid);
  const std::size_t n_fine = 2 * n_grid;
  const std::uint64_t tag = hit_tag(L, q) ^ tag_of("paired");
  std::vector<std::optional<HitSample>> fine(n_samples);
  std::vector<std::optional<HitSample>> coarse(n_samples);
  for_each_chunk(n_samples, kDefaultChunk, exec, [&](std::uint64_t b, std::uint64_t e, std::uint64_t) {
    for (std::uint64_t i = b; i < e; ++i) {
      RandomStream rng(seed, tag, i);
      PlanarBridgeWalker walk(L, n_fine, {}, {});
      Tracker tf(L, q);
      Tracker tc(L, q);
      while (!walk.done()) {
        const Vec2 v = walk.step(rng);
        const double x = walk.time();
        tf.observe(x, v);
        if (walk.index() % 2 == 0 && tc.observe(x, v)) break;
        if (x > tf.limit) break;
      }
      fine[i] = tf.hit;
      coarse[i] = tc.hit;
    }
  });
  HitBatch batch;
  batch.n_grid_fine = n_fine;
  for (std::uint64_t i = 0; i < n_samples; ++i) {
    if (fine[i]) {
      batch.fine.push_back(*fine[i]);
    } else {
      ++batch.no_hit_fine;
    }
    if (coarse[i]) {
      batch.coarse.push_back(*coarse[i]);
    } else {
      ++batch.no_hit_coarse;
    }
  }
  return batch;
}

std::vector<double> apex_distances(const std::vector<HitSample>& hits, double q) {
  std::vector<double> out;
  out.reserve(hits.size());
  for (const auto& h : hits) out.push_back(h.apex_distance(q));
  return out;
}

}  // namespace kpzlab
