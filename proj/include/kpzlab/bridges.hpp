#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "kpzlab/rng.hpp"

namespace kpzlab {

/// A point of the plane.
struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend Vec2 operator+(Vec2 a, Vec2 b) noexcept { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) noexcept { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(double s, Vec2 a) noexcept { return {s * a.x, s * a.y}; }
  friend bool operator==(Vec2 a, Vec2 b) noexcept = default;
  double dot(Vec2 o) const noexcept { return x * o.x + y * o.y; }
  double norm() const noexcept { return std::hypot(x, y); }
};

namespace wedge_geometry {
inline const double kSqrt2 = std::sqrt(2.0);
inline const double kSqrt6 = std::sqrt(6.0);
/// Normals of the two wedge edges: v_k = -sqrt(2) exp((-1)^k i pi/6).
inline const Vec2 v1{-kSqrt6 / 2.0, kSqrt2 / 2.0};
inline const Vec2 v2{-kSqrt6 / 2.0, -kSqrt2 / 2.0};
/// Offset between consecutive translated wedges; v_k . h = 1.
inline const Vec2 h{-kSqrt6 / 3.0, 0.0};
inline const double h_norm = kSqrt6 / 3.0;
}  // namespace wedge_geometry

/// max(v1 . v, v2 . v). Satisfies omega(v + a h) = omega(v) + a.
inline double omega(Vec2 v) noexcept {
  return std::max(wedge_geometry::v1.dot(v), wedge_geometry::v2.dot(v));
}

/// Brownian bridge sample on the uniform grid {i L / n : i = 0..n}.
class BridgePath {
 public:
  BridgePath(double length, std::vector<double> values);

  double length() const noexcept { return length_; }
  std::size_t intervals() const noexcept { return values_.size() - 1; }
  double spacing() const noexcept { return length_ / static_cast<double>(intervals()); }
  double abscissa(std::size_t i) const noexcept { return spacing() * static_cast<double>(i); }
  std::span<const double> values() const noexcept { return values_; }
  double operator[](std::size_t i) const noexcept { return values_[i]; }

 private:
  double length_;
  std::vector<double> values_;
};

/// Two path components on a shared grid.
class PlanarPath {
 public:
  PlanarPath(double length, std::vector<double> first, std::vector<double> second);

  double length() const noexcept { return length_; }
  std::size_t intervals() const noexcept { return first_.size() - 1; }
  double spacing() const noexcept { return length_ / static_cast<double>(intervals()); }
  std::span<const double> first() const noexcept { return first_; }
  std::span<const double> second() const noexcept { return second_; }
  Vec2 at(std::size_t i) const noexcept { return {first_[i], second_[i]}; }

  /// The projection v . V on the grid.
  BridgePath project(Vec2 v) const;
  /// (v1 . V, v2 . V): in law the correlated pair at r = 1/2.
  std::pair<BridgePath, BridgePath> correlated_pair() const;
  double max_omega() const noexcept;

 private:
  double length_;
  std::vector<double> first_;
  std::vector<double> second_;
};

/// Scalar correlation r in [0, 1] between the two bridges of a pair.
class CorrelationSpec {
 public:
  explicit CorrelationSpec(double r);
  double r() const noexcept { return r_; }

 private:
  double r_;
};

// Grid-level sampling primitives. Each writes n + 1 values (n intervals).

/// Exact bridge: cumulative Gaussian increments minus the linear endpoint
/// correction. `negate` flips every increment (antithetic partner).
void fill_bridge(std::span<double> out, double length, RandomStream& rng, bool negate = false);

/// U1, U2 with marginal variance 2 x (L - x) / L and correlation r:
/// U_k = sqrt(2 (1 - r)) B_k + sqrt(2 r) B_3. `scratch` holds n + 1 values.
void fill_correlated_pair(std::span<double> u1, std::span<double> u2, std::span<double> scratch,
                          double length, double r, RandomStream& rng, bool negate = false);

/// log of the trapezoidal approximation of int_0^L exp(values) dx, in
/// log-sum-exp form.
double log_exp_integral(std::span<const double> values, double spacing) noexcept;
double log_exp_integral(const BridgePath& path) noexcept;

// Public samplers. `seed` is the root seed; the object draws from stream 0.

BridgePath sample_bridge(double length, std::size_t n, std::uint64_t seed);
std::pair<BridgePath, BridgePath> sample_correlated_pair(double length, std::size_t n,
                                                         CorrelationSpec spec, std::uint64_t seed);
PlanarPath sample_planar_bridge(double length, std::size_t n, std::uint64_t seed);

/// Planar Brownian bridge generated one grid step at a time from the exact
/// conditional law, so rejection loops can stop at the first exit.
class PlanarBridgeWalker {
 public:
  PlanarBridgeWalker(double length, std::size_t n, Vec2 start, Vec2 end);

  Vec2 position() const noexcept { return pos_; }
  std::size_t index() const noexcept { return index_; }
  double time() const noexcept { return spacing_ * static_cast<double>(index_); }
  bool done() const noexcept { return index_ == n_; }
  double spacing() const noexcept { return spacing_; }

  /// Advances one grid step; precondition !done().
  Vec2 step(RandomStream& rng) noexcept;

 private:
  std::size_t n_;
  double spacing_;
  Vec2 end_;
  Vec2 pos_;
  std::size_t index_ = 0;
};

namespace detail {
void check_grid(double length, std::size_t n);
}

}  // namespace kpzlab
