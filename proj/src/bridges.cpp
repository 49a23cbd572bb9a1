#include "kpzlab/bridges.hpp"

#include <algorithm>
#include <string>

#include "kpzlab/errors.hpp"

namespace kpzlab {

namespace {
constexpr std::uint64_t kBridgeTag = tag_of("bridges/sample");
}

void detail::check_grid(double length, std::size_t n) {
  if (!(length > 0.0) || !std::isfinite(length)) {
    throw InvalidArgument("bridge length must be positive, got " + std::to_string(length));
  }
  if (n < 2) throw InvalidArgument("bridge grid needs n >= 2 intervals, got " + std::to_string(n));
}

BridgePath::BridgePath(double length, std::vector<double> values) : length_(length), values_(std::move(values)) {
  detail::check_grid(length_, values_.empty() ? 0 : values_.size() - 1);
}

PlanarPath::PlanarPath(double length, std::vector<double> first, std::vector<double> second)
    : length_(length), first_(std::move(first)), second_(std::move(second)) {
  detail::check_grid(length_, first_.empty() ? 0 : first_.size() - 1);
  if (first_.size() != second_.size()) throw InvalidArgument("planar path components differ in length");
}

BridgePath PlanarPath::project(Vec2 v) const {
  std::vector<double> out(first_.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = v.x * first_[i] + v.y * second_[i];
  return BridgePath(length_, std::move(out));
}

std::pair<BridgePath, BridgePath> PlanarPath::correlated_pair() const {
  return {project(wedge_geometry::v1), project(wedge_geometry::v2)};
}

double PlanarPath::max_omega() const noexcept {
  double m = omega(at(0));
  for (std::size_t i = 1; i < first_.size(); ++i) m = std::max(m, omega(at(i)));
  return m;
}

CorrelationSpec::CorrelationSpec(double r) : r_(r) {
  if (!(r >= 0.0 && r <= 1.0)) {
    throw InvalidArgument("correlation r must lie in [0, 1], got " + std::to_string(r));
  }
}

void fill_bridge(std::span<double> out, double length, RandomStream& rng, bool negate) {
  const std::size_t n = out.size() - 1;
  const double step = std::sqrt(length / static_cast<double>(n)) * (negate ? -1.0 : 1.0);
  out[0] = 0.0;
  double w = 0.0;
  for (std::size_t i = 1; i <= n; ++i) {
    w += step * rng.normal();
    out[i] = w;
  }
  const double end = out[n];
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t i = 1; i < n; ++i) out[i] -= end * (static_cast<double>(i) * inv_n);
  out[n] = 0.0;
}

void fill_correlated_pair(std::span<double> u1, std::span<double> u2, std::span<double> scratch,
                          double length, double r, RandomStream& rng, bool negate) {
  const double own = std::sqrt(2.0 * (1.0 - r));
  const double shared = std::sqrt(2.0 * r);
  fill_bridge(scratch, length, rng, negate);  // B3
  fill_bridge(u1, length, rng, negate);       // B1
  fill_bridge(u2, length, rng, negate);       // B2
  for (std::size_t i = 0; i < u1.size(); ++i) {
    u1[i] = own * u1[i] + shared * scratch[i];
    u2[i] = own * u2[i] + shared * scratch[i];
  }
}

double log_exp_integral(std::span<const double> values, double spacing) noexcept {
  const std::size_t n = values.size() - 1;
  const double m = *std::max_element(values.begin(), values.end());
  double s = 0.5 * (std::exp(values[0] - m) + std::exp(values[n] - m));
  for (std::size_t i = 1; i < n; ++i) s += std::exp(values[i] - m);
  return m + std::log(s * spacing);
}

double log_exp_integral(const BridgePath& path) noexcept { return log_exp_integral(path.values(), path.spacing()); }

BridgePath sample_bridge(double length, std::size_t n, std::uint64_t seed) {
  detail::check_grid(length, n);
  RandomStream rng(seed, kBridgeTag, 0);
  std::vector<double> v(n + 1);
  fill_bridge(v, length, rng);
  return BridgePath(length, std::move(v));
}

std::pair<BridgePath, BridgePath> sample_correlated_pair(double length, std::size_t n, CorrelationSpec spec,
                                                         std::uint64_t seed) {
  detail::check_grid(length, n);
  RandomStream rng(seed, kBridgeTag, 0);
  std::vector<double> u1(n + 1), u2(n + 1), b3(n + 1);
  fill_correlated_pair(u1, u2, b3, length, spec.r(), rng);
  return {BridgePath(length, std::move(u1)), BridgePath(length, std::move(u2))};
}

PlanarPath sample_planar_bridge(double length, std::size_t n, std::uint64_t seed) {
  detail::check_grid(length, n);
  RandomStream rng(seed, kBridgeTag, 0);
  std::vector<double> a(n + 1), b(n + 1);
  fill_bridge(a, length, rng);
  fill_bridge(b, length, rng);
  return PlanarPath(length, std::move(a), std::move(b));
}

PlanarBridgeWalker::PlanarBridgeWalker(double length, std::size_t n, Vec2 start, Vec2 end)
    : n_(n), spacing_(length / static_cast<double>(n)), end_(end), pos_(start) {
  detail::check_grid(length, n);
}

Vec2 PlanarBridgeWalker::step(RandomStream& rng) noexcept {
  // Remaining intervals k: the next point is Gaussian with mean moved 1/k of
  // the way to the target and variance spacing * (k - 1) / k per component.
  const double k = static_cast<double>(n_ - index_);
  const double sd = std::sqrt(spacing_ * (k - 1.0) / k);
  const double z1 = rng.normal();
  const double z2 = rng.normal();
  pos_.x += (end_.x - pos_.x) / k + sd * z1;
  pos_.y += (end_.y - pos_.y) / k + sd * z2;
  ++index_;
  if (index_ == n_) pos_ = end_;
  return pos_;
}

}  // namespace kpzlab
