#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <string_view>

#include <boost/random/normal_distribution.hpp>

namespace kpzlab {

/// SplitMix64 finalizer, used to derive keys from (root seed, tag).
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

/// FNV-1a, so stream tags can be spelled as names.
constexpr std::uint64_t tag_of(std::string_view name) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (char c : name) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ull;
  }
  return h;
}

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
///
/// A stream is identified by a 64-bit key and a 64-bit stream index that
/// occupies the upper half of the 128-bit counter; the lower half counts
/// blocks. Two streams with different (key, index) never overlap, so every
/// sample of a Monte Carlo run can own a stream addressed by its task index
/// and the result does not depend on the order in which tasks execute.
class Philox4x32 {
 public:
  using result_type = std::uint32_t;

  Philox4x32(std::uint64_t key, std::uint64_t stream) noexcept
      : key_{static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32)},
        stream_(stream) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept {
    if (pos_ == 4) {
      refill();
    }
    return buf_[pos_++];
  }

  /// Uniform double in (0, 1), 53 random bits.
  double uniform() noexcept {
    const std::uint64_t hi = (*this)() >> 5;
    const std::uint64_t lo = (*this)() >> 6;
    return (static_cast<double>(hi * 67108864ull + lo) + 0.5) * (1.0 / 9007199254740992.0);
  }

  std::uint64_t blocks_used() const noexcept { return block_; }

 private:
  void refill() noexcept {
    std::uint32_t c0 = static_cast<std::uint32_t>(block_);
    std::uint32_t c1 = static_cast<std::uint32_t>(block_ >> 32);
    std::uint32_t c2 = static_cast<std::uint32_t>(stream_);
    std::uint32_t c3 = static_cast<std::uint32_t>(stream_ >> 32);
    std::uint32_t k0 = key_[0];
    std::uint32_t k1 = key_[1];
    for (int round = 0; round < 10; ++round) {
      const std::uint64_t p0 = std::uint64_t{0xD2511F53u} * c0;
      const std::uint64_t p1 = std::uint64_t{0xCD9E8D57u} * c2;
      const std::uint32_t n0 = static_cast<std::uint32_t>(p1 >> 32) ^ c1 ^ k0;
      const std::uint32_t n2 = static_cast<std::uint32_t>(p0 >> 32) ^ c3 ^ k1;
      c1 = static_cast<std::uint32_t>(p1);
      c3 = static_cast<std::uint32_t>(p0);
      c0 = n0;
      c2 = n2;
      k0 += 0x9E3779B9u;
      k1 += 0xBB67AE85u;
    }
    buf_ = {c0, c1, c2, c3};
    pos_ = 0;
    ++block_;
  }

  std::array<std::uint32_t, 2> key_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buf_{};
  int pos_ = 4;
};

/// xoshiro256++ (Blackman & Vigna). Sequential generator used inside one
/// stream; its state is drawn from the Philox block addressed by the stream.
class Xoshiro256pp {
 public:
  using result_type = std::uint64_t;

  explicit Xoshiro256pp(Philox4x32& seeder) noexcept {
    for (auto& w : s_) {
      const std::uint64_t hi = seeder();
      w = (hi << 32) | seeder();
    }
    if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[0] = 1;
  }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept {
    const std::uint64_t out = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return out;
  }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept { return (x << k) | (x >> (64 - k)); }
  std::array<std::uint64_t, 4> s_{};
};

/// Normal and uniform draws for one task of a Monte Carlo run.
///
/// The stream is addressed by (root seed, tag, task index): the key comes
/// from (root, tag) and the task index selects a disjoint Philox counter
/// range, whose first block seeds the in-stream generator. A task's draws
/// therefore depend only on its address, never on scheduling.
class RandomStream {
 public:
  RandomStream(std::uint64_t root_seed, std::uint64_t tag, std::uint64_t index) noexcept
      : engine_(seeded(root_seed, tag, index)) {}

  double normal() noexcept { return normal_(engine_); }

  /// Uniform double in (0, 1) with 53 random bits.
  double uniform() noexcept {
    return (static_cast<double>(engine_() >> 11) + 0.5) * (1.0 / 9007199254740992.0);
  }

  Xoshiro256pp& engine() noexcept { return engine_; }

 private:
  static Xoshiro256pp seeded(std::uint64_t root_seed, std::uint64_t tag, std::uint64_t index) noexcept {
    Philox4x32 philox(mix64(root_seed ^ mix64(tag)), index);
    return Xoshiro256pp(philox);
  }

  Xoshiro256pp engine_;
  boost::random::normal_distribution<double> normal_;
};

/// Derives child seeds from a root seed; a child root is itself a valid root.
constexpr std::uint64_t child_seed(std::uint64_t root, std::uint64_t tag, std::uint64_t index) noexcept {
  return mix64(mix64(root ^ mix64(tag)) + index);
}

}  // namespace kpzlab
