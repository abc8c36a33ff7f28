#pragma once

// Counter-based random streams.
//
// Every stream is addressed by (seed, domain, index, lane) and produces the
// Philox4x64-10 sequence for that address. Deriving a stream is O(1) and two
// different addresses never share a block, so replicate r of an experiment
// sees the same numbers no matter how replicates are split across workers.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

namespace fixlab {

__extension__ using uint128_t = unsigned __int128;

struct Philox4x64 {
  using Counter = std::array<std::uint64_t, 4>;
  using Key = std::array<std::uint64_t, 2>;

  static constexpr int kRounds = 10;

  static constexpr Counter apply(Counter ctr, Key key) noexcept {
    for (int round = 0; round < kRounds; ++round) {
      const auto p0 = static_cast<uint128_t>(0xD2E7470EE14C6C93ULL) * ctr[0];
      const auto p1 = static_cast<uint128_t>(0xCA5A826395121157ULL) * ctr[2];
      const auto hi0 = static_cast<std::uint64_t>(p0 >> 64);
      const auto lo0 = static_cast<std::uint64_t>(p0);
      const auto hi1 = static_cast<std::uint64_t>(p1 >> 64);
      const auto lo1 = static_cast<std::uint64_t>(p1);
      ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
      key[0] += 0x9E3779B97F4A7C15ULL;
      key[1] += 0xBB67AE8584CAA73BULL;
    }
    return ctr;
  }
};

// Independent stream families. Landscapes and dynamics live in separate
// domains so the line simulator and the exact solver see the same
// environment for the same (seed, replicate).
enum class StreamDomain : std::uint64_t {
  landscape = 1,
  dynamics = 2,
  chain = 3,
  brownian = 4,
  test = 99,
};

class Stream {
 public:
  using result_type = std::uint64_t;

  Stream(std::uint64_t seed, StreamDomain domain, std::uint64_t index,
         std::uint64_t lane = 0) noexcept
      : key_{seed, static_cast<std::uint64_t>(domain)}, ctr_{0, index, lane, 0} {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() noexcept {
    if (pos_ == 4) {
      block_ = Philox4x64::apply(ctr_, key_);
      ++ctr_[0];
      pos_ = 0;
    }
    return block_[pos_++];
  }

  // Uniform on [0,1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  // Uniform on (0,1); safe as a log argument.
  double uniform_open() noexcept {
    return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
  }

  bool bernoulli(double p) noexcept { return uniform() < p; }

  // Standard normal by Box-Muller; the second variate of each pair is cached.
  double normal() noexcept {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double radius = std::sqrt(-2.0 * std::log(uniform_open()));
    const double angle = 2.0 * std::numbers::pi * uniform();
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  // Number of Philox blocks generated so far.
  std::uint64_t blocks() const noexcept { return ctr_[0]; }

 private:
  Philox4x64::Key key_;
  Philox4x64::Counter ctr_;
  Philox4x64::Counter block_{};
  int pos_ = 4;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// SplitMix64 finalizer; used to derive per-grid-point seeds from a plan seed.
constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) noexcept {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace fixlab
