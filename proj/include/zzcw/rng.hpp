#pragma once

// Counter-based random streams (Philox4x32-10). A stream is addressed by
// (seed, replica, purpose); draws never depend on scheduling or thread count.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

namespace zzcw {

/// What a stream is used for. Distinct purposes get disjoint counter spaces.
enum class Purpose : std::uint32_t {
  Init = 1,
  Chain = 2,
  ZigZag = 3,
  Bootstrap = 4,
  Test = 5,
};

namespace philox {

using Counter = std::array<std::uint32_t, 4>;
using Key = std::array<std::uint32_t, 2>;

inline constexpr std::uint32_t kMul0 = 0xD2511F53u;
inline constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
inline constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
inline constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

constexpr Counter round(const Counter& c, const Key& k) {
  const std::uint64_t p0 = std::uint64_t{kMul0} * c[0];
  const std::uint64_t p1 = std::uint64_t{kMul1} * c[2];
  const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
  const auto lo0 = static_cast<std::uint32_t>(p0);
  const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
  const auto lo1 = static_cast<std::uint32_t>(p1);
  return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
}

/// Philox4x32 with 10 rounds, the Random123 reference variant.
constexpr Counter block(Counter c, Key k) {
  c = round(c, k);
  for (int r = 1; r < 10; ++r) {
    k[0] += kWeyl0;
    k[1] += kWeyl1;
    c = round(c, k);
  }
  return c;
}

}  // namespace philox

/// UniformRandomBitGenerator over one Philox stream.
///
/// Counter words 0-1 hold the block index, word 2 the replica index and word
/// 3 the purpose tag; the 64-bit seed is the key.
class StreamRng {
 public:
  using result_type = std::uint64_t;

  StreamRng(std::uint64_t seed, std::uint32_t replica, Purpose purpose)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        replica_(replica),
        purpose_(static_cast<std::uint32_t>(purpose)) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    if (used_ == 2) refill();
    const std::size_t i = 2 * used_++;
    return (std::uint64_t{buffer_[i + 1]} << 32) | buffer_[i];
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  /// Uniform on the open interval (0, 1).
  double uniform_open() { return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53; }

  /// Unit-rate exponential, strictly positive and finite.
  double exponential() { return -std::log(uniform_open()); }

  /// Standard normal via Box-Muller; the second variate is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double r = std::sqrt(-2.0 * std::log(uniform_open()));
    const double theta = 2.0 * std::numbers::pi * uniform();
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  /// +1 or -1 with probability 1/2 each.
  int sign() { return ((*this)() >> 63) ? 1 : -1; }

  std::uint64_t blocks_used() const { return block_index_; }

 private:
  void refill() {
    const philox::Counter ctr{static_cast<std::uint32_t>(block_index_),
                              static_cast<std::uint32_t>(block_index_ >> 32), replica_, purpose_};
    buffer_ = philox::block(ctr, key_);
    ++block_index_;
    used_ = 0;
  }

  philox::Key key_;
  std::uint32_t replica_;
  std::uint32_t purpose_;
  std::uint64_t block_index_ = 0;
  philox::Counter buffer_{};
  std::size_t used_ = 2;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace zzcw
