#ifndef NVSPLIT_RNG_HPP
#define NVSPLIT_RNG_HPP

#include <boost/math/special_functions/erf.hpp>

#include <array>
#include <cmath>
#include <cstdint>

namespace nvsplit {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11). Every output
/// block is a pure function of (key, counter), so any draw can be produced
/// directly without stepping a stream.
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  explicit Philox4x32(std::uint64_t seed)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)} {}

  Counter operator()(Counter ctr) const {
    Key key = key_;
    for (int round = 0; round < 10; ++round) {
      ctr = single_round(ctr, key);
      key[0] += kWeyl0;
      key[1] += kWeyl1;
    }
    return ctr;
  }

 private:
  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

  static Counter single_round(const Counter& c, const Key& k) {
    const std::uint64_t p0 = std::uint64_t(kMul0) * c[0];
    const std::uint64_t p1 = std::uint64_t(kMul1) * c[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
    return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
  }

  Key key_;
};

// Stream identifiers partition the counter space so Brownian increments,
// Rademacher coins and auxiliary limit-SDE noise never share draws.
namespace stream {
inline constexpr std::uint32_t kBrownian = 0x00000000u;
inline constexpr std::uint32_t kAuxiliary = 0x40000000u;
inline constexpr std::uint32_t kRademacher = 0x80000000u;
inline constexpr std::uint32_t kTest = 0xC0000000u;
}  // namespace stream

/// Draws addressed by (seed, path_index, stream, counter).
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t path_index)
      : philox_(seed), path_lo_(static_cast<std::uint32_t>(path_index)),
        path_hi_(static_cast<std::uint32_t>(path_index >> 32)) {}

  std::array<std::uint32_t, 4> block(std::uint32_t stream_id, std::uint32_t counter) const {
    return philox_({counter, stream_id, path_lo_, path_hi_});
  }

  /// Uniform on the open interval (0, 1) from two 32-bit words (53 bits).
  double uniform(std::uint32_t stream_id, std::uint32_t counter) const {
    const auto b = block(stream_id, counter);
    const std::uint64_t bits = ((std::uint64_t(b[0]) << 32) | b[1]) >> 11;
    return (double(bits) + 0.5) * 0x1.0p-53;
  }

  /// Standard normal by inverse CDF.
  double normal(std::uint32_t stream_id, std::uint32_t counter) const {
    return inverse_normal_cdf(uniform(stream_id, counter));
  }

  int rademacher(std::uint32_t stream_id, std::uint32_t counter) const {
    return (block(stream_id, counter)[2] & 1u) ? 1 : -1;
  }

  static double inverse_normal_cdf(double u) {
    return -std::sqrt(2.0) * boost::math::erfc_inv(2.0 * u);
  }

 private:
  Philox4x32 philox_;
  std::uint32_t path_lo_;
  std::uint32_t path_hi_;
};

}  // namespace nvsplit

#endif  // NVSPLIT_RNG_HPP
