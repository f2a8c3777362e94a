#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace sotlab {

/// Philox4x32-10 block function (Salmon et al.); stateless.
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter apply(Counter ctr, Key key) {
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += kW0;
        key[1] += kW1;
      }
      const std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * ctr[0];
      const std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * ctr[2];
      const auto hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
      const auto hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
      ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
  }

 private:
  static constexpr std::uint32_t kM0 = 0xD2511F53u;
  static constexpr std::uint32_t kM1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kW0 = 0x9E3779B9u;
  static constexpr std::uint32_t kW1 = 0xBB67AE85u;
};

/// Substream tags: independent streams for one (seed, path).
enum class Stream : std::uint32_t {
  kBrownian = 1,
  kInitial = 2,
  kMomentum = 3,
  kSampling = 4,
};

/// Counter-based generator for one (seed, path, stream) triple.
/// Draws depend only on the triple and the draw index, never on other paths.
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::uint64_t path, Stream tag = Stream::kBrownian)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        path_lo_(static_cast<std::uint32_t>(path)),
        tag_(static_cast<std::uint32_t>(tag) ^ (static_cast<std::uint32_t>(path >> 32) << 8)) {}

  /// Uniform on the open interval (0, 1) with 53 random bits.
  double uniform() {
    if (slot_ == 2) refill();
    const std::uint64_t bits = (static_cast<std::uint64_t>(block_[2 * slot_]) << 32) | block_[2 * slot_ + 1];
    ++slot_;
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller; both outputs of a pair are used.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

 private:
  void refill() {
    block_ = Philox4x32::apply({static_cast<std::uint32_t>(counter_), static_cast<std::uint32_t>(counter_ >> 32),
                                path_lo_, tag_},
                               key_);
    ++counter_;
    slot_ = 0;
  }

  Philox4x32::Key key_;
  std::uint32_t path_lo_;
  std::uint32_t tag_;
  std::uint64_t counter_ = 0;
  Philox4x32::Counter block_{};
  int slot_ = 2;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace sotlab
