#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace twqr {

/// Philox4x32-10 counter-based generator.
///
/// A stream is identified by (seed, replication, stream id); the remaining
/// two counter words enumerate blocks inside the stream. Streams never
/// overlap, so replications can be generated in any order or in parallel
/// and still produce the same draws. Satisfies UniformRandomBitGenerator.
class PhiloxEngine {
 public:
  using result_type = std::uint32_t;
  using Block = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  PhiloxEngine(std::uint64_t seed, std::uint32_t replication, std::uint32_t stream)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        replication_(replication),
        stream_(stream) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    if (pos_ == 4) {
      buffer_ = bijection({static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32),
                           replication_, stream_},
                          key_);
      ++block_;
      pos_ = 0;
    }
    return buffer_[pos_++];
  }

  /// The raw 10-round Philox4x32 bijection.
  static constexpr Block bijection(Block ctr, Key key) {
    constexpr std::uint32_t kMul0 = 0xD2511F53u;
    constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
    constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
    constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += kWeyl0;
        key[1] += kWeyl1;
      }
      const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * ctr[0];
      const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * ctr[2];
      const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
      const auto lo0 = static_cast<std::uint32_t>(p0);
      const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
      const auto lo1 = static_cast<std::uint32_t>(p1);
      ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
  }

 private:
  Key key_;
  std::uint32_t replication_;
  std::uint32_t stream_;
  std::uint64_t block_ = 0;
  Block buffer_{};
  int pos_ = 4;
};

/// Stream id layout: upper 16 bits name the latent family, lower 16 bits the regressor index.
constexpr std::uint32_t stream_id(std::uint32_t family, std::uint32_t index = 0) {
  return (family << 16) | index;
}

}  // namespace twqr
