#pragma once

#include <array>
#include <cstdint>

namespace care {

/// Philox4x32-10 (Salmon et al., Random123). Stateless: the output is a pure
/// function of (counter, key), so draws can be addressed by record index and
/// generated in any order.
inline std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                               std::array<std::uint32_t, 2> key) {
  constexpr std::uint32_t kM0 = 0xD2511F53u, kM1 = 0xCD9E8D57u;
  constexpr std::uint32_t kW0 = 0x9E3779B9u, kW1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * ctr[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * ctr[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kW0;
    key[1] += kW1;
  }
  return ctr;
}

/// Sequence of draws keyed by (seed, stream id, index). Two objects with the
/// same key produce identical sequences.
class KeyedStream {
 public:
  KeyedStream(std::uint64_t seed, std::uint32_t stream, std::uint64_t index)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        index_(index),
        stream_(stream) {}

  std::uint64_t next_u64() {
    if (buffered_ == 0) {
      block_ = philox4x32({static_cast<std::uint32_t>(index_),
                           static_cast<std::uint32_t>(index_ >> 32), stream_, draw_++},
                          key_);
      buffered_ = 2;
    }
    const int slot = 2 - buffered_--;
    return (static_cast<std::uint64_t>(block_[2 * slot]) << 32) | block_[2 * slot + 1];
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform on (0, 1].
  double uniform_open_closed() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Unbiased integer in [0, bound) by rejection.
  std::uint64_t below(std::uint64_t bound) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t v;
    do {
      v = next_u64();
    } while (v >= limit);
    return v % bound;
  }

 private:
  std::array<std::uint32_t, 2> key_;
  std::uint64_t index_;
  std::uint32_t stream_;
  std::uint32_t draw_ = 0;
  std::array<std::uint32_t, 4> block_{};
  int buffered_ = 0;
};

/// Derives an independent 64-bit seed from a parent seed and a label
/// (SplitMix64 finaliser over the combination).
inline std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t label) {
  std::uint64_t z = parent + 0x9E3779B97F4A7C15ull * (label + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace care
