#pragma once

#include <cstdint>

namespace dpacct {

// Counter-based Philox4x32-10 stream. A stream is fully determined by
// (seed, stream_index), which makes worker partitions reproducible: any
// consumer can open the stream for a given Monte Carlo sample index and
// obtain the same draws regardless of which thread runs it.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed, std::uint64_t stream_index = 0) noexcept
      : key0_(static_cast<std::uint32_t>(seed)),
        key1_(static_cast<std::uint32_t>(seed >> 32)),
        s0_(static_cast<std::uint32_t>(stream_index)),
        s1_(static_cast<std::uint32_t>(stream_index >> 32)) {}

  std::uint32_t next_u32() noexcept {
    if (pos_ == 4) refill();
    return buf_[pos_++];
  }

  std::uint64_t next_u64() noexcept {
    const std::uint64_t hi = next_u32();
    const std::uint64_t lo = next_u32();
    return (hi << 32) | lo;
  }

  // Uniform on the open interval (0, 1): 53-bit resolution, offset by half an
  // ulp so 0 and 1 are unreachable (both would break inverse-CDF sampling).
  double uniform() noexcept {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  // Standard normal via the inverse CDF; bit-reproducible across platforms,
  // unlike std::normal_distribution.
  double gaussian() noexcept;

  double gaussian(double sigma) noexcept { return sigma * gaussian(); }

  // Unbiased integer in [0, n) by rejection on the top bits.
  std::uint64_t uniform_below(std::uint64_t n) noexcept;

 private:
  void refill() noexcept;

  std::uint32_t key0_, key1_;
  std::uint32_t s0_, s1_;
  std::uint64_t ctr_ = 0;
  std::uint32_t buf_[4]{};
  int pos_ = 4;
};

}  // namespace dpacct
