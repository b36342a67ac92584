#include "dpacct/rng.hpp"

#include "dpacct/math.hpp"

namespace dpacct {

namespace {

inline void philox_round(std::uint32_t& c0, std::uint32_t& c1, std::uint32_t& c2,
                         std::uint32_t& c3, std::uint32_t k0, std::uint32_t k1) noexcept {
  constexpr std::uint64_t kMul0 = 0xD2511F53ull;
  constexpr std::uint64_t kMul1 = 0xCD9E8D57ull;
  const std::uint64_t p0 = kMul0 * c0;
  const std::uint64_t p1 = kMul1 * c2;
  const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
  const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
  const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
  const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
  const std::uint32_t n0 = hi1 ^ c1 ^ k0;
  const std::uint32_t n1 = lo1;
  const std::uint32_t n2 = hi0 ^ c3 ^ k1;
  const std::uint32_t n3 = lo0;
  c0 = n0; c1 = n1; c2 = n2; c3 = n3;
}

}  // namespace

void RngStream::refill() noexcept {
  constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;  // golden-ratio key schedule
  constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
  std::uint32_t c0 = static_cast<std::uint32_t>(ctr_);
  std::uint32_t c1 = static_cast<std::uint32_t>(ctr_ >> 32);
  std::uint32_t c2 = s0_;
  std::uint32_t c3 = s1_;
  std::uint32_t k0 = key0_;
  std::uint32_t k1 = key1_;
  for (int r = 0; r < 10; ++r) {
    philox_round(c0, c1, c2, c3, k0, k1);
    k0 += kWeyl0;
    k1 += kWeyl1;
  }
  buf_[0] = c0; buf_[1] = c1; buf_[2] = c2; buf_[3] = c3;
  pos_ = 0;
  ++ctr_;
}

double RngStream::gaussian() noexcept { return gaussian_inv_cdf(uniform()); }

std::uint64_t RngStream::uniform_below(std::uint64_t n) noexcept {
  if (n <= 1) return 0;
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n + 1) % n;
  for (;;) {
    const std::uint64_t x = next_u64();
    if (x <= limit) return x % n;
  }
}

}  // namespace dpacct
