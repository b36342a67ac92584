#include "dpacct/samplers.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dpacct/math.hpp"

namespace dpacct {

namespace {

void check_block_config(std::uint64_t n, std::uint64_t b, std::uint64_t T) {
  if (n == 0 || b == 0 || T == 0) throw ConfigError("sampler: n, b, T must be positive");
  if (n != b * T) throw ConfigError("sampler: requires n == b * T");
}

}  // namespace

Batches deterministic_batches(std::uint64_t n, std::uint64_t b, std::uint64_t T) {
  check_block_config(n, b, T);
  Batches out(T);
  for (std::uint64_t t = 0; t < T; ++t) {
    out[t].resize(b);
    std::iota(out[t].begin(), out[t].end(), static_cast<std::uint32_t>(t * b));
  }
  return out;
}

Batches shuffle_batches(std::uint64_t n, std::uint64_t b, std::uint64_t T, RngStream& rng) {
  check_block_config(n, b, T);
  std::vector<std::uint32_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0u);
  for (std::uint64_t i = n - 1; i > 0; --i) {
    const std::uint64_t j = rng.uniform_below(i + 1);
    std::swap(perm[i], perm[j]);
  }
  Batches out(T);
  for (std::uint64_t t = 0; t < T; ++t) {
    out[t].assign(perm.begin() + static_cast<std::ptrdiff_t>(t * b),
                  perm.begin() + static_cast<std::ptrdiff_t>((t + 1) * b));
    std::sort(out[t].begin(), out[t].end());
  }
  return out;
}

Batches poisson_batches(std::uint64_t n, std::uint64_t b, std::uint64_t T, RngStream& rng) {
  if (n == 0 || b == 0 || T == 0) throw ConfigError("sampler: n, b, T must be positive");
  if (b > n) throw ConfigError("poisson sampler: requires b <= n");
  const double p = static_cast<double>(b) / static_cast<double>(n);
  Batches out(T);
  if (p >= 1.0) {
    for (auto& batch : out) {
      batch.resize(n);
      std::iota(batch.begin(), batch.end(), 0u);
    }
    return out;
  }
  // Geometric skipping: jump straight to the next included index.
  const double log1mp = std::log1p(-p);
  for (std::uint64_t t = 0; t < T; ++t) {
    std::uint64_t i = 0;
    for (;;) {
      const double u = rng.uniform();
      const double skip = std::floor(std::log(u) / log1mp);
      if (skip >= static_cast<double>(n - i)) break;
      i += static_cast<std::uint64_t>(skip);
      out[t].push_back(static_cast<std::uint32_t>(i));
      ++i;
      if (i >= n) break;
    }
  }
  return out;
}

Batches balls_and_bins_batches(std::uint64_t n, std::uint64_t T, RngStream& rng) {
  if (n == 0 || T == 0) throw ConfigError("sampler: n, T must be positive");
  Batches out(T);
  for (std::uint64_t i = 0; i < n; ++i) {
    out[rng.uniform_below(T)].push_back(static_cast<std::uint32_t>(i));
  }
  return out;
}

std::vector<std::uint64_t> balls_and_bins_sizes(std::uint64_t n, std::uint64_t T,
                                                RngStream& rng) {
  if (T == 0) throw ConfigError("sampler: T must be positive");
  std::vector<std::uint64_t> sizes(T, 0);
  std::uint64_t remaining = n;
  for (std::uint64_t t = 0; t < T && remaining > 0; ++t) {
    if (t + 1 == T) {
      sizes[t] = remaining;
      break;
    }
    const double p = 1.0 / static_cast<double>(T - t);
    sizes[t] = binomial_inv_cdf(remaining, p, rng.uniform());
    remaining -= sizes[t];
  }
  return sizes;
}

Batches truncate_batches(const Batches& batches, std::uint64_t max_batch, RngStream& rng) {
  if (max_batch == 0) throw ConfigError("truncate_batches: max_batch must be positive");
  Batches out;
  out.reserve(batches.size());
  for (const auto& batch : batches) {
    if (batch.size() <= max_batch) {
      out.push_back(batch);
      continue;
    }
    // Partial Fisher-Yates: the first max_batch slots form a uniform subset.
    std::vector<std::uint32_t> pool = batch;
    for (std::uint64_t i = 0; i < max_batch; ++i) {
      const std::uint64_t j = i + rng.uniform_below(pool.size() - i);
      std::swap(pool[i], pool[j]);
    }
    pool.resize(max_batch);
    std::sort(pool.begin(), pool.end());
    out.push_back(std::move(pool));
  }
  return out;
}

double truncation_delta(std::uint64_t n, std::uint64_t b, std::uint64_t T, std::uint64_t B,
                        double epsilon) {
  if (n == 0 || b == 0 || T == 0 || B == 0) {
    throw ConfigError("truncation_delta: n, b, T, B must be positive");
  }
  if (b > n) throw ConfigError("truncation_delta: requires b <= n");
  const double p = static_cast<double>(b) / static_cast<double>(n);
  const double tail = binomial_tail(n, p, B);
  return (1.0 + std::exp(epsilon)) * static_cast<double>(T) * tail;
}

std::uint64_t min_truncation_batch(std::uint64_t n, std::uint64_t b, std::uint64_t T,
                                   double epsilon, double target) {
  if (target < 0.0) throw ConfigError("min_truncation_batch: target must be nonnegative");
  if (truncation_delta(n, b, T, n, epsilon) > target) {
    throw ConfigError("min_truncation_batch: target unreachable even at B = n");
  }
  std::uint64_t lo = 1, hi = n;  // invariant: delta(hi) <= target
  while (lo < hi) {
    const std::uint64_t mid = lo + (hi - lo) / 2;
    if (truncation_delta(n, b, T, mid, epsilon) <= target) {
      hi = mid;
    } else {
      lo = mid + 1;
    }
  }
  return hi;
}

}  // namespace dpacct
