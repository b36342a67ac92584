#pragma once

#include <cstdint>
#include <vector>

#include "dpacct/rng.hpp"

namespace dpacct {

enum class SamplerKind { Deterministic, Shuffle, Poisson, BallsAndBins };

// One batch per step; 0-based indices, kept sorted so runs are reproducible.
using Batches = std::vector<std::vector<std::uint32_t>>;

// Fixed consecutive blocks: step t gets indices [t*b, (t+1)*b). Requires n == b*T.
Batches deterministic_batches(std::uint64_t n, std::uint64_t b, std::uint64_t T);

// Consecutive blocks of a uniform random permutation. Requires n == b*T.
Batches shuffle_batches(std::uint64_t n, std::uint64_t b, std::uint64_t T, RngStream& rng);

// Independent Bernoulli(b/n) membership per (step, index). Requires b <= n.
Batches poisson_batches(std::uint64_t n, std::uint64_t b, std::uint64_t T, RngStream& rng);

// Each index lands in one uniformly random step.
Batches balls_and_bins_batches(std::uint64_t n, std::uint64_t T, RngStream& rng);

// Batch-size vector of the balls-and-bins assignment sampled directly:
// b_t ~ Binomial(remaining, 1/(T - t)) for t = 0..T-1. Sums to n.
std::vector<std::uint64_t> balls_and_bins_sizes(std::uint64_t n, std::uint64_t T, RngStream& rng);

// Replace every batch larger than max_batch by a uniform subset of that size.
Batches truncate_batches(const Batches& batches, std::uint64_t max_batch, RngStream& rng);

// Additive delta penalty for capping batches at B:
// (1 + e^epsilon) * T * Pr[Binomial(n, b/n) > B].
double truncation_delta(std::uint64_t n, std::uint64_t b, std::uint64_t T, std::uint64_t B,
                        double epsilon);

// Smallest B in [1, n] with truncation_delta(...) <= target; monotone in B.
std::uint64_t min_truncation_batch(std::uint64_t n, std::uint64_t b, std::uint64_t T,
                                   double epsilon, double target);

}  // namespace dpacct
