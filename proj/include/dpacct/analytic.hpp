#pragma once

#include <cstdint>
#include <vector>

#include "dpacct/mc.hpp"

namespace dpacct {

// Hockey-stick divergence of N(distance, sigma^2) against N(0, sigma^2):
//   Phi(d/(2 sigma) - eps sigma / d) - e^eps Phi(-d/(2 sigma) - eps sigma / d).
double delta_gaussian(double sigma, double epsilon, double distance = 1.0);

// Exact delta for the deterministic sampler (single epoch; the pair is
// symmetric, so both directions coincide).
double delta_deterministic(const AccountingParams& params, double epsilon);

// Analytic lower bound for the balls-and-bins pair from the threshold family
// S_C = {x : max_t x_t >= C}: value = P(S_C) - e^eps Q(S_C), maximized over C.
// Recomputable: value == p_tail - e^eps * q_tail at the stored threshold.
struct BnbLowerBound {
  double epsilon = 0.0;
  double threshold = 0.0;
  double value = 0.0;  // clamped at 0
  double p_tail = 0.0;  // 1 - Phi_sigma(C-1) Phi_sigma(C)^{T-1}
  double q_tail = 0.0;  // 1 - Phi_sigma(C)^T
};
BnbLowerBound bnb_lower_bound(const AccountingParams& params, double epsilon);

enum class PldMode { Pessimistic, Optimistic };

// Discretized privacy loss distribution on the lattice {j * grid_step}.
// Pessimistic rounds losses up (plus a +infinity atom for the trimmed upper
// tail), so delta reads out as a certified upper bound; Optimistic rounds
// down (dropping the trimmed lower tail to -infinity), giving a certified
// lower bound up to dropped_mass. Certification is up to floating-point
// convolution error (~1e-12).
struct Pld {
  double grid_step = 1e-4;
  std::int64_t lo = 0;  // loss value of mass[0] is lo * grid_step
  std::vector<double> mass;
  double inf_mass = 0.0;
  double dropped_mass = 0.0;
  PldMode mode = PldMode::Pessimistic;

  double total_mass() const;
};

// One-step loss distribution of the subsampled-Gaussian pair
// (1-q) N(0, sigma^2) + q N(1, sigma^2) vs N(0, sigma^2), under the
// direction's numerator distribution.
Pld poisson_pld_build(double sigma, double sampling_prob, Direction dir, double grid_step,
                      PldMode mode, double tail_mass = 1e-15);

// Distribution of the sum of two independent discretized losses (exact
// lattice convolution via FFT, then tail trimming with mode-correct
// bookkeeping). Grids and modes must match.
Pld pld_compose(const Pld& a, const Pld& b);
Pld pld_self_compose(const Pld& pld, std::uint64_t n);

// delta(epsilon) = inf_mass + sum_j mass_j * [1 - e^{epsilon - loss_j}]_+.
double pld_delta(const Pld& pld, double epsilon);

// End-to-end Poisson accounting composed over steps * epochs. Direction::Both
// takes the max over both directions.
double poisson_delta(const AccountingParams& params, double epsilon, Direction dir,
                     PldMode mode, double grid_step = 1e-4, double tail_mass = 1e-15);

// Monte Carlo lower bound for the shuffle sampler via its dominated pair.
// Domination is one-sided, so the result carries no upper bound.
DeltaEstimate shuffle_lower_bound(const AccountingParams& params, double epsilon,
                                  Direction dir, const McConfig& cfg);

}  // namespace dpacct
