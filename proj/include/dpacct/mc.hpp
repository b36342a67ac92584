#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "dpacct/losses.hpp"
#include "dpacct/rng.hpp"

namespace dpacct {

enum class Direction { PQ, QP, Both };
enum class Strategy { Plain, Importance, OrderStats, Combined };
enum class PairKind { BallsAndBins, Deterministic, Poisson, ShuffleDominated };

const char* to_string(Direction d);
const char* to_string(Strategy s);
const char* to_string(PairKind p);

struct AccountingParams {
  double sigma = 1.0;
  std::uint64_t steps = 1;   // batches per epoch
  std::uint64_t epochs = 1;
  // Per-step inclusion probability for the Poisson pair; defaults to 1/steps.
  double sampling_prob = std::numeric_limits<double>::quiet_NaN();

  double poisson_prob() const;
  void validate() const;
};

struct McConfig {
  std::uint64_t m = 1000000;
  double beta = 1e-3;
  Strategy strategy = Strategy::Plain;
  OrderSpec order_spec;   // required for OrderStats / Combined
  unsigned workers = 1;
  std::uint64_t seed = 0;
  bool want_lower = true;

  void validate() const;
};

// Rare-event restriction used by the importance strategies. PQ conditions on
// {max(x_1 - 1, max_{t>1} x_t) >= threshold}; QP on {max_t x_t <= threshold}.
// Outside the event the clipped integrand vanishes, so
// delta = event_probability * E[integrand | event].
struct ImportanceEvent {
  Direction direction = Direction::PQ;
  double threshold = 0.0;
  double event_probability = 1.0;
  double log_event_probability = 0.0;
};

ImportanceEvent make_importance_event(Direction dir, const AccountingParams& params,
                                      double epsilon);

struct DeltaEstimate {
  double epsilon = 0.0;
  Direction direction = Direction::PQ;
  double mean_q = 0.0;   // point estimate of the divergence
  double upper_p = 1.0;  // one-sided 1-beta upper confidence bound
  double lower = 0.0;    // one-sided 1-beta lower confidence bound
  bool has_lower = false;
  bool has_upper = true;   // false when only a lower bound is meaningful
  bool certificate = false;  // event tail underflowed; bounds are deterministic
  double raw_mean = 0.0;     // conditional-space mean before event scaling
  double event_probability = 1.0;
  double log_event_probability = 0.0;

  std::uint64_t m_used = 0;
  double beta_used = 0.0;
  Strategy strategy_used = Strategy::Plain;
  PairKind pair_used = PairKind::BallsAndBins;
  std::uint64_t seed = 0;
  unsigned workers_used = 1;
};

// Per-range partial sum of the clipped integrand, used by merge_estimates.
// `fingerprint` must match across partials being merged (same pair, params,
// epsilon, direction, strategy, event and seed).
struct Partial {
  double sum = 0.0;
  std::uint64_t m = 0;
  std::uint64_t fingerprint = 0;
};

// Monte Carlo engine. Direction must be PQ or QP for the estimate_* entry
// points; use estimate_delta for Both. All entry points are deterministic in
// (seed, m, strategy): sample i draws from its own counter-based stream, and
// sums are folded per 65536-sample chunk in index order, so results are
// bit-identical for any worker count.
DeltaEstimate estimate_plain(PairKind pair, const AccountingParams& params, double epsilon,
                             Direction dir, const McConfig& cfg);

// Balls-and-bins only, single epoch.
DeltaEstimate estimate_importance(const AccountingParams& params, double epsilon,
                                  Direction dir, const McConfig& cfg);

// Balls-and-bins only; conservative (the surrogate loss upper-bounds the
// exact loss, and the integrand is nondecreasing in the loss).
DeltaEstimate estimate_order_stats(const AccountingParams& params, double epsilon,
                                   Direction dir, const McConfig& cfg);

// Balls-and-bins only, single epoch; importance event plus order-statistics
// surrogates inside the event.
DeltaEstimate estimate_combined(const AccountingParams& params, double epsilon,
                                Direction dir, const McConfig& cfg);

// Dispatcher: routes on cfg.strategy, handles Direction::Both by taking the
// field-wise maximum of the two one-sided runs.
DeltaEstimate estimate_delta(PairKind pair, const AccountingParams& params, double epsilon,
                             Direction dir, const McConfig& cfg);

// N(0, sigma^2 I_T) conditioned on max_t x_t >= C, written to out[0..T).
// The coordinate achieving the maximum is placed at a uniform position.
// Throws NumericalRegimeError when the event probability underflows.
void sample_conditional_max(std::uint64_t T, double C, double sigma, RngStream& rng,
                            double* out);

// Joint sample of the order statistics y^(k_1) >= ... >= y^(k_r) of R i.i.d.
// N(0, sigma^2) draws, via nested Beta factors. With `truncated`, the base
// draws are conditioned to lie below `cap`.
void sample_order_stats(std::uint64_t R, const OrderSpec& spec, double sigma, RngStream& rng,
                        double* out);
void sample_order_stats_truncated(std::uint64_t R, const OrderSpec& spec, double sigma,
                                  double cap, RngStream& rng, double* out);

// Pool partial sums: mean over the concatenated samples, one KL bound on the
// pooled mean, then event scaling. Partials are folded in sequence order with
// compensated accumulation, so pooling the engine's per-chunk partials
// reproduces the single-run result bit-for-bit.
DeltaEstimate merge_estimates(const std::vector<Partial>& partials, double epsilon,
                              Direction dir, double beta, bool want_lower,
                              const ImportanceEvent* event = nullptr);

std::uint64_t partial_fingerprint(PairKind pair, const AccountingParams& params,
                                  double epsilon, Direction dir, Strategy strategy,
                                  std::uint64_t seed);

// Plain-strategy partial sum over sample indices [begin, end) of the engine's
// stream layout. Merging partials that cover whole 65536-sample chunks
// reproduces the corresponding estimate_plain result bit-for-bit.
Partial compute_partial(PairKind pair, const AccountingParams& params, double epsilon,
                        Direction dir, const McConfig& cfg, std::uint64_t begin,
                        std::uint64_t end);

}  // namespace dpacct
