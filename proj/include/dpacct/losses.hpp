#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace dpacct {

// Selected ranks (1-based, strictly increasing) of the largest values among R
// i.i.d. draws. Rank 1 is the maximum.
struct OrderSpec {
  std::vector<std::uint64_t> orders;

  bool empty() const { return orders.empty(); }
  std::size_t size() const { return orders.size(); }

  // All ranks of {1..R}.
  static OrderSpec full(std::uint64_t R);

  // Compact grammar: comma-separated items, each "a", "a..b", or "a..b:step"
  // (inclusive, step defaults to 1). Example: "1..400,410..1000:10".
  static OrderSpec parse(const std::string& text);

  // Copy with ranks above R removed.
  OrderSpec clipped(std::uint64_t R) const;

  // Throws ConfigError unless orders are strictly increasing in {1..R}
  // (and start at rank 1 when require_rank_one).
  void validate(std::uint64_t R, bool require_rank_one) const;
};

// Log density ratio of the uniform-Gaussian-mixture pair against the centered
// Gaussian in T dimensions:
//   logsumexp_t(x_t / sigma^2) - log T - 1/(2 sigma^2).
double loss_bnb_pq(const double* x, std::size_t T, double sigma);

// Negation of loss_bnb_pq at the same point.
double loss_bnb_qp(const double* x, std::size_t T, double sigma);

// Scalar N(1, sigma^2) vs N(0, sigma^2): (2x - 1) / (2 sigma^2). The reverse
// direction is the negation.
double loss_deterministic_pq(double x, double sigma);

// Mixture-vs-mixture pair sum_t N(2 e_t, .) against sum_t N(e_t, .):
//   logsumexp_t((2 x_t - 2)/sigma^2) - logsumexp_t((x_t - 1/2)/sigma^2).
double loss_shuffle_pq(const double* x, std::size_t T, double sigma);

// Upper bound on loss_bnb_qp built from order statistics y^(k_1) >= ... of the
// full R = T coordinates: the sum of exponentials is lower-bounded by
//   sum_i (k_i - k_{i-1}) * exp(y^(k_i)/sigma^2)   (k_0 = 0).
double surrogate_qp(const double* order_values, const OrderSpec& spec, std::uint64_t R,
                    double sigma);

// Upper bound on loss_bnb_pq. exact_coords are coordinates whose values are
// known exactly (at least the shifted first coordinate); the remaining R
// coordinates enter through order statistics, with the sum of exponentials
// upper-bounded by
//   sum_i (k_{i+1} - k_i) * exp(y^(k_i)/sigma^2)   (k_1 = 1, k_{r+1} = R + 1).
// Requires n_exact + R == T.
double surrogate_pq(const double* exact_coords, std::size_t n_exact,
                    const double* order_values, const OrderSpec& spec, std::uint64_t R,
                    std::uint64_t T, double sigma);

// Sum of independent per-epoch losses.
double loss_multi_epoch(const double* per_epoch, std::size_t k);

}  // namespace dpacct
