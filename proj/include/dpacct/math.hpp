#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>

namespace dpacct {

class RngStream;

// User-facing misconfiguration (invalid arguments, impossible requests).
struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// A numerically unreachable regime (tail underflow, grid overflow): the
// request is well-formed but the method cannot produce a finite answer here.
struct NumericalRegimeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline constexpr double kLogSqrt2Pi = 0.91893853320467274178;  // log sqrt(2*pi)

// log(e^a + e^b), safe for -inf operands.
double log_add_exp(double a, double b);

// log sum_i e^{v[i]}; -inf for n == 0.
double logsumexp(const double* v, std::size_t n);

// Compensated (Neumaier) accumulator. Used wherever sample sums must be
// reproducible under a fixed summation order.
struct NeumaierSum {
  double s = 0.0, c = 0.0;
  void add(double x) noexcept {
    const double t = s + x;
    if (std::abs(s) >= std::abs(x)) {
      c += (s - t) + x;
    } else {
      c += (x - t) + s;
    }
    s = t;
  }
  double value() const noexcept { return s + c; }
};

// Standard normal CDF / survival / their logs. log_gaussian_sf stays finite
// far beyond the erfc underflow point (|z| up to ~1e8) via the asymptotic
// expansion of Mills' ratio.
double gaussian_cdf(double z);
double gaussian_sf(double z);
double log_gaussian_cdf(double z);
double log_gaussian_sf(double z);

// Inverse standard normal CDF (Wichura's AS241 PPND16), |error| ~ 1e-15.
double gaussian_inv_cdf(double u);

// Regularized incomplete beta I_x(a, b) via the Lentz continued fraction.
double regularized_beta(double a, double b, double x);

// Inverse of I_x(a, b) in x for u in [0, 1].
double beta_inv_cdf(double a, double b, double u);

// Beta(a, b) variate. Closed-form inverse CDF when a or b is 1; otherwise a
// gamma-ratio draw (exact in distribution, variable stream consumption).
double beta_sample(double a, double b, RngStream& rng);
double gamma_sample(double shape, RngStream& rng);

// KL divergence between Bernoulli(q) and Bernoulli(p).
double bernoulli_kl(double q, double p);

// Smallest p in [q, 1] with KL(q||p) >= log(1/beta)/m, else 1.
double kl_ucb(double q, std::uint64_t m, double beta);

// Largest p in [0, q] with KL(q||p) >= log(1/beta)/m, else 0.
double kl_lcb(double q, std::uint64_t m, double beta);

double lchoose(std::uint64_t n, std::uint64_t k);

// Pr[Binomial(n, p) > B], exact log-space summation over the smaller tail.
double binomial_tail(std::uint64_t n, double p, std::uint64_t B);

// Smallest k with Pr[Binomial(n, p) <= k] >= u.
std::uint64_t binomial_inv_cdf(std::uint64_t n, double p, double u);

}  // namespace dpacct
