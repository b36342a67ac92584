#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <limits>
#include <vector>

#include "dpacct/math.hpp"
#include "dpacct/rng.hpp"
#include "testutil.hpp"

using namespace dpacct;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

TEST_CASE("gaussian cdf/sf match the independent long-double oracle") {
  for (double z = -37.0; z <= 37.0; z += 0.173) {
    const long double truth = testutil::normal_cdf_oracle(z);
    const long double sf_truth = testutil::normal_sf_oracle(z);
    CHECK(gaussian_cdf(z) == doctest::Approx(static_cast<double>(truth)).epsilon(1e-13));
    CHECK(gaussian_sf(z) == doctest::Approx(static_cast<double>(sf_truth)).epsilon(1e-13));
  }
  CHECK(gaussian_cdf(0.0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(gaussian_cdf(-kInf) == 0.0);
  CHECK(gaussian_cdf(kInf) == 1.0);
  CHECK(gaussian_sf(-kInf) == 1.0);
  CHECK(gaussian_sf(kInf) == 0.0);
}

TEST_CASE("log gaussian tails stay accurate far beyond erfc underflow") {
  // Moderate range: compare against log of the oracle.
  for (double z = 0.5; z <= 35.0; z += 0.7) {
    const double truth = static_cast<double>(std::log(testutil::normal_sf_oracle(z)));
    CHECK(log_gaussian_sf(z) == doctest::Approx(truth).epsilon(1e-12));
    CHECK(log_gaussian_cdf(-z) == doctest::Approx(truth).epsilon(1e-12));
  }
  // Asymptotic branch: check directly against the oracle past the switch.
  for (double z : {36.000001, 36.5, 37.0, 40.0}) {
    const double truth = static_cast<double>(std::log(testutil::normal_sf_oracle(z)));
    CHECK(log_gaussian_sf(z) == doctest::Approx(truth).epsilon(1e-12));
  }
  const double z = 1000.0;
  const double expect = -0.5 * z * z - std::log(z) - kLogSqrt2Pi;  // leading terms
  CHECK(log_gaussian_sf(z) == doctest::Approx(expect).epsilon(1e-9));
  CHECK(std::isfinite(log_gaussian_sf(1e6)));
}

TEST_CASE("inverse gaussian cdf: frozen references and round trip") {
  CHECK(gaussian_inv_cdf(0.3) == doctest::Approx(-0.5244005127080409).epsilon(1e-14));
  CHECK(gaussian_inv_cdf(1e-12) == doctest::Approx(-7.034483825301131).epsilon(1e-14));
  CHECK(gaussian_inv_cdf(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-14));
  CHECK(gaussian_inv_cdf(0.5) == 0.0);
  for (double u = 1e-300; u < 0.5; u *= 997.0) {
    const double z = gaussian_inv_cdf(u);
    const double back = static_cast<double>(testutil::normal_cdf_oracle(z));
    CHECK(back == doctest::Approx(u).epsilon(1e-11));
  }
  for (double u = 0.001; u <= 0.999; u += 0.0173) {
    CHECK(gaussian_cdf(gaussian_inv_cdf(u)) == doctest::Approx(u).epsilon(1e-13));
  }
  CHECK(gaussian_inv_cdf(0.0) == -kInf);
  CHECK(gaussian_inv_cdf(1.0) == kInf);
  CHECK_THROWS_AS(gaussian_inv_cdf(-0.1), ConfigError);
  CHECK_THROWS_AS(gaussian_inv_cdf(1.1), ConfigError);
}

TEST_CASE("log_add_exp and logsumexp") {
  CHECK(log_add_exp(0.0, 0.0) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(log_add_exp(-kInf, 3.0) == 3.0);
  CHECK(log_add_exp(3.0, -kInf) == 3.0);
  CHECK(log_add_exp(-kInf, -kInf) == -kInf);
  CHECK(log_add_exp(1000.0, 1000.0) == doctest::Approx(1000.0 + std::log(2.0)).epsilon(1e-15));
  const std::vector<double> v{-1e300, 2.0, 1.0, -kInf};
  CHECK(logsumexp(v.data(), v.size()) ==
        doctest::Approx(2.0 + std::log1p(std::exp(-1.0))).epsilon(1e-15));
  CHECK(logsumexp(v.data(), 0) == -kInf);
}

TEST_CASE("neumaier summation recovers cancelled terms") {
  NeumaierSum s;
  s.add(1.0);
  s.add(1e100);
  s.add(1.0);
  s.add(-1e100);
  CHECK(s.value() == 2.0);
  NeumaierSum tiny;
  for (int i = 0; i < 10000000; ++i) tiny.add(0.1);
  CHECK(tiny.value() == doctest::Approx(1e6).epsilon(1e-13));
}

TEST_CASE("regularized incomplete beta: frozen references") {
  CHECK(regularized_beta(2, 3, 0.4) == doctest::Approx(0.5248).epsilon(1e-12));
  CHECK(regularized_beta(0.5, 0.5, 0.3) == doctest::Approx(0.36901011956554536).epsilon(1e-12));
  CHECK(regularized_beta(50, 3, 0.9) == doctest::Approx(0.09663328513725222).epsilon(1e-11));
  CHECK(regularized_beta(400, 10, 0.97) == doctest::Approx(0.215544977592743).epsilon(1e-10));
  CHECK(regularized_beta(2, 3, 0.0) == 0.0);
  CHECK(regularized_beta(2, 3, 1.0) == 1.0);
}

TEST_CASE("beta inverse cdf: closed forms and round trip") {
  // b == 1: I_x(a, 1) = x^a.
  CHECK(beta_inv_cdf(4.0, 1.0, 0.5) == doctest::Approx(std::pow(0.5, 0.25)).epsilon(1e-14));
  // a == 1: I_x(1, b) = 1 - (1-x)^b.
  CHECK(beta_inv_cdf(1.0, 3.0, 0.9) ==
        doctest::Approx(1.0 - std::pow(0.1, 1.0 / 3.0)).epsilon(1e-14));
  for (double a : {0.5, 1.7, 8.0, 120.0}) {
    for (double b : {0.5, 2.0, 30.0}) {
      for (double u = 0.02; u < 1.0; u += 0.098) {
        const double x = beta_inv_cdf(a, b, u);
        CHECK(regularized_beta(a, b, x) == doctest::Approx(u).epsilon(1e-9));
      }
    }
  }
  CHECK(beta_inv_cdf(2.0, 3.0, 0.0) == 0.0);
  CHECK(beta_inv_cdf(2.0, 3.0, 1.0) == 1.0);
}

TEST_CASE("gamma and beta samplers match their moments") {
  RngStream rng(2024, 0);
  const double shape = 3.7;
  const int n = 200000;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double g = gamma_sample(shape, rng);
    sum += g;
    sum2 += g * g;
  }
  const double mean = sum / n;
  const double var = sum2 / n - mean * mean;
  // Gamma(shape): mean = shape, var = shape. 5-sigma tolerances.
  CHECK(std::fabs(mean - shape) < 5.0 * std::sqrt(shape / n));
  CHECK(std::fabs(var - shape) < 5.0 * std::sqrt(2.0 * shape * shape * (shape + 3.0)) / std::sqrt(n));

  // Small-shape branch (boost path).
  double small_sum = 0.0;
  for (int i = 0; i < n; ++i) small_sum += gamma_sample(0.4, rng);
  CHECK(std::fabs(small_sum / n - 0.4) < 5.0 * std::sqrt(0.4 / n));

  // Beta(a, b): mean a/(a+b).
  double bsum = 0.0;
  for (int i = 0; i < n; ++i) bsum += beta_sample(2.5, 4.0, rng);
  const double bmean = bsum / n;
  const double btruth = 2.5 / 6.5;
  const double bsd = std::sqrt(btruth * (1 - btruth) / (6.5 + 1.0));
  CHECK(std::fabs(bmean - btruth) < 5.0 * bsd / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("bernoulli kl and confidence bounds") {
  CHECK(bernoulli_kl(0.1, 0.2) == doctest::Approx(0.0366902).epsilon(1e-4));
  CHECK(bernoulli_kl(0.0, 0.5) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(bernoulli_kl(0.3, 0.3) == 0.0);

  // Frozen references for the inverted bounds.
  CHECK(kl_ucb(0.0, 1000, 1e-3) == doctest::Approx(0.0068840).epsilon(1e-4));
  CHECK(kl_lcb(1.0, 1000, 1e-3) == doctest::Approx(0.993116).epsilon(1e-4));

  // q = 0: closed form 1 - beta^{1/m}.
  CHECK(kl_ucb(0.0, 500, 1e-2) ==
        doctest::Approx(-std::expm1(std::log(1e-2) / 500)).epsilon(1e-12));
  // Defining property: KL(q || bound) == log(1/beta)/m on both sides.
  for (double q : {0.02, 0.3, 0.77}) {
    const double target = std::log(1.0 / 1e-3) / 20000.0;
    const double up = kl_ucb(q, 20000, 1e-3);
    const double lo = kl_lcb(q, 20000, 1e-3);
    CHECK(up > q);
    CHECK(lo < q);
    CHECK(bernoulli_kl(q, up) == doctest::Approx(target).epsilon(1e-7));
    CHECK(bernoulli_kl(q, lo) == doctest::Approx(target).epsilon(1e-7));
  }
  // Vacuous regimes clamp to the endpoints; q is clamped into [0, 1]
  // (empirical frequencies can carry float noise past the boundary).
  CHECK(kl_ucb(0.9999999, 2, 1e-9) == 1.0);
  CHECK(kl_lcb(1e-9, 2, 1e-9) == 0.0);
  CHECK(kl_ucb(-0.1, 100, 1e-3) == kl_ucb(0.0, 100, 1e-3));
  CHECK(kl_lcb(1.3, 100, 1e-3) == kl_lcb(1.0, 100, 1e-3));
  CHECK_THROWS_AS(kl_ucb(0.5, 0, 1e-3), ConfigError);
  CHECK_THROWS_AS(kl_ucb(0.5, 100, 0.0), ConfigError);
  CHECK_THROWS_AS(kl_lcb(0.5, 100, 1.0), ConfigError);
}

TEST_CASE("binomial tail: exact references and symmetry") {
  CHECK(binomial_tail(10, 0.5, 5) == doctest::Approx(0.376953125).epsilon(1e-13));
  CHECK(binomial_tail(10, 0.5, 10) == 0.0);
  CHECK(binomial_tail(10, 0.5, 0) == doctest::Approx(1.0 - std::pow(0.5, 10)).epsilon(1e-13));
  CHECK(binomial_tail(5, 0.0, 0) == 0.0);
  CHECK(binomial_tail(5, 1.0, 4) == 1.0);
  CHECK(binomial_tail(5, 1.0, 5) == 0.0);
  // Tiny-tail regime: Pr[Bin(n,p) > B] ~ C(n,B+1) p^{B+1} when p is tiny.
  const double t = binomial_tail(1000, 1e-8, 2);
  const double approx = std::exp(lchoose(1000, 3) + 3 * std::log(1e-8));
  CHECK(t == doctest::Approx(approx).epsilon(1e-4));
  // Complement consistency with the inverse walk (margin avoids FP ties
  // between the two independent CDF summations).
  for (double p : {0.03, 0.4, 0.97}) {
    for (std::uint64_t B : {0ULL, 3ULL, 7ULL, 9ULL}) {
      const double cdf = 1.0 - binomial_tail(10, p, B);
      if (cdf <= 1e-12) continue;
      const std::uint64_t k = binomial_inv_cdf(10, p, cdf * (1.0 - 1e-9));
      CHECK(k <= B);
    }
  }
}

TEST_CASE("binomial inverse cdf is the exact generalized inverse") {
  for (double p : {0.02, 0.5, 0.83}) {
    for (std::uint64_t n : {7ULL, 40ULL, 2000ULL}) {
      for (double u : {1e-9, 0.02, 0.31, 0.5, 0.77, 0.999, 1 - 1e-12}) {
        const std::uint64_t k = binomial_inv_cdf(n, p, u);
        const double cdf_k = 1.0 - binomial_tail(n, p, k);
        CHECK(cdf_k >= u - 1e-12);
        if (k > 0) {
          const double cdf_km1 = 1.0 - binomial_tail(n, p, k - 1);
          CHECK(cdf_km1 < u + 1e-12);
        }
      }
    }
  }
  CHECK(binomial_inv_cdf(100, 0.0, 0.5) == 0);
  CHECK(binomial_inv_cdf(100, 1.0, 0.5) == 100);
}
