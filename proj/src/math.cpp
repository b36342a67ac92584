#include "dpacct/math.hpp"

#include <algorithm>
#include <limits>

#include "dpacct/rng.hpp"

namespace dpacct {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

double log_add_exp(double a, double b) {
  if (a == -kInf) return b;
  if (b == -kInf) return a;
  const double hi = std::max(a, b);
  const double lo = std::min(a, b);
  return hi + std::log1p(std::exp(lo - hi));
}

double logsumexp(const double* v, std::size_t n) {
  if (n == 0) return -kInf;
  double hi = -kInf;
  for (std::size_t i = 0; i < n; ++i) hi = std::max(hi, v[i]);
  if (hi == -kInf || hi == kInf) return hi;
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += std::exp(v[i] - hi);
  return hi + std::log(s);
}

double gaussian_cdf(double z) { return 0.5 * std::erfc(-z * M_SQRT1_2); }

double gaussian_sf(double z) { return 0.5 * std::erfc(z * M_SQRT1_2); }

double log_gaussian_sf(double z) {
  if (z < 36.0) {
    const double sf = gaussian_sf(z);
    if (sf > 0.5) return std::log1p(-gaussian_sf(-z));
    return std::log(sf);
  }
  // Asymptotic Mills-ratio expansion; relative error ~1e-13 at the switch.
  const double z2 = z * z;
  const double corr = std::log1p(-1.0 / z2 + 3.0 / (z2 * z2) - 15.0 / (z2 * z2 * z2) +
                                 105.0 / (z2 * z2 * z2 * z2));
  return -0.5 * z2 - std::log(z) - kLogSqrt2Pi + corr;
}

double log_gaussian_cdf(double z) {
  if (z >= 0.0) return std::log1p(-gaussian_sf(z));
  return log_gaussian_sf(-z);
}

double gaussian_inv_cdf(double u) {
  // Wichura's algorithm AS 241 (PPND16).
  if (!(u > 0.0 && u < 1.0)) {
    if (u == 0.0) return -kInf;
    if (u == 1.0) return kInf;
    throw ConfigError("gaussian_inv_cdf: argument outside [0, 1]");
  }
  const double q = u - 0.5;
  if (std::abs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    const double num =
        q * (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r +
                  6.7265770927008700853e4) * r + 4.5921953931549871457e4) * r +
                1.3731693765509461125e4) * r + 1.9715909503065514427e3) * r +
              1.3314166789178437745e2) * r + 3.3871328727963666080e0);
    const double den =
        (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r +
              3.9307895800092710610e4) * r + 2.1213794301586595867e4) * r +
            5.3941960214247511077e3) * r + 6.8718700749205790830e2) * r +
          4.2313330701600911252e1) * r + 1.0);
    return num / den;
  }
  double r = (q < 0.0) ? u : 1.0 - u;
  r = std::sqrt(-std::log(r));
  double x;
  if (r <= 5.0) {
    r -= 1.6;
    const double num =
        (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
              2.41780725177450611770e-1) * r + 1.27045825245236838258e0) * r +
            3.64784832476320460504e0) * r + 5.76949722146069140550e0) * r +
          4.63033784615654529590e0) * r + 1.42343711074968357734e0);
    const double den =
        (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
              1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
            6.89767334985100004550e-1) * r + 1.67638483018380384940e0) * r +
          2.05319162663775882187e0) * r + 1.0);
    x = num / den;
  } else {
    r -= 5.0;
    const double num =
        (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
              1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
            2.96560571828504891230e-1) * r + 1.78482653991729133580e0) * r +
          5.46378491116411436990e0) * r + 6.65790464350110377720e0);
    const double den =
        (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
              1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
            1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
          5.99832206555887937690e-1) * r + 1.0);
    x = num / den;
  }
  return (q < 0.0) ? -x : x;
}

namespace {

// Lentz's modified continued fraction for the incomplete beta function.
double betacf(double a, double b, double x) {
  constexpr int kMaxIter = 400;
  constexpr double kEps = 3e-16;
  constexpr double kTiny = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) break;
  }
  return h;
}

double lbeta(double a, double b) {
  return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

}  // namespace

double regularized_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) throw ConfigError("regularized_beta: a, b must be positive");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double lbt = a * std::log(x) + b * std::log1p(-x) - lbeta(a, b);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return std::exp(lbt) * betacf(a, b, x) / a;
  }
  return 1.0 - std::exp(lbt) * betacf(b, a, 1.0 - x) / b;
}

double beta_inv_cdf(double a, double b, double u) {
  if (!(a > 0.0) || !(b > 0.0)) throw ConfigError("beta_inv_cdf: a, b must be positive");
  if (u <= 0.0) return 0.0;
  if (u >= 1.0) return 1.0;
  if (b == 1.0) return std::exp(std::log(u) / a);
  if (a == 1.0) return -std::expm1(std::log1p(-u) / b);
  // Solve on the side where the answer is not crowded against 1.
  if (u > 0.5) return 1.0 - beta_inv_cdf(b, a, 1.0 - u);

  const double lb = lbeta(a, b);
  double lo = 0.0, hi = 1.0;
  double x = a / (a + b);
  for (int it = 0; it < 200; ++it) {
    const double f = regularized_beta(a, b, x) - u;
    if (f > 0.0) {
      hi = x;
    } else {
      lo = x;
    }
    if (std::abs(f) < 1e-14 * std::max(u, 1e-3) && it > 2) break;
    const double lpdf = (a - 1.0) * std::log(x) + (b - 1.0) * std::log1p(-x) - lb;
    double xn;
    const double pdf = std::exp(lpdf);
    if (pdf > 0.0 && std::isfinite(pdf)) {
      xn = x - f / pdf;
    } else {
      xn = 0.5 * (lo + hi);
    }
    if (!(xn > lo && xn < hi)) xn = 0.5 * (lo + hi);
    if (std::abs(xn - x) <= 1e-17 + 1e-15 * x) {
      x = xn;
      break;
    }
    x = xn;
  }
  return x;
}

double gamma_sample(double shape, RngStream& rng) {
  if (!(shape > 0.0)) throw ConfigError("gamma_sample: shape must be positive");
  if (shape < 1.0) {
    // Boost the shape and correct with a uniform power (Marsaglia-Tsang).
    const double g = gamma_sample(shape + 1.0, rng);
    return g * std::exp(std::log(rng.uniform()) / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = rng.gaussian();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = rng.uniform();
    const double x2 = x * x;
    if (u < 1.0 - 0.0331 * x2 * x2) return d * v;
    if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v;
  }
}

double beta_sample(double a, double b, RngStream& rng) {
  if (b == 1.0) return std::exp(std::log(rng.uniform()) / a);
  if (a == 1.0) return -std::expm1(std::log1p(-rng.uniform()) / b);
  const double x = gamma_sample(a, rng);
  const double y = gamma_sample(b, rng);
  return x / (x + y);
}

double bernoulli_kl(double q, double p) {
  if (q < 0.0 || q > 1.0 || p < 0.0 || p > 1.0) {
    throw ConfigError("bernoulli_kl: arguments must lie in [0, 1]");
  }
  if (q == p) return 0.0;
  double kl = 0.0;
  if (q > 0.0) {
    if (p == 0.0) return kInf;
    kl += q * std::log(q / p);
  }
  if (q < 1.0) {
    if (p == 1.0) return kInf;
    kl += (1.0 - q) * std::log((1.0 - q) / (1.0 - p));
  }
  return kl;
}

double kl_ucb(double q, std::uint64_t m, double beta) {
  if (m == 0) throw ConfigError("kl_ucb: m must be positive");
  if (!(beta > 0.0 && beta < 1.0)) throw ConfigError("kl_ucb: beta must be in (0, 1)");
  q = std::clamp(q, 0.0, 1.0);
  const double target = -std::log(beta) / static_cast<double>(m);
  if (q >= 1.0) return 1.0;
  if (q == 0.0) return -std::expm1(-target);  // 1 - beta^{1/m}
  if (bernoulli_kl(q, 1.0 - 1e-16) < target) return 1.0;
  double lo = q, hi = 1.0;
  for (int it = 0; it < 200 && hi - lo > 1e-17; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (bernoulli_kl(q, mid) >= target) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

double kl_lcb(double q, std::uint64_t m, double beta) {
  if (m == 0) throw ConfigError("kl_lcb: m must be positive");
  if (!(beta > 0.0 && beta < 1.0)) throw ConfigError("kl_lcb: beta must be in (0, 1)");
  q = std::clamp(q, 0.0, 1.0);
  const double target = -std::log(beta) / static_cast<double>(m);
  if (q <= 0.0) return 0.0;
  if (q == 1.0) return std::exp(-target);  // beta^{1/m}
  if (bernoulli_kl(q, 1e-300) < target) return 0.0;
  double lo = 0.0, hi = q;
  for (int it = 0; it < 200 && hi - lo > 1e-17; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (bernoulli_kl(q, mid) >= target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return lo;
}

double lchoose(std::uint64_t n, std::uint64_t k) {
  if (k > n) return -kInf;
  if (k == 0 || k == n) return 0.0;
  const double nd = static_cast<double>(n);
  const double kd = static_cast<double>(k);
  return std::lgamma(nd + 1.0) - std::lgamma(kd + 1.0) - std::lgamma(nd - kd + 1.0);
}

namespace {

// Sum of binomial pmf terms over [k_lo, k_hi] where the first term is the
// largest: start from the log pmf at k_lo-side extremum and advance with the
// term ratio. `up` selects the direction of travel.
double binomial_span_sum(std::uint64_t n, double p, std::uint64_t k_start, bool up) {
  const double lp = std::log(p);
  const double lq = std::log1p(-p);
  const double lt0 =
      lchoose(n, k_start) + static_cast<double>(k_start) * lp + static_cast<double>(n - k_start) * lq;
  double term = 1.0;  // relative to the first term
  double sum = 1.0;
  std::uint64_t k = k_start;
  for (;;) {
    if (up) {
      if (k == n) break;
      term *= (static_cast<double>(n - k) / static_cast<double>(k + 1)) * (p / (1.0 - p));
      ++k;
    } else {
      if (k == 0) break;
      term *= (static_cast<double>(k) / static_cast<double>(n - k + 1)) * ((1.0 - p) / p);
      --k;
    }
    sum += term;
    if (term < 1e-22 * sum) break;
  }
  return std::exp(lt0 + std::log(sum));
}

}  // namespace

double binomial_tail(std::uint64_t n, double p, std::uint64_t B) {
  if (p < 0.0 || p > 1.0) throw ConfigError("binomial_tail: p must lie in [0, 1]");
  if (B >= n) return 0.0;
  if (p == 0.0) return 0.0;
  if (p == 1.0) return 1.0;
  const double mean = static_cast<double>(n) * p;
  if (static_cast<double>(B) + 1.0 >= mean) {
    // Upper tail terms decay from k = B+1; sum them directly.
    return binomial_span_sum(n, p, B + 1, /*up=*/true);
  }
  // Below the mode the complement is the smaller, decaying sum.
  return 1.0 - binomial_span_sum(n, p, B, /*up=*/false);
}

std::uint64_t binomial_inv_cdf(std::uint64_t n, double p, double u) {
  if (p < 0.0 || p > 1.0) throw ConfigError("binomial_inv_cdf: p must lie in [0, 1]");
  if (n == 0 || p == 0.0 || u <= 0.0) return 0;
  if (p == 1.0) return n;
  if (u >= 1.0) return n;
  // Gaussian pilot guess, then exact walk on the CDF.
  const double mean = static_cast<double>(n) * p;
  const double sd = std::sqrt(mean * (1.0 - p));
  double guess = mean + sd * gaussian_inv_cdf(u);
  std::uint64_t k = static_cast<std::uint64_t>(std::clamp(guess, 0.0, static_cast<double>(n)));
  double cdf = 1.0 - binomial_tail(n, p, k);  // Pr[X <= k]
  const double lp = std::log(p);
  const double lq = std::log1p(-p);
  double pmf = std::exp(lchoose(n, k) + static_cast<double>(k) * lp +
                        static_cast<double>(n - k) * lq);
  if (cdf >= u) {
    // Walk down while the predecessor still satisfies the condition.
    while (k > 0) {
      const double cdf_prev = cdf - pmf;
      if (cdf_prev < u) break;
      cdf = cdf_prev;
      pmf *= (static_cast<double>(k) / static_cast<double>(n - k + 1)) * ((1.0 - p) / p);
      --k;
    }
    return k;
  }
  while (k < n) {
    pmf *= (static_cast<double>(n - k) / static_cast<double>(k + 1)) * (p / (1.0 - p));
    ++k;
    cdf += pmf;
    if (cdf >= u) break;
  }
  return k;
}

}  // namespace dpacct
