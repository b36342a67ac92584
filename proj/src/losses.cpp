#include "dpacct/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "dpacct/math.hpp"

namespace dpacct {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_vector(const double* x, std::size_t T) {
  if (x == nullptr || T == 0) throw ConfigError("loss: input vector must be nonempty");
}

void check_nonincreasing(const double* v, std::size_t r) {
  for (std::size_t i = 1; i < r; ++i) {
    if (v[i] > v[i - 1]) throw ConfigError("surrogate: order values must be nonincreasing");
  }
}

}  // namespace

OrderSpec OrderSpec::full(std::uint64_t R) {
  OrderSpec s;
  s.orders.resize(R);
  std::iota(s.orders.begin(), s.orders.end(), std::uint64_t{1});
  return s;
}

OrderSpec OrderSpec::parse(const std::string& text) {
  OrderSpec s;
  std::size_t pos = 0;
  auto read_int = [&](const char* what) -> std::uint64_t {
    std::size_t start = pos;
    while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) ++pos;
    if (pos == start) throw ConfigError(std::string("order spec: expected ") + what);
    try {
      return std::stoull(text.substr(start, pos - start));
    } catch (const std::out_of_range&) {
      throw ConfigError("order spec: integer out of range");
    }
  };
  while (pos < text.size()) {
    const std::uint64_t a = read_int("integer");
    if (a == 0) throw ConfigError("order spec: ranks are 1-based");
    std::uint64_t b = a, step = 1;
    if (pos + 1 < text.size() && text[pos] == '.' && text[pos + 1] == '.') {
      pos += 2;
      b = read_int("range end");
      if (pos < text.size() && text[pos] == ':') {
        ++pos;
        step = read_int("step");
        if (step == 0) throw ConfigError("order spec: step must be positive");
      }
    }
    if (b < a) throw ConfigError("order spec: descending range");
    for (std::uint64_t k = a; k <= b; k += step) {
      s.orders.push_back(k);
      if (k > b - std::min(b, step)) break;  // avoid wrap on k += step
    }
    if (pos < text.size()) {
      if (text[pos] != ',') throw ConfigError("order spec: expected ','");
      ++pos;
    }
  }
  if (s.orders.empty()) throw ConfigError("order spec: empty");
  for (std::size_t i = 1; i < s.orders.size(); ++i) {
    if (s.orders[i] <= s.orders[i - 1]) throw ConfigError("order spec: must be strictly increasing");
  }
  return s;
}

OrderSpec OrderSpec::clipped(std::uint64_t R) const {
  OrderSpec s;
  for (const auto k : orders) {
    if (k <= R) s.orders.push_back(k);
  }
  return s;
}

void OrderSpec::validate(std::uint64_t R, bool require_rank_one) const {
  if (R == 0) {
    if (!orders.empty()) throw ConfigError("order spec: no coordinates to rank");
    return;
  }
  if (orders.empty()) throw ConfigError("order spec: empty");
  if (require_rank_one && orders.front() != 1) {
    throw ConfigError("order spec: rank 1 must be included for the upper-sum bound");
  }
  std::uint64_t prev = 0;
  for (const auto k : orders) {
    if (k <= prev) throw ConfigError("order spec: must be strictly increasing");
    if (k < 1 || k > R) throw ConfigError("order spec: rank outside {1..R}");
    prev = k;
  }
}

double loss_bnb_pq(const double* x, std::size_t T, double sigma) {
  check_vector(x, T);
  const double inv_s2 = 1.0 / (sigma * sigma);
  double hi = -kInf;
  for (std::size_t t = 0; t < T; ++t) hi = std::max(hi, x[t]);
  hi *= inv_s2;
  double s = 0.0;
  for (std::size_t t = 0; t < T; ++t) s += std::exp(x[t] * inv_s2 - hi);
  return hi + std::log(s) - std::log(static_cast<double>(T)) - 0.5 * inv_s2;
}

double loss_bnb_qp(const double* x, std::size_t T, double sigma) {
  return -loss_bnb_pq(x, T, sigma);
}

double loss_deterministic_pq(double x, double sigma) { return (x - 0.5) / (sigma * sigma); }

double loss_shuffle_pq(const double* x, std::size_t T, double sigma) {
  check_vector(x, T);
  const double inv_s2 = 1.0 / (sigma * sigma);
  double hi = -kInf;
  for (std::size_t t = 0; t < T; ++t) hi = std::max(hi, x[t]);
  double num = 0.0, den = 0.0;
  // Shared max-shift: exponents are (2x-2)/s2 and (x-1/2)/s2.
  const double shift_num = (2.0 * hi - 2.0) * inv_s2;
  const double shift_den = (hi - 0.5) * inv_s2;
  for (std::size_t t = 0; t < T; ++t) {
    num += std::exp((2.0 * x[t] - 2.0) * inv_s2 - shift_num);
    den += std::exp((x[t] - 0.5) * inv_s2 - shift_den);
  }
  return shift_num + std::log(num) - shift_den - std::log(den);
}

double surrogate_qp(const double* order_values, const OrderSpec& spec, std::uint64_t R,
                    double sigma) {
  spec.validate(R, /*require_rank_one=*/false);
  check_nonincreasing(order_values, spec.size());
  const double inv_s2 = 1.0 / (sigma * sigma);
  double hi = -kInf;
  const std::size_t r = spec.size();
  // Terms log(k_i - k_{i-1}) + y_i / sigma^2.
  double prev = 0.0;
  for (std::size_t i = 0; i < r; ++i) {
    const double term = std::log(static_cast<double>(spec.orders[i] - prev)) +
                        order_values[i] * inv_s2;
    hi = std::max(hi, term);
    prev = static_cast<double>(spec.orders[i]);
  }
  double s = 0.0;
  prev = 0.0;
  for (std::size_t i = 0; i < r; ++i) {
    const double term = std::log(static_cast<double>(spec.orders[i]) - prev) +
                        order_values[i] * inv_s2;
    s += std::exp(term - hi);
    prev = static_cast<double>(spec.orders[i]);
  }
  const double lse = hi + std::log(s);
  return std::log(static_cast<double>(R)) + 0.5 * inv_s2 - lse;
}

double surrogate_pq(const double* exact_coords, std::size_t n_exact,
                    const double* order_values, const OrderSpec& spec, std::uint64_t R,
                    std::uint64_t T, double sigma) {
  if (n_exact + R != T) throw ConfigError("surrogate_pq: coordinate count mismatch");
  if (n_exact == 0) throw ConfigError("surrogate_pq: needs at least one exact coordinate");
  spec.validate(R, /*require_rank_one=*/true);
  check_nonincreasing(order_values, spec.size());
  const double inv_s2 = 1.0 / (sigma * sigma);
  const std::size_t r = spec.size();
  double hi = -kInf;
  for (std::size_t j = 0; j < n_exact; ++j) hi = std::max(hi, exact_coords[j] * inv_s2);
  for (std::size_t i = 0; i < r; ++i) {
    const std::uint64_t next = (i + 1 < r) ? spec.orders[i + 1] : R + 1;
    const double term = std::log(static_cast<double>(next - spec.orders[i])) +
                        order_values[i] * inv_s2;
    hi = std::max(hi, term);
  }
  double s = 0.0;
  for (std::size_t j = 0; j < n_exact; ++j) s += std::exp(exact_coords[j] * inv_s2 - hi);
  for (std::size_t i = 0; i < r; ++i) {
    const std::uint64_t next = (i + 1 < r) ? spec.orders[i + 1] : R + 1;
    const double term = std::log(static_cast<double>(next - spec.orders[i])) +
                        order_values[i] * inv_s2;
    s += std::exp(term - hi);
  }
  const double lse = hi + std::log(s);
  return lse - std::log(static_cast<double>(T)) - 0.5 * inv_s2;
}

double loss_multi_epoch(const double* per_epoch, std::size_t k) {
  if (per_epoch == nullptr || k == 0) throw ConfigError("loss_multi_epoch: empty input");
  double s = 0.0;
  for (std::size_t i = 0; i < k; ++i) s += per_epoch[i];
  return s;
}

}  // namespace dpacct
