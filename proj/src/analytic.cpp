#include "dpacct/analytic.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "dpacct/math.hpp"

namespace dpacct {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kPi = 3.14159265358979323846;

// Per-side mass trimmed away after each composition round.
constexpr double kComposeTrimTail = 1e-17;
// Per-cell floor for sweeping FFT round-off noise out of composed densities.
constexpr double kFftNoiseFloor = 1e-18;
// Hard cap on lattice support (cells) and FFT size.
constexpr std::size_t kMaxSupportCells = std::size_t{1} << 22;

double stable_exp_product(double epsilon, double tail) {
  // e^epsilon * tail without inf * 0 = NaN when tail underflows to zero.
  if (tail <= 0.0) return 0.0;
  return std::exp(epsilon + std::log(tail));
}

}  // namespace

double delta_gaussian(double sigma, double epsilon, double distance) {
  if (!(sigma > 0.0)) throw ConfigError("delta_gaussian: sigma must be positive");
  if (!(distance > 0.0)) throw ConfigError("delta_gaussian: distance must be positive");
  if (!std::isfinite(epsilon)) throw ConfigError("delta_gaussian: epsilon must be finite");
  const double a = distance / (2.0 * sigma) - epsilon * sigma / distance;
  const double b = -distance / (2.0 * sigma) - epsilon * sigma / distance;
  // e^eps * Phi(b) <= Phi(a) <= 1 here, so the exponent never overflows; the
  // log form keeps full relative precision when Phi(b) is far below normal.
  const double d = gaussian_cdf(a) - std::exp(epsilon + log_gaussian_cdf(b));
  return std::min(1.0, std::max(0.0, d));
}

double delta_deterministic(const AccountingParams& params, double epsilon) {
  params.validate();
  if (params.epochs != 1) {
    throw ConfigError("delta_deterministic: supports a single epoch only");
  }
  return delta_gaussian(params.sigma, epsilon);
}

BnbLowerBound bnb_lower_bound(const AccountingParams& params, double epsilon) {
  params.validate();
  if (params.epochs != 1) {
    throw ConfigError("bnb_lower_bound: supports a single epoch only");
  }
  if (!std::isfinite(epsilon)) throw ConfigError("bnb_lower_bound: epsilon must be finite");
  const double sigma = params.sigma;
  const double steps = static_cast<double>(params.steps);

  const auto tails = [&](double c) {
    const double log_phi = log_gaussian_cdf(c / sigma);
    const double log_phi_shift = log_gaussian_cdf((c - 1.0) / sigma);
    const double p_tail = -std::expm1(log_phi_shift + (steps - 1.0) * log_phi);
    const double q_tail = -std::expm1(steps * log_phi);
    return std::pair<double, double>(p_tail, q_tail);
  };
  const auto objective = [&](double c) {
    const auto [p_tail, q_tail] = tails(c);
    return p_tail - stable_exp_product(epsilon, q_tail);
  };

  // Coarse scan, then golden-section refinement of the best bracket, then a
  // fine local sweep. The objective is smooth and effectively unimodal on
  // this range; the scan makes the bracket robust anyway.
  const double lo = -10.0 * sigma;
  const double hi = 1.0 + 10.0 * sigma;
  const int scan_points = 2001;
  const double scan_step = (hi - lo) / (scan_points - 1);
  double best_c = lo;
  double best_v = -kInf;
  for (int i = 0; i < scan_points; ++i) {
    const double c = lo + scan_step * i;
    const double v = objective(c);
    if (v > best_v) {
      best_v = v;
      best_c = c;
    }
  }

  double a = std::max(lo, best_c - scan_step);
  double b = std::min(hi, best_c + scan_step);
  const double kGolden = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = b - kGolden * (b - a);
  double x2 = a + kGolden * (b - a);
  double f1 = objective(x1);
  double f2 = objective(x2);
  while (b - a > 1e-6) {
    if (f1 >= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - kGolden * (b - a);
      f1 = objective(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + kGolden * (b - a);
      f2 = objective(x2);
    }
  }
  best_c = 0.5 * (a + b);
  best_v = objective(best_c);
  for (int i = -10; i <= 10; ++i) {
    const double c = best_c + 1e-7 * i;
    const double v = objective(c);
    if (v > best_v) {
      best_v = v;
      best_c = c;
    }
  }

  BnbLowerBound out;
  out.epsilon = epsilon;
  out.threshold = best_c;
  const auto [p_tail, q_tail] = tails(best_c);
  out.p_tail = p_tail;
  out.q_tail = q_tail;
  out.value = std::max(0.0, p_tail - stable_exp_product(epsilon, q_tail));
  return out;
}

double Pld::total_mass() const {
  NeumaierSum s;
  for (double v : mass) s.add(v);
  return s.value() + inf_mass + dropped_mass;
}

namespace {

// Helper shared by the two build directions: the privacy loss of the
// subsampled-Gaussian pair at noise draw x is
//   ell(x) = log((1-q) + q e^{(x - 1/2)/sigma^2}),
// strictly increasing in x. loss_to_x inverts it; returns -inf at or below
// the essential infimum log(1-q).
struct MixtureLoss {
  double sigma = 1.0;
  double gamma = 1.0;
  double log_gamma = 0.0;
  double log_1m_gamma = -kInf;
  double sigma_sq = 1.0;

  MixtureLoss(double sigma_in, double gamma_in)
      : sigma(sigma_in),
        gamma(gamma_in),
        log_gamma(std::log(gamma_in)),
        log_1m_gamma(std::log1p(-gamma_in)),
        sigma_sq(sigma_in * sigma_in) {}

  double loss_at(double x) const {
    const double shifted = (x - 0.5) / sigma_sq;
    if (gamma >= 1.0) return shifted;
    return log_add_exp(log_1m_gamma, log_gamma + shifted);
  }

  double loss_to_x(double ell) const {
    if (!(ell > log_1m_gamma)) return -kInf;
    if (ell == kInf) return kInf;
    // Solve (1-q) + q e^s = e^ell for s = (x - 1/2)/sigma^2:
    //   s = ell - log q + log(1 - e^{log(1-q) - ell}),
    // with the last factor computed via expm1 for full precision near the
    // essential infimum. For q = 1, log(1-q) = -inf and s = ell exactly.
    const double s = ell - log_gamma + std::log(-std::expm1(log_1m_gamma - ell));
    return 0.5 + sigma_sq * s;
  }

  // Numerator CDF of the loss for the mixture-vs-Gaussian direction:
  // the noise is drawn from the mixture itself.
  double mixture_cdf_x(double x) const {
    if (x == -kInf) return 0.0;
    if (x == kInf) return 1.0;
    if (gamma >= 1.0) return gaussian_cdf((x - 1.0) / sigma);
    return (1.0 - gamma) * gaussian_cdf(x / sigma) + gamma * gaussian_cdf((x - 1.0) / sigma);
  }
  double mixture_sf_x(double x) const {
    if (x == -kInf) return 1.0;
    if (x == kInf) return 0.0;
    if (gamma >= 1.0) return gaussian_sf((x - 1.0) / sigma);
    return (1.0 - gamma) * gaussian_sf(x / sigma) + gamma * gaussian_sf((x - 1.0) / sigma);
  }
};

// Monotone bisection solve of f(x) = 0 on [lo, hi] with f(lo) >= 0 >= f(hi).
template <typename F>
double bisect_decreasing(F&& f, double lo, double hi) {
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (f(mid) >= 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

void check_support(std::size_t cells) {
  if (cells > kMaxSupportCells) {
    throw NumericalRegimeError(
        "pld: lattice support exceeds " + std::to_string(kMaxSupportCells) +
        " cells; increase grid_step or reduce the composition count");
  }
}

// Iterative radix-2 complex FFT. Twiddle factors are refreshed from
// std::polar every 32 butterflies, which keeps the accumulated rounding drift
// of the running product near machine precision.
void fft_radix2(std::vector<std::complex<double>>& a, bool invert) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = (invert ? -2.0 : 2.0) * kPi / static_cast<double>(len);
    const std::complex<double> wlen = std::polar(1.0, ang);
    const std::size_t half = len / 2;
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t j = 0; j < half; ++j) {
        if ((j & 31u) == 0u && j != 0u) w = std::polar(1.0, ang * static_cast<double>(j));
        const std::complex<double> u = a[i + j];
        const std::complex<double> v = a[i + j + half] * w;
        a[i + j] = u + v;
        a[i + j + half] = u - v;
        w *= wlen;
      }
    }
  }
  if (invert) {
    const double inv_n = 1.0 / static_cast<double>(n);
    for (auto& x : a) x *= inv_n;
  }
}

std::vector<double> convolve_fft(const std::vector<double>& a, const std::vector<double>& b) {
  const std::size_t out_size = a.size() + b.size() - 1;
  check_support(out_size);
  std::size_t n = 1;
  while (n < out_size) n <<= 1;
  std::vector<std::complex<double>> fa(n), fb(n);
  for (std::size_t i = 0; i < a.size(); ++i) fa[i] = a[i];
  for (std::size_t i = 0; i < b.size(); ++i) fb[i] = b[i];
  fft_radix2(fa, false);
  fft_radix2(fb, false);
  for (std::size_t i = 0; i < n; ++i) fa[i] *= fb[i];
  fft_radix2(fa, true);
  std::vector<double> out(out_size);
  for (std::size_t i = 0; i < out_size; ++i) {
    // Round-off can leave tiny negative values; probabilities are clamped.
    out[i] = std::max(0.0, fa[i].real());
  }
  return out;
}

// Trims negligible mass from both ends. Rounding stays mode-correct: the
// pessimistic variant may only move mass toward larger losses (upper tail to
// +inf, lower tail collapsed up into the new bottom cell) and the optimistic
// variant only toward smaller losses (lower tail to -inf, upper tail
// collapsed down into the new top cell).
void trim_pld(Pld& p) {
  if (p.mass.empty()) return;
  std::size_t first = 0;
  double low_cum = 0.0;
  while (first + 1 < p.mass.size() && low_cum + p.mass[first] <= kComposeTrimTail) {
    low_cum += p.mass[first];
    ++first;
  }
  std::size_t last = p.mass.size() - 1;
  double high_cum = 0.0;
  while (last > first && high_cum + p.mass[last] <= kComposeTrimTail) {
    high_cum += p.mass[last];
    --last;
  }
  if (first == 0 && last == p.mass.size() - 1) return;
  std::vector<double> kept(p.mass.begin() + static_cast<std::ptrdiff_t>(first),
                           p.mass.begin() + static_cast<std::ptrdiff_t>(last + 1));
  if (p.mode == PldMode::Pessimistic) {
    kept.front() += low_cum;
    p.inf_mass += high_cum;
  } else {
    p.dropped_mass += low_cum;
    kept.back() += high_cum;
  }
  p.mass = std::move(kept);
  p.lo += static_cast<std::int64_t>(first);
}

Pld build_one_direction(const MixtureLoss& mix, Direction dir, double grid_step, PldMode mode,
                        double tail_mass) {
  const bool pess = mode == PldMode::Pessimistic;
  const double h = grid_step;
  const double sigma = mix.sigma;

  // M(t) = numerator probability of {loss <= t}.
  const auto cdf_loss = [&](double t) {
    if (dir == Direction::PQ) return mix.mixture_cdf_x(mix.loss_to_x(t));
    // Reverse direction: the loss is -ell(x) with x drawn from N(0, sigma^2).
    return gaussian_sf(mix.loss_to_x(-t) / sigma);
  };

  // Locate the lattice range [j_lo, j_hi].
  std::int64_t j_lo = 0;
  std::int64_t j_hi = 0;
  bool collapse_bottom = false;  // bottom boundary cuts off an infinite tail
  bool collapse_top = false;     // top boundary cuts off an infinite tail

  if (dir == Direction::PQ) {
    // Upper tail is unbounded: pick t with numerator SF(t) = tail_mass.
    const double x_hi = bisect_decreasing(
        [&](double x) { return mix.mixture_sf_x(x) - tail_mass; }, -45.0 * sigma,
        1.0 + 45.0 * sigma);
    const double t_hi = mix.loss_at(x_hi);
    j_hi = static_cast<std::int64_t>(pess ? std::ceil(t_hi / h) : std::floor(t_hi / h));
    collapse_top = true;
    if (mix.gamma < 1.0) {
      // Losses are bounded below by log(1-q): the lattice covers the full
      // lower range and no tail handling is needed.
      j_lo = static_cast<std::int64_t>(std::floor(mix.log_1m_gamma / h)) + (pess ? 1 : 0);
    } else {
      const double x_lo = bisect_decreasing(
          [&](double x) { return tail_mass - mix.mixture_cdf_x(x); }, -45.0 * sigma,
          1.0 + 45.0 * sigma);
      const double t_lo = mix.loss_at(x_lo);
      j_lo = static_cast<std::int64_t>(std::floor(t_lo / h));
      collapse_bottom = true;
    }
  } else {
    // Reverse direction: losses are bounded above by -log(1-q) and the lower
    // tail is unbounded.
    if (mix.gamma < 1.0) {
      const double sup = -mix.log_1m_gamma;
      j_hi = static_cast<std::int64_t>(pess ? std::ceil(sup / h) : std::floor(sup / h));
    } else {
      const double x_small = sigma * gaussian_inv_cdf(tail_mass);
      const double t_hi = -mix.loss_at(x_small);
      j_hi = static_cast<std::int64_t>(pess ? std::ceil(t_hi / h) : std::floor(t_hi / h));
    }
    collapse_top = true;
    const double x_large = -sigma * gaussian_inv_cdf(tail_mass);
    const double t_lo = -mix.loss_at(x_large);
    j_lo = static_cast<std::int64_t>(std::floor(t_lo / h));
    collapse_bottom = true;
  }

  if (j_hi < j_lo) j_hi = j_lo;
  const std::size_t cells = static_cast<std::size_t>(j_hi - j_lo) + 1;
  check_support(cells);

  // CDF at every cell boundary. Pessimistic cell j covers ((j-1)h, jh];
  // optimistic cell j covers [jh, (j+1)h). boundary[i] is M at the upper
  // boundary of cell (j_lo + i - 1), i.e. M((j_lo + i - 1 + pess_offset) h).
  std::vector<double> boundary(cells + 1);
  for (std::size_t i = 0; i <= cells; ++i) {
    const std::int64_t j = j_lo + static_cast<std::int64_t>(i) - (pess ? 1 : 0);
    boundary[i] = cdf_loss(static_cast<double>(j) * h);
  }

  Pld out;
  out.grid_step = h;
  out.lo = j_lo;
  out.mode = mode;
  out.mass.resize(cells);
  for (std::size_t i = 0; i < cells; ++i) {
    out.mass[i] = std::max(0.0, boundary[i + 1] - boundary[i]);
  }

  if (collapse_bottom) {
    if (pess) {
      // Everything below the bottom boundary rounds up into the bottom cell.
      out.mass.front() = boundary[1];
    } else {
      out.dropped_mass = boundary[0];
    }
  }
  if (collapse_top) {
    if (pess) {
      out.inf_mass = std::max(0.0, 1.0 - boundary[cells]);
    } else {
      // Everything above the top boundary rounds down into the top cell.
      out.mass.back() = std::max(0.0, 1.0 - boundary[cells - 1]);
    }
  }
  return out;
}

}  // namespace

Pld poisson_pld_build(double sigma, double sampling_prob, Direction dir, double grid_step,
                      PldMode mode, double tail_mass) {
  if (!(sigma > 0.0)) throw ConfigError("poisson_pld_build: sigma must be positive");
  if (!(sampling_prob > 0.0) || sampling_prob > 1.0) {
    throw ConfigError("poisson_pld_build: sampling_prob must lie in (0, 1]");
  }
  if (!(grid_step > 0.0) || !std::isfinite(grid_step)) {
    throw ConfigError("poisson_pld_build: grid_step must be positive");
  }
  if (!(tail_mass > 0.0) || tail_mass >= 1e-2) {
    throw ConfigError("poisson_pld_build: tail_mass must lie in (0, 1e-2)");
  }
  if (dir == Direction::Both) {
    throw ConfigError("poisson_pld_build: build one direction at a time");
  }
  const MixtureLoss mix(sigma, sampling_prob);
  return build_one_direction(mix, dir, grid_step, mode, tail_mass);
}

Pld pld_compose(const Pld& a, const Pld& b) {
  if (a.grid_step != b.grid_step) {
    throw ConfigError("pld_compose: grid steps differ");
  }
  if (a.mode != b.mode) {
    throw ConfigError("pld_compose: rounding modes differ");
  }
  if (a.mass.empty() || b.mass.empty()) {
    throw ConfigError("pld_compose: empty support");
  }
  Pld out;
  out.grid_step = a.grid_step;
  out.mode = a.mode;
  out.lo = a.lo + b.lo;
  out.mass = convolve_fft(a.mass, b.mass);
  out.inf_mass = 1.0 - (1.0 - a.inf_mass) * (1.0 - b.inf_mass);
  out.dropped_mass = 1.0 - (1.0 - a.dropped_mass) * (1.0 - b.dropped_mass);
  // The FFT leaves a carpet of round-off noise (~1e-19 per cell) across the
  // whole support. Left in place it defeats the cumulative tail trim (the
  // carpet sums past the trim budget long before the true tail is reached),
  // and the support then doubles on every composition round. Sweeping cells
  // below a floor into the mode's sink is safe for any floor value: the
  // pessimistic variant may only move mass toward larger losses and the
  // optimistic variant toward smaller ones, so the bounds stay one-sided.
  double swept = 0.0;
  for (double& v : out.mass) {
    if (v < kFftNoiseFloor) {
      swept += v;
      v = 0.0;
    }
  }
  if (out.mode == PldMode::Pessimistic) {
    out.inf_mass = std::min(1.0, out.inf_mass + swept);
  } else {
    out.dropped_mass = std::min(1.0, out.dropped_mass + swept);
  }
  trim_pld(out);
  return out;
}

Pld pld_self_compose(const Pld& pld, std::uint64_t n) {
  if (n == 0) throw ConfigError("pld_self_compose: n must be at least 1");
  Pld base = pld;
  bool have_result = false;
  Pld result;
  std::uint64_t k = n;
  while (true) {
    if (k & 1u) {
      result = have_result ? pld_compose(result, base) : base;
      have_result = true;
    }
    k >>= 1;
    if (k == 0) break;
    base = pld_compose(base, base);
  }
  return result;
}

double pld_delta(const Pld& pld, double epsilon) {
  if (!std::isfinite(epsilon)) throw ConfigError("pld_delta: epsilon must be finite");
  NeumaierSum sum;
  sum.add(pld.inf_mass);
  const double h = pld.grid_step;
  for (std::size_t idx = pld.mass.size(); idx-- > 0;) {
    const double loss = static_cast<double>(pld.lo + static_cast<std::int64_t>(idx)) * h;
    const double d = epsilon - loss;
    if (d >= 0.0) break;  // losses only decrease from here on
    sum.add(pld.mass[idx] * -std::expm1(d));
  }
  return std::min(1.0, std::max(0.0, sum.value()));
}

double poisson_delta(const AccountingParams& params, double epsilon, Direction dir, PldMode mode,
                     double grid_step, double tail_mass) {
  params.validate();
  const std::uint64_t rounds = params.steps * params.epochs;
  const double gamma = params.poisson_prob();
  const auto one_dir = [&](Direction d) {
    Pld step = poisson_pld_build(params.sigma, gamma, d, grid_step, mode, tail_mass);
    Pld total = pld_self_compose(step, rounds);
    return pld_delta(total, epsilon);
  };
  if (dir == Direction::Both) {
    return std::max(one_dir(Direction::PQ), one_dir(Direction::QP));
  }
  return one_dir(dir);
}

DeltaEstimate shuffle_lower_bound(const AccountingParams& params, double epsilon, Direction dir,
                                  const McConfig& cfg) {
  if (cfg.strategy != Strategy::Plain) {
    throw ConfigError("shuffle supports lower bounds only (plain strategy)");
  }
  McConfig local = cfg;
  local.want_lower = true;
  const auto one_dir = [&](Direction d) {
    DeltaEstimate e = estimate_plain(PairKind::ShuffleDominated, params, epsilon, d, local);
    e.has_upper = false;
    e.upper_p = kNaN;
    return e;
  };
  if (dir != Direction::Both) return one_dir(dir);
  DeltaEstimate a = one_dir(Direction::PQ);
  DeltaEstimate b = one_dir(Direction::QP);
  DeltaEstimate out = (a.lower >= b.lower) ? a : b;
  out.direction = Direction::Both;
  out.mean_q = std::max(a.mean_q, b.mean_q);
  out.lower = std::max(a.lower, b.lower);
  out.raw_mean = std::max(a.raw_mean, b.raw_mean);
  return out;
}

}  // namespace dpacct
