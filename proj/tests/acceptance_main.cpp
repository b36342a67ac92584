// Acceptance gate for the accounting library and the CLI. Each criterion runs
// an end-to-end scenario at a fixed configuration and prints one PASS/FAIL
// verdict line; indented "info:" lines carry the measured numbers. The process
// exits nonzero when any selected criterion fails.
//
// Usage: dpacct_acceptance <path-to-cli-binary> [criterion 1..12]
//
// With no criterion argument all twelve run in sequence (roughly 25 minutes,
// dominated by criterion 8's 10^7-sample runs).

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "dpacct/analytic.hpp"
#include "dpacct/losses.hpp"
#include "dpacct/mc.hpp"
#include "dpacct/rng.hpp"

namespace {

using namespace dpacct;
using Clock = std::chrono::steady_clock;

std::string g_cli;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// ---------------------------------------------------------------------------
// Independent oracles (long double, no library calls).

long double normal_cdf(long double z) { return 0.5L * erfcl(-z / sqrtl(2.0L)); }

// Hockey-stick divergence between N(1, sigma^2) and N(0, sigma^2).
long double closed_form_delta(long double sigma, long double eps) {
  return normal_cdf(1.0L / (2.0L * sigma) - eps * sigma) -
         expl(eps) * normal_cdf(-1.0L / (2.0L * sigma) - eps * sigma);
}

struct QuadOracle {
  double bnb_pq = 0.0;  // one step of the two-step mixture pair, T = 2
  double bnb_qp = 0.0;
  double ep2_pq = 0.0;  // two independent copies of the T = 1 pair
  double ep2_qp = 0.0;
};

// Midpoint-rule quadrature of the clipped integrand max(p - e^eps q, 0) over
// [-8, 9]^2 with step 0.01, for both pair shapes and both directions.
QuadOracle quad_oracle(double eps) {
  constexpr int n = 1700;
  constexpr long double h = 0.01L;
  static std::vector<long double> gauss, shift;  // e^{-x^2/2}, e^{x - 1/2}
  if (gauss.empty()) {
    gauss.resize(n);
    shift.resize(n);
    for (int i = 0; i < n; ++i) {
      const long double x = -8.0L + (static_cast<long double>(i) + 0.5L) * h;
      gauss[i] = expl(-x * x / 2.0L);
      shift[i] = expl(x - 0.5L);
    }
  }
  const long double e = expl(static_cast<long double>(eps));
  long double bnb_pq = 0, bnb_qp = 0, ep2_pq = 0, ep2_qp = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const long double q = gauss[i] * gauss[j];
      const long double pb = q * 0.5L * (shift[i] + shift[j]);
      const long double pe = q * shift[i] * shift[j];
      bnb_pq += std::max(pb - e * q, 0.0L);
      bnb_qp += std::max(q - e * pb, 0.0L);
      ep2_pq += std::max(pe - e * q, 0.0L);
      ep2_qp += std::max(q - e * pe, 0.0L);
    }
  }
  const long double w = h * h / (2.0L * 3.14159265358979323846264338328L);
  QuadOracle out;
  out.bnb_pq = static_cast<double>(bnb_pq * w);
  out.bnb_qp = static_cast<double>(bnb_qp * w);
  out.ep2_pq = static_cast<double>(ep2_pq * w);
  out.ep2_qp = static_cast<double>(ep2_qp * w);
  return out;
}

// Two-sample Kolmogorov-Smirnov statistic (sorts its inputs).
double ks_two_sample(std::vector<double>& a, std::vector<double>& b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  double d = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] <= b[j]) {
      ++i;
    } else {
      ++j;
    }
    d = std::max(d, std::fabs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

// Direct lattice convolution, used as the FFT oracle.
std::vector<double> convolve_direct(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> out(a.size() + b.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) {
      out[i + j] += a[i] * b[j];
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// CLI runner.

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_cli(const std::string& args, std::string* out) {
  static int counter = 0;
  const std::string base = "/tmp/dpacct_accept." + std::to_string(getpid()) + "." +
                           std::to_string(counter++);
  const std::string cmd = "\"" + g_cli + "\" " + args + " > " + base + ".out 2> " + base + ".err";
  const int rc = std::system(cmd.c_str());
  if (out != nullptr) *out = slurp(base + ".out");
  std::remove((base + ".out").c_str());
  std::remove((base + ".err").c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

// ---------------------------------------------------------------------------
// Criteria.

bool c01_closed_form_oracle() {
  AccountingParams params;
  params.sigma = 1.0;
  params.steps = 1;
  bool ok = true;
  int k = 0;
  for (double eps : {0.5, 1.0, 2.0}) {
    McConfig cfg;
    cfg.m = 1000000;
    cfg.beta = 1e-3;
    cfg.seed = 101 + static_cast<std::uint64_t>(k++);
    const auto t0 = Clock::now();
    const DeltaEstimate est = estimate_plain(PairKind::BallsAndBins, params, eps, Direction::PQ, cfg);
    const double secs = seconds_since(t0);
    const double truth = static_cast<double>(closed_form_delta(1.0L, eps));
    const double se = std::sqrt(truth * (1.0 - truth) / static_cast<double>(cfg.m));
    const double z = (est.mean_q - truth) / se;
    const bool point_ok = std::fabs(z) <= 3.0 && est.upper_p >= truth && secs < 60.0;
    std::printf("  info: eps=%.2f mean=%.6e truth=%.6e z=%+.2f upper=%.6e runtime=%.1fs%s\n", eps,
                est.mean_q, truth, z, est.upper_p, secs, point_ok ? "" : "  <-- violation");
    ok = ok && point_ok;
  }
  return ok;
}

bool c02_quadrature_oracle() {
  const auto t0 = Clock::now();
  AccountingParams params;
  params.sigma = 1.0;
  params.steps = 2;
  bool ok = true;
  int k = 0;
  for (double eps : {0.25, 0.5, 1.0}) {
    const QuadOracle oracle = quad_oracle(eps);
    for (Direction dir : {Direction::PQ, Direction::QP}) {
      McConfig cfg;
      cfg.m = 4000000;
      cfg.beta = 1e-3;
      cfg.seed = 211 + static_cast<std::uint64_t>(k++);
      const DeltaEstimate est = estimate_plain(PairKind::BallsAndBins, params, eps, dir, cfg);
      const double truth = dir == Direction::PQ ? oracle.bnb_pq : oracle.bnb_qp;
      const double err = std::fabs(est.mean_q - truth);
      const bool point_ok = err <= 2e-3;
      std::printf("  info: eps=%.2f dir=%s mean=%.6e quadrature=%.6e |err|=%.2e%s\n", eps,
                  to_string(dir), est.mean_q, truth, err, point_ok ? "" : "  <-- violation");
      ok = ok && point_ok;
    }
  }
  const double total = seconds_since(t0);
  std::printf("  info: total runtime %.1fs (budget 300s)\n", total);
  return ok && total < 300.0;
}

bool c03_order_stats_sampler() {
  struct Config {
    std::uint64_t R;
    const char* spec;
  };
  const Config configs[] = {{100, "1,10,50"}, {1000, "1..20"}};
  constexpr std::size_t n = 100000;
  const double crit = 1.62762 * std::sqrt(2.0 / static_cast<double>(n));
  bool ok = true;
  for (const Config& c : configs) {
    const OrderSpec spec = OrderSpec::parse(c.spec);
    const std::size_t r = spec.size();
    std::vector<std::vector<double>> lib(r), oracle(r);
    for (std::size_t q = 0; q < r; ++q) {
      lib[q].reserve(n);
      oracle[q].reserve(n);
    }
    std::vector<double> draw(r), base(c.R);
    bool monotone = true;
    for (std::size_t i = 0; i < n; ++i) {
      RngStream st(311, i);
      sample_order_stats(c.R, spec, 1.0, st, draw.data());
      for (std::size_t q = 0; q < r; ++q) {
        lib[q].push_back(draw[q]);
        if (q > 0 && !(draw[q] <= draw[q - 1])) monotone = false;
      }
      RngStream so(577, i);
      for (std::uint64_t t = 0; t < c.R; ++t) base[t] = so.gaussian();
      std::sort(base.begin(), base.end(), std::greater<double>());
      for (std::size_t q = 0; q < r; ++q) {
        oracle[q].push_back(base[spec.orders[q] - 1]);
      }
    }
    double worst = 0.0;
    for (std::size_t q = 0; q < r; ++q) {
      worst = std::max(worst, ks_two_sample(lib[q], oracle[q]));
    }
    const bool cfg_ok = monotone && worst <= crit;
    std::printf("  info: R=%llu ranks=%s worst-KS=%.5f crit=%.5f monotone=%s%s\n",
                static_cast<unsigned long long>(c.R), c.spec, worst, crit,
                monotone ? "yes" : "NO", cfg_ok ? "" : "  <-- violation");
    ok = ok && cfg_ok;
  }
  return ok;
}

bool c04_surrogate_dominance() {
  struct Config {
    double sigma;
    std::uint64_t T;
    const char* spec;
  };
  const Config configs[] = {{0.32, 10000, "1..10,20..100:10,200..1000:100,2000..10000:1000"},
                            {1.0, 1000, "1..10,20..100:10,200..1000:100"}};
  constexpr int n_draws = 10000;
  bool ok = true;
  for (const Config& c : configs) {
    const std::uint64_t T = c.T;
    const OrderSpec sub_q = OrderSpec::parse(c.spec).clipped(T);
    const OrderSpec sub_p = OrderSpec::parse(c.spec).clipped(T - 1);
    const OrderSpec full_q = OrderSpec::full(T);
    const OrderSpec full_p = OrderSpec::full(T - 1);
    std::vector<double> x(T), sorted(T), rest(T - 1), vals_q(sub_q.size()), vals_p(sub_p.size());
    double min_margin = 1e300, max_eq = 0.0;
    for (int d = 0; d < n_draws; ++d) {
      // Denominator-centred draw for the reverse direction.
      RngStream sq(401 + static_cast<std::uint64_t>(d) * 2, 0);
      for (std::uint64_t t = 0; t < T; ++t) x[t] = sq.gaussian(c.sigma);
      const double exact_q = loss_bnb_qp(x.data(), T, c.sigma);
      sorted = x;
      std::sort(sorted.begin(), sorted.end(), std::greater<double>());
      for (std::size_t i = 0; i < sub_q.size(); ++i) vals_q[i] = sorted[sub_q.orders[i] - 1];
      min_margin = std::min(min_margin, surrogate_qp(vals_q.data(), sub_q, T, c.sigma) - exact_q);
      max_eq = std::max(max_eq,
                        std::fabs(surrogate_qp(sorted.data(), full_q, T, c.sigma) - exact_q));
      // Mixture draw (coordinate 0 shifted) for the forward direction.
      RngStream sp(402 + static_cast<std::uint64_t>(d) * 2, 0);
      for (std::uint64_t t = 0; t < T; ++t) x[t] = sp.gaussian(c.sigma);
      x[0] += 1.0;
      const double exact_p = loss_bnb_pq(x.data(), T, c.sigma);
      std::copy(x.begin() + 1, x.end(), rest.begin());
      std::sort(rest.begin(), rest.end(), std::greater<double>());
      for (std::size_t i = 0; i < sub_p.size(); ++i) vals_p[i] = rest[sub_p.orders[i] - 1];
      min_margin = std::min(
          min_margin, surrogate_pq(&x[0], 1, vals_p.data(), sub_p, T - 1, T, c.sigma) - exact_p);
      max_eq = std::max(max_eq, std::fabs(surrogate_pq(&x[0], 1, rest.data(), full_p, T - 1, T,
                                                       c.sigma) -
                                          exact_p));
    }
    const bool cfg_ok = min_margin >= -1e-9 && max_eq <= 1e-9;
    std::printf("  info: sigma=%.2f T=%llu min-margin=%+.3e max-full-order-gap=%.3e%s\n", c.sigma,
                static_cast<unsigned long long>(T), min_margin, max_eq,
                cfg_ok ? "" : "  <-- violation");
    ok = ok && cfg_ok;
  }
  return ok;
}

bool c05_importance_gain() {
  AccountingParams params;
  params.sigma = 0.5;
  params.steps = 100;
  const double eps = 4.0;
  bool overlap_ok = true;
  double ratio_pq = 0.0, ratio_qp = 0.0;
  for (Direction dir : {Direction::PQ, Direction::QP}) {
    McConfig cfg;
    cfg.m = 100000;
    cfg.beta = 0.005;  // two-sided 99% interval
    cfg.seed = 501;
    cfg.want_lower = true;
    const DeltaEstimate plain = estimate_plain(PairKind::BallsAndBins, params, eps, dir, cfg);
    cfg.seed = 502;
    cfg.strategy = Strategy::Importance;
    const DeltaEstimate imp = estimate_importance(params, eps, dir, cfg);
    const bool overlap = imp.lower <= plain.upper_p && plain.lower <= imp.upper_p;
    const double hw_plain = (plain.upper_p - plain.lower) / 2.0;
    const double hw_imp = (imp.upper_p - imp.lower) / 2.0;
    const double ratio = hw_imp > 0.0 ? hw_plain / hw_imp : 1e300;
    if (dir == Direction::PQ) {
      ratio_pq = ratio;
    } else {
      ratio_qp = ratio;
    }
    std::printf(
        "  info: dir=%s plain=[%.3e,%.3e] importance=[%.3e,%.3e] overlap=%s width-ratio=%.1f\n",
        to_string(dir), plain.lower, plain.upper_p, imp.lower, imp.upper_p,
        overlap ? "yes" : "NO", ratio);
    overlap_ok = overlap_ok && overlap;
  }
  // The conditioning event in the forward direction keeps roughly a quarter of
  // the mass here, which caps the attainable narrowing near 2x; the reverse
  // direction is the rare-event regime where the gain is orders of magnitude.
  const bool gain_ok = ratio_qp >= 5.0;
  std::printf("  info: narrowing: qp=%.0fx (>=5 required) pq=%.2fx (informational; event prob"
              " ~0.23 caps it near 2x)\n",
              ratio_qp, ratio_pq);

  AccountingParams rare;
  rare.sigma = 0.4;
  rare.steps = 5000;
  const ImportanceEvent ev12 = make_importance_event(Direction::PQ, rare, 12.0);
  const ImportanceEvent ev9 = make_importance_event(Direction::PQ, rare, 9.0);
  const double target = 3.75e-3;
  const bool event_ok = std::fabs(ev12.event_probability - target) <= 1e-4;
  std::printf("  info: event probability at (sigma=0.4, T=5000): eps=12 -> %.4e (target %.2e"
              " +-1e-4: %s); the target value occurs at eps=9 -> %.4e\n",
              ev12.event_probability, target, event_ok ? "met" : "NOT met",
              ev9.event_probability);
  if (!event_ok) {
    std::printf("  info: expected-red sub-check: the stated event probability is reproduced at"
                " eps=9, not eps=12; the implementation is kept faithful to the stated"
                " configuration\n");
  }
  return overlap_ok && gain_ok && event_ok;
}

bool c06_sandwich() {
  struct Config {
    double sigma;
    std::uint64_t T;
    double eps[5];
  };
  const Config configs[] = {{1.0, 16, {0.25, 0.5, 1.0, 1.5, 2.0}},
                            {0.5, 64, {0.5, 1.0, 2.0, 3.0, 4.0}},
                            {2.0, 4, {0.05, 0.1, 0.2, 0.4, 0.8}}};
  bool ok = true;
  std::uint64_t seed = 601;
  for (const Config& c : configs) {
    AccountingParams params;
    params.sigma = c.sigma;
    params.steps = c.T;
    for (double eps : c.eps) {
      McConfig cfg;
      cfg.m = 200000;
      cfg.beta = 1e-3;
      cfg.seed = seed++;
      const DeltaEstimate est = estimate_plain(PairKind::BallsAndBins, params, eps, Direction::PQ, cfg);
      const BnbLowerBound lb = bnb_lower_bound(params, eps);
      const double dd = delta_deterministic(params, eps);
      const double se =
          std::sqrt(std::max(est.mean_q * (1.0 - est.mean_q), 1e-12) / static_cast<double>(cfg.m));
      const bool lower_below_mean = lb.value - 3.0 * se <= est.mean_q;
      const bool mean_below_upper = est.mean_q <= est.upper_p;
      const bool ordering = lb.value <= dd + 1e-15 && est.lower <= dd + 1e-15;
      const bool point_ok = lower_below_mean && mean_below_upper && ordering;
      if (!point_ok) {
        std::printf("  info: sigma=%.1f T=%llu eps=%.2f lb=%.3e mean=%.3e upper=%.3e"
                    " det=%.3e  <-- violation\n",
                    c.sigma, static_cast<unsigned long long>(c.T), eps, lb.value, est.mean_q,
                    est.upper_p, dd);
      }
      ok = ok && point_ok;
    }
    std::printf("  info: sigma=%.1f T=%llu checked 5 epsilons (lower-3se <= mean <= upper;"
                " lower bounds <= deterministic delta)\n",
                c.sigma, static_cast<unsigned long long>(c.T));
  }
  return ok;
}

bool c07_pld_validity() {
  AccountingParams params;
  params.sigma = 1.0;
  params.steps = 1;
  params.sampling_prob = 1.0;
  bool ok = true;
  // Bracket of the closed form at full sampling, one step.
  for (double eps : {0.5, 1.0, 2.0}) {
    const double truth = static_cast<double>(closed_form_delta(1.0L, eps));
    const double pess = poisson_delta(params, eps, Direction::Both, PldMode::Pessimistic, 1e-4);
    const double opt = poisson_delta(params, eps, Direction::Both, PldMode::Optimistic, 1e-4);
    const bool point_ok =
        opt <= truth && truth <= pess && pess - truth <= 1e-4 && truth - opt <= 1e-4;
    std::printf("  info: eps=%.2f optimistic=%.8f closed=%.8f pessimistic=%.8f%s\n", eps, opt,
                truth, pess, point_ok ? "" : "  <-- violation");
    ok = ok && point_ok;
  }
  // FFT composition against direct convolution at a coarser lattice.
  {
    const Pld one = poisson_pld_build(1.0, 1.0, Direction::PQ, 1e-3, PldMode::Pessimistic);
    const Pld two = pld_compose(one, one);
    const std::vector<double> direct = convolve_direct(one.mass, one.mass);
    const std::int64_t offset = two.lo - 2 * one.lo;
    double worst = 0.0;
    for (std::size_t i = 0; i < two.mass.size(); ++i) {
      const std::int64_t j = static_cast<std::int64_t>(i) + offset;
      const double ref =
          (j >= 0 && j < static_cast<std::int64_t>(direct.size())) ? direct[j] : 0.0;
      worst = std::max(worst, std::fabs(two.mass[i] - ref));
    }
    const bool conv_ok = worst <= 1e-12;
    std::printf("  info: two-step FFT vs direct convolution: max cell diff %.2e (<=1e-12)%s\n",
                worst, conv_ok ? "" : "  <-- violation");
    ok = ok && conv_ok;
  }
  // Pessimistic dominates optimistic across an epsilon grid.
  {
    bool dom = true;
    for (int i = 0; i < 20; ++i) {
      const double eps = 0.1 + 2.9 * static_cast<double>(i) / 19.0;
      const double pess = poisson_delta(params, eps, Direction::Both, PldMode::Pessimistic, 1e-4);
      const double opt = poisson_delta(params, eps, Direction::Both, PldMode::Optimistic, 1e-4);
      dom = dom && pess >= opt;
    }
    std::printf("  info: pessimistic >= optimistic on the 20-point epsilon grid: %s\n",
                dom ? "yes" : "NO");
    ok = ok && dom;
  }
  return ok;
}

bool c08_curve_ordering_at_scale() {
  const auto t0 = Clock::now();
  AccountingParams params;
  params.sigma = 0.3;
  params.steps = 1000;
  McConfig cfg;
  cfg.m = 10000000;
  cfg.beta = 1e-3;
  cfg.strategy = Strategy::Combined;
  cfg.order_spec = OrderSpec::parse("1..50,60..200:10,250..1000:50");
  cfg.seed = 801;
  // Compose the subsampled pair once per direction; delta read-out per epsilon
  // is then a cheap scan. The coarse 5e-4 lattice only inflates the
  // pessimistic bound, which is the conservative side of every check below.
  const double grid = 5e-4;
  const Pld poisson_pq = pld_self_compose(
      poisson_pld_build(params.sigma, params.poisson_prob(), Direction::PQ, grid,
                        PldMode::Pessimistic),
      params.steps);
  const Pld poisson_qp = pld_self_compose(
      poisson_pld_build(params.sigma, params.poisson_prob(), Direction::QP, grid,
                        PldMode::Pessimistic),
      params.steps);
  bool ok = true;
  const double eps_grid[] = {1.0, 2.0, 3.0, 4.0, 6.0, 8.0, 10.0};
  std::vector<double> bnb_upper;
  for (double eps : eps_grid) {
    const DeltaEstimate pq = estimate_combined(params, eps, Direction::PQ, cfg);
    const DeltaEstimate qp = estimate_combined(params, eps, Direction::QP, cfg);
    const double up = std::max(pq.upper_p, qp.upper_p);
    bnb_upper.push_back(up);
    const double dp = std::max(pld_delta(poisson_pq, eps), pld_delta(poisson_qp, eps));
    const bool gated = dp >= 1e-7;
    const bool point_ok = !gated || up <= dp;
    std::printf("  info: eps=%5.2f bnb-upper=%.6e poisson-pessimistic=%.6e %s%s\n", eps, up, dp,
                gated ? "(compared)" : "(below 1e-7 gate, skipped)",
                point_ok ? "" : "  <-- violation");
    ok = ok && point_ok;
  }
  for (std::size_t i = 0; i < 4; ++i) {
    const double eps = eps_grid[i];
    McConfig scfg;
    scfg.m = 100000;
    scfg.beta = 1e-3;
    scfg.seed = 821 + static_cast<std::uint64_t>(i);
    const DeltaEstimate sh = shuffle_lower_bound(params, eps, Direction::Both, scfg);
    const bool point_ok = sh.lower > bnb_upper[i];
    std::printf("  info: eps=%5.2f shuffle-lower=%.6e vs bnb-upper=%.6e%s\n", eps, sh.lower,
                bnb_upper[i], point_ok ? "" : "  <-- violation");
    ok = ok && point_ok;
  }
  const double total = seconds_since(t0);
  std::printf("  info: total runtime %.0fs (budget 1800s)\n", total);
  return ok && total < 1800.0;
}

bool c09_large_epsilon_crossover() {
  AccountingParams params;
  params.sigma = 0.5;
  params.steps = 10;
  McConfig cfg;
  cfg.m = 1000000;
  cfg.beta = 1e-3;
  cfg.strategy = Strategy::Combined;
  cfg.order_spec = OrderSpec::parse("1..10");
  cfg.seed = 901;
  const Pld opt_pq = pld_self_compose(
      poisson_pld_build(params.sigma, params.poisson_prob(), Direction::PQ, 1e-4,
                        PldMode::Optimistic),
      params.steps);
  const Pld opt_qp = pld_self_compose(
      poisson_pld_build(params.sigma, params.poisson_prob(), Direction::QP, 1e-4,
                        PldMode::Optimistic),
      params.steps);
  for (double eps : {8.0, 9.0, 10.0, 11.0, 12.0, 14.0, 16.0, 18.0, 20.0}) {
    const DeltaEstimate pq = estimate_combined(params, eps, Direction::PQ, cfg);
    const DeltaEstimate qp = estimate_combined(params, eps, Direction::QP, cfg);
    const double up = std::max(pq.upper_p, qp.upper_p);
    const double dp_low = std::max(pld_delta(opt_pq, eps), pld_delta(opt_qp, eps));
    std::printf("  info: eps=%.0f bnb-upper=%.6e poisson-optimistic=%.6e\n", eps, up, dp_low);
    if (up < dp_low) {
      std::printf("  info: crossover exhibited at eps=%.0f\n", eps);
      return true;
    }
  }
  return false;
}

bool c10_calibration() {
  AccountingParams params;
  params.sigma = 1.0;
  params.steps = 1;
  const double eps = 1.0;
  const double truth = static_cast<double>(closed_form_delta(1.0L, 1.0L));
  int violations = 0;
  for (std::uint64_t s = 0; s < 500; ++s) {
    McConfig cfg;
    cfg.m = 10000;
    cfg.beta = 0.05;
    cfg.seed = s;
    cfg.want_lower = false;
    const DeltaEstimate est = estimate_plain(PairKind::BallsAndBins, params, eps, Direction::PQ, cfg);
    if (est.upper_p < truth) ++violations;
  }
  // 500 * 0.05 + 3 * sqrt(500 * 0.05 * 0.95) = 39.62.
  const bool ok = violations <= 39;
  std::printf("  info: %d/500 runs violated upper>=truth (budget 39; nominal rate 25)\n",
              violations);
  return ok;
}

bool c11_determinism_and_merge() {
  AccountingParams params;
  params.sigma = 1.0;
  params.steps = 8;
  const double eps = 1.0;
  McConfig cfg;
  cfg.m = 60ull * 65536ull;  // 3,932,160
  cfg.beta = 1e-3;
  cfg.seed = 77;
  const DeltaEstimate single = estimate_plain(PairKind::BallsAndBins, params, eps, Direction::PQ, cfg);
  std::vector<Partial> partials;
  partials.reserve(60);
  for (std::uint64_t w = 0; w < 60; ++w) {
    partials.push_back(compute_partial(PairKind::BallsAndBins, params, eps, Direction::PQ, cfg,
                                       w * 65536ull, (w + 1) * 65536ull));
  }
  const DeltaEstimate merged = merge_estimates(partials, eps, Direction::PQ, cfg.beta, true);
  const bool bits_ok = std::memcmp(&single.mean_q, &merged.mean_q, sizeof(double)) == 0 &&
                       std::memcmp(&single.upper_p, &merged.upper_p, sizeof(double)) == 0 &&
                       std::memcmp(&single.lower, &merged.lower, sizeof(double)) == 0;
  std::printf("  info: 60-way merge vs single pass: mean=%.17g %s\n", merged.mean_q,
              bits_ok ? "bit-identical" : "MISMATCH");

  const std::string args =
      "curve --sampler bnb --method plain --direction pq --sigma 1 --steps 8 "
      "--epsilons 0.5,1,1.5,2 --m 200000 --beta 1e-3 --seed 3 --format csv";
  std::string run1, run2, run3;
  const int rc1 = run_cli(args + " --workers 1", &run1);
  const int rc2 = run_cli(args + " --workers 1", &run2);
  const int rc3 = run_cli(args + " --workers 3", &run3);
  const bool cli_ok = rc1 == 0 && rc2 == 0 && rc3 == 0 && run1 == run2 && run1 == run3 &&
                      !run1.empty();
  std::printf("  info: CLI curve rerun byte-identical=%s; workers=3 byte-identical=%s\n",
              (rc1 == 0 && rc2 == 0 && run1 == run2) ? "yes" : "NO",
              (rc3 == 0 && run1 == run3) ? "yes" : "NO");
  return bits_ok && cli_ok;
}

bool c12_multi_epoch() {
  bool ok = true;
  // The one-epoch reduction of the per-epoch loss sum is the identity, bitwise.
  {
    RngStream st(121, 0);
    bool bits = true;
    for (int i = 0; i < 1000; ++i) {
      double x[4];
      for (double& v : x) v = st.gaussian(1.0);
      const double one = loss_bnb_pq(x, 4, 1.0);
      const double folded = loss_multi_epoch(&one, 1);
      bits = bits && std::memcmp(&one, &folded, sizeof(double)) == 0;
    }
    AccountingParams params;
    params.sigma = 1.0;
    params.steps = 4;
    params.epochs = 1;
    McConfig cfg;
    cfg.m = 100000;
    cfg.seed = 9;
    const DeltaEstimate a = estimate_plain(PairKind::BallsAndBins, params, 1.0, Direction::PQ, cfg);
    const DeltaEstimate b = estimate_plain(PairKind::BallsAndBins, params, 1.0, Direction::PQ, cfg);
    const bool est_bits = std::memcmp(&a.mean_q, &b.mean_q, sizeof(double)) == 0;
    std::printf("  info: one-epoch loss fold bitwise identity=%s; repeated estimate bitwise"
                " identity=%s\n",
                bits ? "yes" : "NO", est_bits ? "yes" : "NO");
    ok = ok && bits && est_bits;
  }
  // Two epochs of the T = 1 pair against the two-dimensional quadrature.
  AccountingParams params;
  params.sigma = 1.0;
  params.steps = 1;
  params.epochs = 2;
  int k = 0;
  for (double eps : {0.5, 1.0, 2.0}) {
    const QuadOracle oracle = quad_oracle(eps);
    for (Direction dir : {Direction::PQ, Direction::QP}) {
      McConfig cfg;
      cfg.m = 4000000;
      cfg.beta = 1e-3;
      cfg.seed = 1201 + static_cast<std::uint64_t>(k++);
      const DeltaEstimate est = estimate_plain(PairKind::BallsAndBins, params, eps, dir, cfg);
      const double truth = dir == Direction::PQ ? oracle.ep2_pq : oracle.ep2_qp;
      const double err = std::fabs(est.mean_q - truth);
      const bool point_ok = err <= 2e-3;
      std::printf("  info: epochs=2 eps=%.2f dir=%s mean=%.6e quadrature=%.6e |err|=%.2e%s\n",
                  eps, to_string(dir), est.mean_q, truth, err, point_ok ? "" : "  <-- violation");
      ok = ok && point_ok;
    }
  }
  return ok;
}

struct Criterion {
  int index;
  const char* title;
  bool (*fn)();
};

const Criterion kCriteria[] = {
    {1, "closed-form oracle at T=1", c01_closed_form_oracle},
    {2, "quadrature oracle at T=2", c02_quadrature_oracle},
    {3, "order-statistics sampler vs sort oracle", c03_order_stats_sampler},
    {4, "surrogate dominance and full-order equality", c04_surrogate_dominance},
    {5, "importance-sampling consistency and gain", c05_importance_gain},
    {6, "lower-bound sandwich and deterministic ordering", c06_sandwich},
    {7, "per-step loss-distribution bracket and convolution identity", c07_pld_validity},
    {8, "curve ordering at scale (sigma=0.3, T=1000)", c08_curve_ordering_at_scale},
    {9, "large-epsilon crossover", c09_large_epsilon_crossover},
    {10, "upper-bound calibration over repeated runs", c10_calibration},
    {11, "determinism, 60-way merge, and CLI byte stability", c11_determinism_and_merge},
    {12, "multi-epoch composition", c12_multi_epoch},
};

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::fprintf(stderr, "usage: %s <path-to-cli-binary> [criterion 1..12]\n", argv[0]);
    return 2;
  }
  g_cli = argv[1];
  int which = 0;
  if (argc >= 3) {
    which = std::atoi(argv[2]);
    if (which < 1 || which > 12) {
      std::fprintf(stderr, "criterion index must be in 1..12\n");
      return 2;
    }
  }
  int ran = 0, passed = 0;
  for (const Criterion& c : kCriteria) {
    if (which != 0 && c.index != which) continue;
    const auto t0 = Clock::now();
    const bool ok = c.fn();
    ++ran;
    passed += ok ? 1 : 0;
    std::printf("%s: C%02d %s [%.1fs]\n", ok ? "PASS" : "FAIL", c.index, c.title,
                seconds_since(t0));
    std::fflush(stdout);
  }
  if (which == 0) {
    std::printf("acceptance: %d/%d criteria passed\n", passed, ran);
  }
  return passed == ran ? 0 : 1;
}
