#include "dpacct/mc.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstring>
#include <limits>
#include <thread>

#include "dpacct/math.hpp"

namespace dpacct {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::uint64_t kChunk = 1 << 16;
}  // namespace

const char* to_string(Direction d) {
  switch (d) {
    case Direction::PQ: return "pq";
    case Direction::QP: return "qp";
    case Direction::Both: return "both";
  }
  return "?";
}

const char* to_string(Strategy s) {
  switch (s) {
    case Strategy::Plain: return "plain";
    case Strategy::Importance: return "importance";
    case Strategy::OrderStats: return "order-stats";
    case Strategy::Combined: return "combined";
  }
  return "?";
}

const char* to_string(PairKind p) {
  switch (p) {
    case PairKind::BallsAndBins: return "bnb";
    case PairKind::Deterministic: return "deterministic";
    case PairKind::Poisson: return "poisson";
    case PairKind::ShuffleDominated: return "shuffle";
  }
  return "?";
}

double AccountingParams::poisson_prob() const {
  if (std::isnan(sampling_prob)) return 1.0 / static_cast<double>(steps);
  return sampling_prob;
}

void AccountingParams::validate() const {
  if (!(sigma > 0.0)) throw ConfigError("params: sigma must be positive");
  if (steps == 0) throw ConfigError("params: steps must be positive");
  if (epochs == 0) throw ConfigError("params: epochs must be positive");
  if (!std::isnan(sampling_prob) && !(sampling_prob > 0.0 && sampling_prob <= 1.0)) {
    throw ConfigError("params: sampling_prob must lie in (0, 1]");
  }
}

void McConfig::validate() const {
  if (m == 0) throw ConfigError("mc: m must be positive");
  if (!(beta > 0.0 && beta < 1.0)) throw ConfigError("mc: beta must lie in (0, 1)");
  if (workers == 0) throw ConfigError("mc: workers must be positive");
  if ((strategy == Strategy::OrderStats || strategy == Strategy::Combined) &&
      order_spec.empty()) {
    throw ConfigError("mc: order spec required for order-statistics strategies");
  }
}

ImportanceEvent make_importance_event(Direction dir, const AccountingParams& params,
                                      double epsilon) {
  params.validate();
  if (dir == Direction::Both) throw ConfigError("importance event: direction must be one-sided");
  const double s2 = params.sigma * params.sigma;
  const double T = static_cast<double>(params.steps);
  ImportanceEvent ev;
  ev.direction = dir;
  if (dir == Direction::PQ) {
    // Event {max(x_1 - 1, max_{t>1} x_t) >= C}: in centered coordinates the
    // max of T i.i.d. N(0, sigma^2) exceeds C, so P(E) = 1 - Phi_sigma(C)^T.
    ev.threshold = 0.5 + s2 * (epsilon - std::log1p(std::expm1(1.0 / s2) / T));
    const double log_phi = log_gaussian_cdf(ev.threshold / params.sigma);
    const double t_log_phi = T * log_phi;
    if (t_log_phi == 0.0) {
      // CDF rounded to 1; recover the tail from the survival function.
      const double log_sf = log_gaussian_sf(ev.threshold / params.sigma);
      ev.log_event_probability = std::log(T) + log_sf;
      ev.event_probability = std::exp(ev.log_event_probability);
    } else {
      ev.event_probability = -std::expm1(t_log_phi);
      ev.log_event_probability = std::log(ev.event_probability);
    }
  } else {
    // Event {max_t x_t <= C}: the clipped integrand vanishes unless
    // log T + 1/(2 sigma^2) - logsumexp(x/sigma^2) > epsilon, which forces
    // max x < sigma^2 (log T + 1/(2 sigma^2) - epsilon) = C. P(E) = Phi_sigma(C)^T.
    ev.threshold = 0.5 - s2 * (epsilon - std::log(T));
    const double log_phi = log_gaussian_cdf(ev.threshold / params.sigma);
    ev.log_event_probability = T * log_phi;
    ev.event_probability = std::exp(ev.log_event_probability);
  }
  return ev;
}

namespace {

inline double clipped_integrand(double epsilon, double loss) {
  const double d = epsilon - loss;
  return d < 0.0 ? -std::expm1(d) : 0.0;
}

// Online logsumexp accumulator (one exp per element, no buffer).
struct OnlineLse {
  double hi = -kInf;
  double s = 0.0;
  inline void add(double v) {
    if (v == -kInf) return;  // exp(v) = 0 contributes nothing
    if (v <= hi) {
      s += std::exp(v - hi);
    } else {
      s = s * std::exp(hi - v) + 1.0;
      hi = v;
    }
  }
  inline double value() const { return hi + std::log(s); }
};

struct Workspace {
  std::vector<double> buf;
  double* get(std::size_t n) {
    if (buf.size() < n) buf.resize(n);
    return buf.data();
  }
};

// Head of the conditional-max construction: the maximum of T i.i.d.
// N(0, sigma^2) conditioned to be at least C, returned as its CDF value
// (log_u_star), its position, and its value v. log_a = T * log Phi_sigma(C).
struct CondMaxHead {
  double log_u_star;
  double u_star;
  double v;
  std::uint64_t t_star;
};

inline CondMaxHead draw_cond_max_head(std::uint64_t T, double sigma, double log_a,
                                      RngStream& rng) {
  const double w = rng.uniform();
  double log_u_star;
  if (log_a < -700.0) {
    // Conditioning event is (nearly) sure: u*^T ~ Unif(0, 1).
    log_u_star = std::log(w) / static_cast<double>(T);
  } else {
    // u*^T ~ Unif[a, 1] with a = e^{log_a}; stable when a is close to 1.
    log_u_star =
        (log_a + std::log1p(w * std::expm1(-log_a))) / static_cast<double>(T);
  }
  CondMaxHead h;
  h.log_u_star = log_u_star;
  h.u_star = std::exp(log_u_star);
  const double q = -std::expm1(log_u_star);  // 1 - u*, full relative precision
  h.v = (q < 0.5) ? -sigma * gaussian_inv_cdf(q)
                  : sigma * gaussian_inv_cdf(h.u_star);
  h.t_star = rng.uniform_below(T);
  return h;
}

// Order statistics y^(k_1) >= ... >= y^(k_r) of R i.i.d. N(0, sigma^2) draws,
// optionally conditioned below a cap with CDF value e^{log_cap_cdf}.
void order_stats_impl(std::uint64_t R, const std::vector<std::uint64_t>& orders, double sigma,
                      double log_cap_cdf, RngStream& rng, double* out) {
  double log_cum = log_cap_cdf;
  std::uint64_t prev = 0;
  for (std::size_t i = 0; i < orders.size(); ++i) {
    const std::uint64_t k = orders[i];
    const double a = static_cast<double>(R - k + 1);
    const double b = static_cast<double>(k - prev);
    double log_z;
    if (b == 1.0) {
      log_z = std::log(rng.uniform()) / a;
    } else {
      const double x = gamma_sample(a, rng);
      const double y = gamma_sample(b, rng);
      log_z = std::log(x / (x + y));
    }
    log_cum += log_z;
    out[i] = sigma * gaussian_inv_cdf(std::exp(log_cum));
    prev = k;
  }
}

// Everything an integrand evaluation needs, precomputed once per estimate.
struct EngineCtx {
  PairKind pair = PairKind::BallsAndBins;
  Direction dir = Direction::PQ;
  Strategy strategy = Strategy::Plain;
  double epsilon = 0.0;
  double sigma = 1.0;
  double inv_s2 = 1.0;
  double half_inv_s2 = 0.5;
  std::uint64_t T = 1;
  std::uint64_t epochs = 1;
  double log_T = 0.0;

  // Poisson pair.
  double gamma = 0.0;
  double log_gamma = -kInf;
  double log_1m_gamma = 0.0;

  // Importance / combined.
  ImportanceEvent event;
  double log_phi_event = 0.0;  // log Phi_sigma(C)
  double log_a = 0.0;          // T * log Phi_sigma(C)

  // Order-statistics strategies: ranks plus precomputed log coefficients.
  // QP uses gaps k_i - k_{i-1} over R = T ranks; PQ uses k_{i+1} - k_i with
  // k_{r+1} = R + 1 over the coordinates not pinned to an exact value.
  std::vector<std::uint64_t> qp_orders;
  std::vector<double> qp_log_gap;
  std::vector<std::uint64_t> pq_orders_1;  // R = T - 1 (plain PQ & combined t* = first)
  std::vector<double> pq_log_gap_1;
  std::vector<std::uint64_t> pq_orders_2;  // R = T - 2 (combined, t* elsewhere)
  std::vector<double> pq_log_gap_2;
};

void fill_qp_gaps(const OrderSpec& spec, std::vector<std::uint64_t>& orders,
                  std::vector<double>& log_gap) {
  orders = spec.orders;
  log_gap.resize(orders.size());
  std::uint64_t prev = 0;
  for (std::size_t i = 0; i < orders.size(); ++i) {
    log_gap[i] = std::log(static_cast<double>(orders[i] - prev));
    prev = orders[i];
  }
}

void fill_pq_gaps(const OrderSpec& spec, std::uint64_t R, std::vector<std::uint64_t>& orders,
                  std::vector<double>& log_gap) {
  orders = spec.orders;
  log_gap.resize(orders.size());
  for (std::size_t i = 0; i < orders.size(); ++i) {
    const std::uint64_t next = (i + 1 < orders.size()) ? orders[i + 1] : R + 1;
    log_gap[i] = std::log(static_cast<double>(next - orders[i]));
  }
}

// logsumexp of exact coordinates (x * inv_s2 terms) plus weighted order-stat
// terms (log_gap + y * inv_s2).
inline double lse_exact_plus_orders(const double* exact, std::size_t n_exact,
                                    const double* y, const double* log_gap, std::size_t r,
                                    double inv_s2) {
  OnlineLse lse;
  for (std::size_t j = 0; j < n_exact; ++j) lse.add(exact[j] * inv_s2);
  for (std::size_t i = 0; i < r; ++i) lse.add(log_gap[i] + y[i] * inv_s2);
  return lse.value();
}

double plain_epoch_loss(const EngineCtx& c, RngStream& rng) {
  switch (c.pair) {
    case PairKind::Deterministic: {
      const double x = c.sigma * rng.gaussian() + (c.dir == Direction::PQ ? 1.0 : 0.0);
      const double l = (x - 0.5) * c.inv_s2;
      return c.dir == Direction::PQ ? l : -l;
    }
    case PairKind::BallsAndBins: {
      OnlineLse lse;
      for (std::uint64_t t = 0; t < c.T; ++t) {
        double x = c.sigma * rng.gaussian();
        if (t == 0 && c.dir == Direction::PQ) x += 1.0;
        lse.add(x * c.inv_s2);
      }
      const double l = lse.value() - c.log_T - c.half_inv_s2;
      return c.dir == Direction::PQ ? l : -l;
    }
    case PairKind::Poisson: {
      double total = 0.0;
      for (std::uint64_t t = 0; t < c.T; ++t) {
        double x;
        if (c.dir == Direction::PQ) {
          const double shift = (rng.uniform() < c.gamma) ? 1.0 : 0.0;
          x = shift + c.sigma * rng.gaussian();
        } else {
          x = c.sigma * rng.gaussian();
        }
        const double l = log_add_exp(c.log_1m_gamma, c.log_gamma + (x - 0.5) * c.inv_s2);
        total += (c.dir == Direction::PQ) ? l : -l;
      }
      return total;
    }
    case PairKind::ShuffleDominated: {
      const double shift = (c.dir == Direction::PQ) ? 2.0 : 1.0;
      OnlineLse num, den;
      for (std::uint64_t t = 0; t < c.T; ++t) {
        double x = c.sigma * rng.gaussian();
        if (t == 0) x += shift;
        num.add((2.0 * x - 2.0) * c.inv_s2);
        den.add((x - 0.5) * c.inv_s2);
      }
      const double l = num.value() - den.value();
      return c.dir == Direction::PQ ? l : -l;
    }
  }
  throw ConfigError("unknown pair kind");
}

double order_stats_epoch_loss(const EngineCtx& c, RngStream& rng, Workspace& ws) {
  if (c.dir == Direction::QP) {
    const std::size_t r = c.qp_orders.size();
    double* y = ws.get(r);
    order_stats_impl(c.T, c.qp_orders, c.sigma, 0.0, rng, y);
    OnlineLse lse;
    for (std::size_t i = 0; i < r; ++i) lse.add(c.qp_log_gap[i] + y[i] * c.inv_s2);
    return c.log_T + c.half_inv_s2 - lse.value();
  }
  const double x1 = 1.0 + c.sigma * rng.gaussian();
  const std::size_t r = c.pq_orders_1.size();
  double* y = ws.get(r);
  order_stats_impl(c.T - 1, c.pq_orders_1, c.sigma, 0.0, rng, y);
  const double lse =
      lse_exact_plus_orders(&x1, 1, y, c.pq_log_gap_1.data(), r, c.inv_s2);
  return lse - c.log_T - c.half_inv_s2;
}

double importance_integrand(const EngineCtx& c, RngStream& rng) {
  if (c.dir == Direction::QP) {
    // All coordinates i.i.d. N(0, sigma^2) conditioned below the threshold.
    const double cdf_c = std::exp(c.log_phi_event);
    OnlineLse lse;
    for (std::uint64_t t = 0; t < c.T; ++t) {
      const double x = c.sigma * gaussian_inv_cdf(rng.uniform() * cdf_c);
      lse.add(x * c.inv_s2);
    }
    const double loss = c.log_T + c.half_inv_s2 - lse.value();
    return clipped_integrand(c.epsilon, loss);
  }
  const CondMaxHead h = draw_cond_max_head(c.T, c.sigma, c.log_a, rng);
  OnlineLse lse;
  for (std::uint64_t t = 0; t < c.T; ++t) {
    double x = (t == h.t_star) ? h.v : c.sigma * gaussian_inv_cdf(rng.uniform() * h.u_star);
    if (t == 0) x += 1.0;
    lse.add(x * c.inv_s2);
  }
  const double loss = lse.value() - c.log_T - c.half_inv_s2;
  return clipped_integrand(c.epsilon, loss);
}

double combined_integrand(const EngineCtx& c, RngStream& rng, Workspace& ws) {
  if (c.dir == Direction::QP) {
    const std::size_t r = c.qp_orders.size();
    double* y = ws.get(r);
    order_stats_impl(c.T, c.qp_orders, c.sigma, c.log_phi_event, rng, y);
    OnlineLse lse;
    for (std::size_t i = 0; i < r; ++i) lse.add(c.qp_log_gap[i] + y[i] * c.inv_s2);
    const double loss = c.log_T + c.half_inv_s2 - lse.value();
    return clipped_integrand(c.epsilon, loss);
  }
  const CondMaxHead h = draw_cond_max_head(c.T, c.sigma, c.log_a, rng);
  double loss;
  if (h.t_star == 0) {
    // The conditioned maximum sits on the shifted coordinate.
    const double x1 = h.v + 1.0;
    const std::size_t r = c.pq_orders_1.size();
    double* y = ws.get(r);
    order_stats_impl(c.T - 1, c.pq_orders_1, c.sigma, h.log_u_star, rng, y);
    const double lse =
        lse_exact_plus_orders(&x1, 1, y, c.pq_log_gap_1.data(), r, c.inv_s2);
    loss = lse - c.log_T - c.half_inv_s2;
  } else {
    // The maximum v sits on an unshifted coordinate; the shifted coordinate is
    // a truncated Gaussian below v (so below v + 1 after the shift).
    const double x1 = 1.0 + c.sigma * gaussian_inv_cdf(rng.uniform() * h.u_star);
    const double exact[2] = {x1, h.v};
    const std::size_t r = c.pq_orders_2.size();
    double* y = ws.get(r);
    order_stats_impl(c.T - 2, c.pq_orders_2, c.sigma, h.log_u_star, rng, y);
    const double lse =
        lse_exact_plus_orders(exact, 2, y, c.pq_log_gap_2.data(), r, c.inv_s2);
    loss = lse - c.log_T - c.half_inv_s2;
  }
  return clipped_integrand(c.epsilon, loss);
}

double sample_integrand(const EngineCtx& c, RngStream& rng, Workspace& ws) {
  switch (c.strategy) {
    case Strategy::Plain: {
      double loss = 0.0;
      for (std::uint64_t e = 0; e < c.epochs; ++e) loss += plain_epoch_loss(c, rng);
      return clipped_integrand(c.epsilon, loss);
    }
    case Strategy::OrderStats: {
      double loss = 0.0;
      for (std::uint64_t e = 0; e < c.epochs; ++e) loss += order_stats_epoch_loss(c, rng, ws);
      return clipped_integrand(c.epsilon, loss);
    }
    case Strategy::Importance:
      return importance_integrand(c, rng);
    case Strategy::Combined:
      return combined_integrand(c, rng, ws);
  }
  throw ConfigError("unknown strategy");
}

inline std::uint64_t stream_tag(Direction dir) {
  return (dir == Direction::QP ? std::uint64_t{1} : std::uint64_t{0}) << 62;
}

// Sum of the integrand over sample indices [begin, end), folded per chunk in
// index order so the result does not depend on the worker count.
double chunked_sum(const EngineCtx& ctx, std::uint64_t seed, std::uint64_t begin,
                   std::uint64_t end, unsigned workers) {
  const std::uint64_t tag = stream_tag(ctx.dir);
  const std::uint64_t first_chunk = begin / kChunk;
  const std::uint64_t last_chunk = (end + kChunk - 1) / kChunk;
  const std::uint64_t n_chunks = last_chunk - first_chunk;
  std::vector<double> chunk_sums(n_chunks, 0.0);
  std::atomic<std::uint64_t> next{0};
  auto work = [&]() {
    Workspace ws;
    for (;;) {
      const std::uint64_t idx = next.fetch_add(1, std::memory_order_relaxed);
      if (idx >= n_chunks) break;
      const std::uint64_t c = first_chunk + idx;
      const std::uint64_t lo = std::max(begin, c * kChunk);
      const std::uint64_t hi = std::min(end, (c + 1) * kChunk);
      NeumaierSum acc;
      for (std::uint64_t i = lo; i < hi; ++i) {
        RngStream rng(seed, tag | i);
        acc.add(sample_integrand(ctx, rng, ws));
      }
      chunk_sums[idx] = acc.value();
    }
  };
  if (workers <= 1 || n_chunks <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    const unsigned n = std::min<std::uint64_t>(workers, n_chunks);
    pool.reserve(n);
    for (unsigned wi = 0; wi < n; ++wi) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  NeumaierSum total;
  for (const double s : chunk_sums) total.add(s);
  return total.value();
}

DeltaEstimate assemble(const EngineCtx& ctx, const McConfig& cfg, double sum,
                       const ImportanceEvent* event) {
  DeltaEstimate est;
  est.epsilon = ctx.epsilon;
  est.direction = ctx.dir;
  est.m_used = cfg.m;
  est.beta_used = cfg.beta;
  est.strategy_used = ctx.strategy;
  est.pair_used = ctx.pair;
  est.seed = cfg.seed;
  est.workers_used = cfg.workers;
  double mean = sum / static_cast<double>(cfg.m);
  mean = std::clamp(mean, 0.0, 1.0);
  est.raw_mean = mean;
  const double scale = event ? event->event_probability : 1.0;
  est.mean_q = mean * scale;
  est.upper_p = kl_ucb(mean, cfg.m, cfg.beta) * scale;
  est.has_lower = cfg.want_lower;
  est.lower = cfg.want_lower ? kl_lcb(mean, cfg.m, cfg.beta) * scale : 0.0;
  if (event) {
    est.event_probability = event->event_probability;
    est.log_event_probability = event->log_event_probability;
  }
  return est;
}

DeltaEstimate certificate_estimate(const EngineCtx& ctx, const McConfig& cfg,
                                   const ImportanceEvent& event) {
  DeltaEstimate est;
  est.epsilon = ctx.epsilon;
  est.direction = ctx.dir;
  est.m_used = 0;
  est.beta_used = cfg.beta;
  est.strategy_used = ctx.strategy;
  est.pair_used = ctx.pair;
  est.seed = cfg.seed;
  est.workers_used = cfg.workers;
  est.certificate = true;
  est.mean_q = 0.0;
  est.raw_mean = 0.0;
  // The integrand vanishes off the event, so delta <= P(E); report the
  // smallest representable nonzero bound when even that underflows.
  est.upper_p = std::max(event.event_probability, std::numeric_limits<double>::denorm_min());
  est.has_lower = cfg.want_lower;
  est.lower = 0.0;
  est.event_probability = event.event_probability;
  est.log_event_probability = event.log_event_probability;
  return est;
}

EngineCtx make_ctx(PairKind pair, const AccountingParams& params, double epsilon,
                   Direction dir, Strategy strategy) {
  EngineCtx c;
  c.pair = pair;
  c.dir = dir;
  c.strategy = strategy;
  c.epsilon = epsilon;
  c.sigma = params.sigma;
  c.inv_s2 = 1.0 / (params.sigma * params.sigma);
  c.half_inv_s2 = 0.5 * c.inv_s2;
  c.T = params.steps;
  c.epochs = params.epochs;
  c.log_T = std::log(static_cast<double>(params.steps));
  if (pair == PairKind::Poisson) {
    c.gamma = params.poisson_prob();
    if (!(c.gamma > 0.0 && c.gamma <= 1.0)) {
      throw ConfigError("poisson pair: sampling probability must lie in (0, 1]");
    }
    c.log_gamma = std::log(c.gamma);
    c.log_1m_gamma = (c.gamma == 1.0) ? -kInf : std::log1p(-c.gamma);
  }
  return c;
}

void attach_event(EngineCtx& c, const AccountingParams& params, double epsilon,
                  Direction dir) {
  c.event = make_importance_event(dir, params, epsilon);
  c.log_phi_event = log_gaussian_cdf(c.event.threshold / params.sigma);
  c.log_a = static_cast<double>(params.steps) * c.log_phi_event;
}

void check_one_sided(Direction dir) {
  if (dir == Direction::Both) {
    throw ConfigError("estimator: direction must be pq or qp (use estimate_delta for both)");
  }
}

DeltaEstimate combine_both(const DeltaEstimate& pq, const DeltaEstimate& qp) {
  // delta(eps) = max of the two divergences, so the field-wise max of valid
  // bounds is a valid bound of the max.
  const DeltaEstimate& lead = (pq.upper_p >= qp.upper_p) ? pq : qp;
  DeltaEstimate est = lead;
  est.direction = Direction::Both;
  est.mean_q = std::max(pq.mean_q, qp.mean_q);
  est.upper_p = std::max(pq.upper_p, qp.upper_p);
  est.has_lower = pq.has_lower && qp.has_lower;
  est.lower = est.has_lower ? std::max(pq.lower, qp.lower) : 0.0;
  est.certificate = pq.certificate && qp.certificate;
  return est;
}

}  // namespace

DeltaEstimate estimate_plain(PairKind pair, const AccountingParams& params, double epsilon,
                             Direction dir, const McConfig& cfg) {
  params.validate();
  cfg.validate();
  check_one_sided(dir);
  if (cfg.strategy != Strategy::Plain) throw ConfigError("estimate_plain: strategy mismatch");
  EngineCtx ctx = make_ctx(pair, params, epsilon, dir, Strategy::Plain);
  const double sum = chunked_sum(ctx, cfg.seed, 0, cfg.m, cfg.workers);
  return assemble(ctx, cfg, sum, nullptr);
}

DeltaEstimate estimate_importance(const AccountingParams& params, double epsilon,
                                  Direction dir, const McConfig& cfg) {
  params.validate();
  cfg.validate();
  check_one_sided(dir);
  if (cfg.strategy != Strategy::Importance) {
    throw ConfigError("estimate_importance: strategy mismatch");
  }
  if (params.epochs != 1) {
    throw ConfigError("importance sampling supports a single epoch only");
  }
  EngineCtx ctx = make_ctx(PairKind::BallsAndBins, params, epsilon, dir, Strategy::Importance);
  attach_event(ctx, params, epsilon, dir);
  if (ctx.event.event_probability == 0.0) return certificate_estimate(ctx, cfg, ctx.event);
  const double sum = chunked_sum(ctx, cfg.seed, 0, cfg.m, cfg.workers);
  return assemble(ctx, cfg, sum, &ctx.event);
}

DeltaEstimate estimate_order_stats(const AccountingParams& params, double epsilon,
                                   Direction dir, const McConfig& cfg) {
  params.validate();
  cfg.validate();
  check_one_sided(dir);
  if (cfg.strategy != Strategy::OrderStats) {
    throw ConfigError("estimate_order_stats: strategy mismatch");
  }
  EngineCtx ctx = make_ctx(PairKind::BallsAndBins, params, epsilon, dir, Strategy::OrderStats);
  if (dir == Direction::QP) {
    cfg.order_spec.validate(params.steps, /*require_rank_one=*/false);
    fill_qp_gaps(cfg.order_spec, ctx.qp_orders, ctx.qp_log_gap);
  } else {
    cfg.order_spec.validate(params.steps - 1, /*require_rank_one=*/true);
    fill_pq_gaps(cfg.order_spec, params.steps - 1, ctx.pq_orders_1, ctx.pq_log_gap_1);
  }
  const double sum = chunked_sum(ctx, cfg.seed, 0, cfg.m, cfg.workers);
  return assemble(ctx, cfg, sum, nullptr);
}

DeltaEstimate estimate_combined(const AccountingParams& params, double epsilon,
                                Direction dir, const McConfig& cfg) {
  params.validate();
  cfg.validate();
  check_one_sided(dir);
  if (cfg.strategy != Strategy::Combined) {
    throw ConfigError("estimate_combined: strategy mismatch");
  }
  if (params.epochs != 1) {
    throw ConfigError("combined sampling supports a single epoch only");
  }
  EngineCtx ctx = make_ctx(PairKind::BallsAndBins, params, epsilon, dir, Strategy::Combined);
  attach_event(ctx, params, epsilon, dir);
  if (ctx.event.event_probability == 0.0) return certificate_estimate(ctx, cfg, ctx.event);
  if (dir == Direction::QP) {
    const OrderSpec spec = cfg.order_spec.clipped(params.steps);
    spec.validate(params.steps, /*require_rank_one=*/false);
    fill_qp_gaps(spec, ctx.qp_orders, ctx.qp_log_gap);
  } else {
    const OrderSpec spec1 = cfg.order_spec.clipped(params.steps - 1);
    spec1.validate(params.steps - 1, /*require_rank_one=*/params.steps > 1);
    fill_pq_gaps(spec1, params.steps - 1, ctx.pq_orders_1, ctx.pq_log_gap_1);
    if (params.steps >= 2) {
      const OrderSpec spec2 = cfg.order_spec.clipped(params.steps - 2);
      spec2.validate(params.steps - 2, /*require_rank_one=*/params.steps > 2);
      fill_pq_gaps(spec2, params.steps - 2, ctx.pq_orders_2, ctx.pq_log_gap_2);
    }
  }
  const double sum = chunked_sum(ctx, cfg.seed, 0, cfg.m, cfg.workers);
  return assemble(ctx, cfg, sum, &ctx.event);
}

DeltaEstimate estimate_delta(PairKind pair, const AccountingParams& params, double epsilon,
                             Direction dir, const McConfig& cfg) {
  if (dir == Direction::Both) {
    const DeltaEstimate pq = estimate_delta(pair, params, epsilon, Direction::PQ, cfg);
    const DeltaEstimate qp = estimate_delta(pair, params, epsilon, Direction::QP, cfg);
    return combine_both(pq, qp);
  }
  switch (cfg.strategy) {
    case Strategy::Plain:
      return estimate_plain(pair, params, epsilon, dir, cfg);
    case Strategy::Importance:
      if (pair != PairKind::BallsAndBins) {
        throw ConfigError("importance sampling is defined for the balls-and-bins pair only");
      }
      return estimate_importance(params, epsilon, dir, cfg);
    case Strategy::OrderStats:
      if (pair != PairKind::BallsAndBins) {
        throw ConfigError("order-statistics sampling is defined for the balls-and-bins pair only");
      }
      return estimate_order_stats(params, epsilon, dir, cfg);
    case Strategy::Combined:
      if (pair != PairKind::BallsAndBins) {
        throw ConfigError("combined sampling is defined for the balls-and-bins pair only");
      }
      return estimate_combined(params, epsilon, dir, cfg);
  }
  throw ConfigError("unknown strategy");
}

void sample_conditional_max(std::uint64_t T, double C, double sigma, RngStream& rng,
                            double* out) {
  if (T == 0 || !(sigma > 0.0)) throw ConfigError("conditional max: T and sigma must be positive");
  const double log_phi = log_gaussian_cdf(C / sigma);
  const double log_a = static_cast<double>(T) * log_phi;
  if (log_a == 0.0) {
    throw NumericalRegimeError("conditional max: event probability underflows");
  }
  const CondMaxHead h = draw_cond_max_head(T, sigma, log_a, rng);
  for (std::uint64_t t = 0; t < T; ++t) {
    out[t] = (t == h.t_star) ? h.v : sigma * gaussian_inv_cdf(rng.uniform() * h.u_star);
  }
}

void sample_order_stats(std::uint64_t R, const OrderSpec& spec, double sigma, RngStream& rng,
                        double* out) {
  if (!(sigma > 0.0)) throw ConfigError("order stats: sigma must be positive");
  spec.validate(R, /*require_rank_one=*/false);
  order_stats_impl(R, spec.orders, sigma, 0.0, rng, out);
}

void sample_order_stats_truncated(std::uint64_t R, const OrderSpec& spec, double sigma,
                                  double cap, RngStream& rng, double* out) {
  if (!(sigma > 0.0)) throw ConfigError("order stats: sigma must be positive");
  spec.validate(R, /*require_rank_one=*/false);
  order_stats_impl(R, spec.orders, sigma, log_gaussian_cdf(cap / sigma), rng, out);
}

DeltaEstimate merge_estimates(const std::vector<Partial>& partials, double epsilon,
                              Direction dir, double beta, bool want_lower,
                              const ImportanceEvent* event) {
  if (partials.empty()) throw ConfigError("merge: no partials");
  if (!(beta > 0.0 && beta < 1.0)) throw ConfigError("merge: beta must lie in (0, 1)");
  check_one_sided(dir);
  NeumaierSum acc;
  std::uint64_t m = 0;
  for (const auto& p : partials) {
    if (p.fingerprint != partials.front().fingerprint) {
      throw ConfigError("merge: partials come from different configurations");
    }
    acc.add(p.sum);
    m += p.m;
  }
  if (m == 0) throw ConfigError("merge: no samples");
  DeltaEstimate est;
  est.epsilon = epsilon;
  est.direction = dir;
  est.m_used = m;
  est.beta_used = beta;
  double mean = acc.value() / static_cast<double>(m);
  mean = std::clamp(mean, 0.0, 1.0);
  est.raw_mean = mean;
  const double scale = event ? event->event_probability : 1.0;
  est.mean_q = mean * scale;
  est.upper_p = kl_ucb(mean, m, beta) * scale;
  est.has_lower = want_lower;
  est.lower = want_lower ? kl_lcb(mean, m, beta) * scale : 0.0;
  if (event) {
    est.event_probability = event->event_probability;
    est.log_event_probability = event->log_event_probability;
  }
  return est;
}

std::uint64_t partial_fingerprint(PairKind pair, const AccountingParams& params,
                                  double epsilon, Direction dir, Strategy strategy,
                                  std::uint64_t seed) {
  auto mix = [](std::uint64_t h, std::uint64_t v) {
    h ^= v;
    h *= 0x100000001b3ull;
    return h;
  };
  std::uint64_t h = 0xcbf29ce484222325ull;
  h = mix(h, static_cast<std::uint64_t>(pair));
  h = mix(h, static_cast<std::uint64_t>(dir));
  h = mix(h, static_cast<std::uint64_t>(strategy));
  h = mix(h, seed);
  h = mix(h, params.steps);
  h = mix(h, params.epochs);
  h = mix(h, std::bit_cast<std::uint64_t>(params.sigma));
  h = mix(h, std::bit_cast<std::uint64_t>(params.sampling_prob));
  h = mix(h, std::bit_cast<std::uint64_t>(epsilon));
  return h;
}

Partial compute_partial(PairKind pair, const AccountingParams& params, double epsilon,
                        Direction dir, const McConfig& cfg, std::uint64_t begin,
                        std::uint64_t end) {
  params.validate();
  cfg.validate();
  check_one_sided(dir);
  if (begin >= end) throw ConfigError("compute_partial: empty sample range");
  if (cfg.strategy != Strategy::Plain) {
    throw ConfigError("compute_partial: only the plain strategy is exposed for ranged sums");
  }
  EngineCtx ctx = make_ctx(pair, params, epsilon, dir, cfg.strategy);
  Partial p;
  p.sum = chunked_sum(ctx, cfg.seed, begin, end, cfg.workers);
  p.m = end - begin;
  p.fingerprint = partial_fingerprint(pair, params, epsilon, dir, cfg.strategy, cfg.seed);
  return p;
}

}  // namespace dpacct
