// Command-line surface for the accounting library.
//
// Subcommands: account (single-epsilon query), curve (epsilon sweep),
// simulate-sampler (batch assignment draws + summary statistics),
// truncation-delta (batch-cap penalty).
//
// Exit codes: 0 success, 2 configuration error, 3 numerical-regime error.
// Standard output carries data only; diagnostics go to standard error.

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "dpacct/analytic.hpp"
#include "dpacct/math.hpp"
#include "dpacct/mc.hpp"
#include "dpacct/samplers.hpp"
#include "dpacct/version.hpp"

namespace {

using nlohmann::json;
using namespace dpacct;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Shortest round-trip decimal representation: deterministic across runs and
// lossless for downstream tooling.
std::string fmt_double(double v) {
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

double round_to_sig(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*g", digits, v);
  return std::strtod(buf, nullptr);
}

unsigned default_workers() {
  if (const char* env = std::getenv("DPACCT_WORKERS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1 && v <= 4096) {
      return static_cast<unsigned>(v);
    }
    std::cerr << "warning: ignoring invalid DPACCT_WORKERS value '" << env << "'\n";
  }
  return 1;
}

Direction parse_direction(const std::string& s) {
  if (s == "pq") return Direction::PQ;
  if (s == "qp") return Direction::QP;
  if (s == "both") return Direction::Both;
  throw ConfigError("direction must be one of pq, qp, both");
}

struct QueryOpts {
  std::string sampler;
  std::string method;  // empty -> per-sampler default
  std::string direction = "both";
  double sigma = 1.0;
  std::uint64_t steps = 1;
  std::uint64_t epochs = 1;
  double sampling_prob = kNaN;
  std::uint64_t m = 1000000;
  double beta = 1e-3;
  std::string orders;
  unsigned workers = default_workers();
  std::uint64_t seed = 0;
  double grid_step = 1e-4;
  double tail_mass = 1e-15;
};

void add_query_flags(CLI::App* cmd, QueryOpts* o) {
  cmd->add_option("--sampler", o->sampler, "Batch sampler: bnb, poisson, shuffle, deterministic")
      ->required();
  cmd->add_option("--method", o->method,
                  "Accounting method (defaults per sampler): plain, importance, order-stats, "
                  "combined, lower-bound, closed-form, pld-pessimistic, pld-optimistic");
  cmd->add_option("--direction", o->direction, "pq, qp, or both (default both)");
  cmd->add_option("--sigma", o->sigma, "Gaussian noise multiplier")->required();
  cmd->add_option("--steps", o->steps, "Batches per epoch (T)")->required();
  cmd->add_option("--epochs", o->epochs, "Number of epochs (default 1)");
  cmd->add_option("--sampling-prob", o->sampling_prob,
                  "Poisson per-step inclusion probability (default 1/steps)");
  cmd->add_option("--m", o->m, "Monte Carlo sample count (default 1e6)");
  cmd->add_option("--beta", o->beta, "Confidence bound failure probability (default 1e-3)");
  cmd->add_option("--orders", o->orders,
                  "Order-statistic ranks, e.g. '1..400,410..1000:10' "
                  "(order-stats / combined methods)");
  cmd->add_option("--workers", o->workers,
                  "Worker threads (default from DPACCT_WORKERS, else 1)");
  cmd->add_option("--seed", o->seed, "RNG seed (default 0)");
  cmd->add_option("--grid-step", o->grid_step, "PLD lattice step (default 1e-4)");
  cmd->add_option("--tail-mass", o->tail_mass, "PLD per-tail truncation mass (default 1e-15)");
}

std::string default_method(const std::string& sampler) {
  if (sampler == "deterministic") return "closed-form";
  if (sampler == "poisson") return "pld-pessimistic";
  return "plain";
}

json config_json(const QueryOpts& o, const std::string& method) {
  json cfg;
  cfg["sampler"] = o.sampler;
  cfg["method"] = method;
  cfg["direction"] = o.direction;
  cfg["sigma"] = o.sigma;
  cfg["steps"] = o.steps;
  cfg["epochs"] = o.epochs;
  cfg["sampling_prob"] = o.sampling_prob;  // NaN serializes as null
  cfg["m"] = o.m;
  cfg["beta"] = o.beta;
  cfg["orders"] = o.orders.empty() ? json() : json(o.orders);
  cfg["workers"] = o.workers;
  cfg["seed"] = o.seed;
  cfg["grid_step"] = o.grid_step;
  cfg["tail_mass"] = o.tail_mass;
  return cfg;
}

json estimate_json(const DeltaEstimate& e) {
  json r;
  r["type"] = "estimate";
  r["epsilon"] = e.epsilon;
  r["direction"] = to_string(e.direction);
  r["mean"] = e.mean_q;
  r["lower"] = e.has_lower ? json(e.lower) : json();
  r["upper"] = e.has_upper ? json(e.upper_p) : json();
  r["has_lower"] = e.has_lower;
  r["has_upper"] = e.has_upper;
  r["certificate"] = e.certificate;
  r["raw_mean"] = e.raw_mean;
  r["event_probability"] = e.event_probability;
  r["log_event_probability"] = e.log_event_probability;
  r["m"] = e.m_used;
  r["beta"] = e.beta_used;
  r["strategy"] = to_string(e.strategy_used);
  r["pair"] = to_string(e.pair_used);
  r["seed"] = e.seed;
  r["workers"] = e.workers_used;
  return r;
}

// lower/mean/upper triple for one curve row.
struct BoundRow {
  double lower = kNaN;
  double mean = kNaN;
  double upper = kNaN;
};

// Composed loss distributions shared across the epsilons of one curve sweep;
// composing once and reading delta per epsilon is equivalent to the
// per-epsilon path and avoids re-running the FFT cascade for every row.
struct PldCurveCache {
  bool ready = false;
  std::vector<Pld> composed;
};

// Runs one (method, epsilon) query; fills `row` and returns the full result
// object used by `account`.
json run_query(const QueryOpts& o, const std::string& method, double epsilon, BoundRow* row,
               PldCurveCache* pld_cache = nullptr) {
  const Direction dir = parse_direction(o.direction);

  AccountingParams params;
  params.sigma = o.sigma;
  params.steps = o.steps;
  params.epochs = o.epochs;
  params.sampling_prob = o.sampling_prob;

  McConfig cfg;
  cfg.m = o.m;
  cfg.beta = o.beta;
  cfg.workers = o.workers;
  cfg.seed = o.seed;
  if (!o.orders.empty()) cfg.order_spec = OrderSpec::parse(o.orders);

  const bool mc_method = method == "plain" || method == "importance" ||
                         method == "order-stats" || method == "combined";
  if (!o.orders.empty() && method != "order-stats" && method != "combined") {
    throw ConfigError("--orders applies only to the order-stats and combined methods");
  }

  if (o.sampler == "shuffle") {
    if (method != "plain") {
      throw ConfigError("shuffle supports lower bounds only");
    }
    const DeltaEstimate e = shuffle_lower_bound(params, epsilon, dir, cfg);
    row->lower = e.has_lower ? e.lower : kNaN;
    row->mean = e.mean_q;
    return estimate_json(e);
  }

  if (method == "closed-form") {
    if (o.sampler != "deterministic") {
      throw ConfigError("closed-form applies to the deterministic sampler only");
    }
    const double d = delta_deterministic(params, epsilon);
    row->lower = d;
    row->mean = d;
    row->upper = d;
    json r;
    r["type"] = "exact";
    r["epsilon"] = epsilon;
    r["delta"] = d;
    return r;
  }

  if (method == "lower-bound") {
    if (o.sampler != "bnb") {
      throw ConfigError("lower-bound applies to the bnb sampler only");
    }
    const BnbLowerBound c = bnb_lower_bound(params, epsilon);
    row->lower = c.value;
    json r;
    r["type"] = "lower-bound-certificate";
    r["epsilon"] = c.epsilon;
    r["threshold"] = c.threshold;
    r["value"] = c.value;
    r["p_tail"] = c.p_tail;
    r["q_tail"] = c.q_tail;
    return r;
  }

  if (method == "pld-pessimistic" || method == "pld-optimistic") {
    if (o.sampler != "poisson") {
      throw ConfigError("pld methods apply to the poisson sampler only");
    }
    const PldMode mode =
        method == "pld-pessimistic" ? PldMode::Pessimistic : PldMode::Optimistic;
    double d;
    if (pld_cache != nullptr) {
      if (!pld_cache->ready) {
        params.validate();
        const std::uint64_t rounds = params.steps * params.epochs;
        std::array<Direction, 2> dirs{dir, Direction::QP};
        std::size_t n_dirs = 1;
        if (dir == Direction::Both) {
          dirs[0] = Direction::PQ;
          n_dirs = 2;
        }
        for (std::size_t di = 0; di < n_dirs; ++di) {
          pld_cache->composed.push_back(pld_self_compose(
              poisson_pld_build(params.sigma, params.poisson_prob(), dirs[di], o.grid_step, mode,
                                o.tail_mass),
              rounds));
        }
        pld_cache->ready = true;
      }
      d = 0.0;
      for (const Pld& p : pld_cache->composed) d = std::max(d, pld_delta(p, epsilon));
    } else {
      d = poisson_delta(params, epsilon, dir, mode, o.grid_step, o.tail_mass);
    }
    if (mode == PldMode::Pessimistic) {
      row->upper = d;
    } else {
      row->lower = d;
    }
    json r;
    r["type"] = "pld-bound";
    r["epsilon"] = epsilon;
    r["mode"] = method == "pld-pessimistic" ? "pessimistic" : "optimistic";
    r["direction"] = o.direction;
    r["delta"] = d;
    r["grid_step"] = o.grid_step;
    r["tail_mass"] = o.tail_mass;
    return r;
  }

  if (!mc_method) {
    throw ConfigError("unknown method '" + method + "'");
  }

  PairKind pair;
  if (o.sampler == "bnb") {
    pair = PairKind::BallsAndBins;
  } else if (o.sampler == "poisson") {
    pair = PairKind::Poisson;
  } else if (o.sampler == "deterministic") {
    pair = PairKind::Deterministic;
  } else {
    throw ConfigError("sampler must be one of bnb, poisson, shuffle, deterministic");
  }
  if (method != "plain" && pair != PairKind::BallsAndBins) {
    throw ConfigError("method '" + method + "' requires the bnb sampler");
  }

  if (method == "plain") {
    cfg.strategy = Strategy::Plain;
  } else if (method == "importance") {
    cfg.strategy = Strategy::Importance;
  } else if (method == "order-stats") {
    cfg.strategy = Strategy::OrderStats;
  } else {
    cfg.strategy = Strategy::Combined;
  }

  const DeltaEstimate e = estimate_delta(pair, params, epsilon, dir, cfg);
  row->lower = e.has_lower ? e.lower : kNaN;
  row->mean = e.mean_q;
  row->upper = e.has_upper ? e.upper_p : kNaN;
  return estimate_json(e);
}

// ---------------------------------------------------------------------------
// account

int cmd_account(const QueryOpts& o, double epsilon) {
  const std::string method = o.method.empty() ? default_method(o.sampler) : o.method;
  BoundRow row;
  const json result = run_query(o, method, epsilon, &row);
  json out;
  out["schema_version"] = kSchemaVersion;
  out["version"] = kVersion;
  out["command"] = "account";
  json cfg = config_json(o, method);
  cfg["epsilon"] = epsilon;
  out["config"] = cfg;
  out["result"] = result;
  std::cout << out.dump(2) << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// curve

struct CurveOpts {
  QueryOpts q;
  std::string epsilons;  // comma-separated explicit list
  double eps_min = kNaN;
  double eps_max = kNaN;
  std::uint64_t eps_count = 0;
  std::string eps_scale = "linear";
  std::string format = "csv";
};

std::vector<double> resolve_epsilons(const CurveOpts& c) {
  std::vector<double> eps;
  if (!c.epsilons.empty()) {
    std::stringstream ss(c.epsilons);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      if (tok.empty()) continue;
      char* end = nullptr;
      const double v = std::strtod(tok.c_str(), &end);
      if (end == tok.c_str() || *end != '\0' || !std::isfinite(v)) {
        throw ConfigError("--epsilons: cannot parse '" + tok + "'");
      }
      eps.push_back(v);
    }
  } else {
    if (!std::isfinite(c.eps_min) || !std::isfinite(c.eps_max) || c.eps_count == 0) {
      throw ConfigError("curve needs --epsilons or all of --eps-min/--eps-max/--eps-count");
    }
    if (c.eps_count == 1) {
      eps.push_back(c.eps_min);
    } else if (c.eps_scale == "linear") {
      const double step = (c.eps_max - c.eps_min) / static_cast<double>(c.eps_count - 1);
      for (std::uint64_t i = 0; i < c.eps_count; ++i) {
        eps.push_back(c.eps_min + step * static_cast<double>(i));
      }
    } else if (c.eps_scale == "geometric") {
      if (!(c.eps_min > 0.0) || !(c.eps_max > 0.0)) {
        throw ConfigError("geometric epsilon grid needs positive endpoints");
      }
      const double ratio = std::log(c.eps_max / c.eps_min) / static_cast<double>(c.eps_count - 1);
      for (std::uint64_t i = 0; i < c.eps_count; ++i) {
        eps.push_back(c.eps_min * std::exp(ratio * static_cast<double>(i)));
      }
    } else {
      throw ConfigError("--eps-scale must be linear or geometric");
    }
  }
  if (eps.empty()) throw ConfigError("epsilon grid is empty");
  std::sort(eps.begin(), eps.end());
  return eps;
}

int cmd_curve(const CurveOpts& c) {
  const QueryOpts& o = c.q;
  const std::string method = o.method.empty() ? default_method(o.sampler) : o.method;
  if (c.format != "csv" && c.format != "json") {
    throw ConfigError("--format must be csv or json");
  }
  const std::vector<double> eps = resolve_epsilons(c);

  std::vector<BoundRow> rows(eps.size());
  PldCurveCache pld_cache;
  for (std::size_t i = 0; i < eps.size(); ++i) {
    run_query(o, method, eps[i], &rows[i], &pld_cache);
  }

  if (c.format == "csv") {
    std::string outstr = "epsilon,lower,mean,upper,method,direction,m,beta,seed\n";
    for (std::size_t i = 0; i < eps.size(); ++i) {
      outstr += fmt_double(eps[i]) + ',' + fmt_double(rows[i].lower) + ',' +
                fmt_double(rows[i].mean) + ',' + fmt_double(rows[i].upper) + ',' + method + ',' +
                o.direction + ',' + std::to_string(o.m) + ',' + fmt_double(o.beta) + ',' +
                std::to_string(o.seed) + '\n';
    }
    std::cout << outstr;
    return 0;
  }

  json out;
  out["schema_version"] = kSchemaVersion;
  out["version"] = kVersion;
  out["command"] = "curve";
  out["config"] = config_json(o, method);
  json jrows = json::array();
  for (std::size_t i = 0; i < eps.size(); ++i) {
    json r;
    r["epsilon"] = eps[i];
    r["lower"] = rows[i].lower;
    r["mean"] = rows[i].mean;
    r["upper"] = rows[i].upper;
    r["method"] = method;
    r["direction"] = o.direction;
    r["m"] = o.m;
    r["beta"] = o.beta;
    r["seed"] = o.seed;
    jrows.push_back(std::move(r));
  }
  out["rows"] = std::move(jrows);
  std::cout << out.dump(2) << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// simulate-sampler

struct SimulateOpts {
  std::string sampler;
  std::uint64_t n = 0;
  std::uint64_t b = 0;
  std::uint64_t steps = 1;
  std::uint64_t max_batch = 0;  // 0 = no truncation
  std::uint64_t trials = 1;
  std::uint64_t seed = 0;
  std::string emit = "first";  // first | all | none
};

int cmd_simulate(const SimulateOpts& s) {
  if (s.sampler != "bnb" && s.sampler != "poisson" && s.sampler != "shuffle" &&
      s.sampler != "deterministic") {
    throw ConfigError("sampler must be one of bnb, poisson, shuffle, deterministic");
  }
  if (s.emit != "first" && s.emit != "all" && s.emit != "none") {
    throw ConfigError("--emit must be first, all, or none");
  }
  if (s.n == 0) throw ConfigError("--n must be positive");
  if (s.trials == 0) throw ConfigError("--trials must be positive");
  const bool needs_b = s.sampler != "bnb";
  if (needs_b && s.b == 0) {
    throw ConfigError("--b is required for deterministic, shuffle and poisson");
  }

  // Theoretical marginal probability that a fixed index lands in step 0, and
  // the per-step batch-size distribution parameter for the truncation rate.
  double marginal = 0.0;
  double size_prob = 0.0;  // batch size ~ Binomial(n, size_prob) when random
  bool random_size = false;
  if (s.sampler == "bnb") {
    marginal = 1.0 / static_cast<double>(s.steps);
    size_prob = marginal;
    random_size = true;
  } else if (s.sampler == "poisson") {
    marginal = static_cast<double>(s.b) / static_cast<double>(s.n);
    size_prob = marginal;
    random_size = true;
  } else {
    marginal = static_cast<double>(s.b) / static_cast<double>(s.n);
  }

  std::string lines;
  std::map<std::uint64_t, std::uint64_t> size_histogram;  // pre-truncation sizes
  std::vector<std::uint64_t> step0_counts(s.n, 0);
  std::uint64_t truncated_batches = 0;
  std::uint64_t total_batches = 0;
  bool deterministic_match = true;

  const Batches reference = s.sampler == "deterministic" && s.n == s.b * s.steps
                                ? deterministic_batches(s.n, s.b, s.steps)
                                : Batches{};

  for (std::uint64_t trial = 0; trial < s.trials; ++trial) {
    RngStream rng(s.seed, trial);
    Batches batches;
    if (s.sampler == "bnb") {
      batches = balls_and_bins_batches(s.n, s.steps, rng);
    } else if (s.sampler == "poisson") {
      batches = poisson_batches(s.n, s.b, s.steps, rng);
    } else if (s.sampler == "shuffle") {
      batches = shuffle_batches(s.n, s.b, s.steps, rng);
    } else {
      batches = deterministic_batches(s.n, s.b, s.steps);
    }

    for (const auto& batch : batches) {
      ++size_histogram[batch.size()];
      ++total_batches;
      if (s.max_batch > 0 && batch.size() > s.max_batch) ++truncated_batches;
    }
    for (std::uint32_t idx : batches[0]) ++step0_counts[idx];
    if (s.sampler == "deterministic" && !reference.empty() && batches != reference) {
      deterministic_match = false;
    }

    if (s.max_batch > 0) batches = truncate_batches(batches, s.max_batch, rng);

    const bool emit_this = s.emit == "all" || (s.emit == "first" && trial == 0);
    if (emit_this) {
      for (std::size_t t = 0; t < batches.size(); ++t) {
        json line;
        if (s.emit == "all") line["trial"] = trial;
        line["t"] = t;
        line["indices"] = batches[t];
        lines += line.dump() + '\n';
      }
    }
  }

  json summary;
  summary["sampler"] = s.sampler;
  summary["n"] = s.n;
  summary["b"] = needs_b ? json(s.b) : json();
  summary["steps"] = s.steps;
  summary["trials"] = s.trials;
  summary["seed"] = s.seed;

  json hist = json::array();
  for (const auto& [size, count] : size_histogram) {
    hist.push_back(json::array({size, count}));
  }
  summary["size_histogram"] = std::move(hist);

  json marg = json::array();
  for (std::uint64_t i = 0; i < s.n; ++i) {
    marg.push_back(static_cast<double>(step0_counts[i]) / static_cast<double>(s.trials));
  }
  summary["step0_marginal"] = std::move(marg);
  summary["expected_step0_marginal"] = marginal;

  if (s.sampler == "deterministic") {
    json chi;
    chi["degenerate"] = true;
    chi["exact_match"] = deterministic_match;
    summary["chi_square"] = std::move(chi);
  } else {
    // Pearson-style statistic over per-index step-0 membership counts: each
    // count is Binomial(trials, marginal), so the standardized squares sum to
    // approximately chi-square with n degrees of freedom.
    const double expc = static_cast<double>(s.trials) * marginal;
    const double var = expc * (1.0 - marginal);
    double stat = 0.0;
    for (std::uint64_t i = 0; i < s.n; ++i) {
      const double d = static_cast<double>(step0_counts[i]) - expc;
      stat += d * d / var;
    }
    json chi;
    chi["statistic"] = stat;
    chi["df"] = s.n;
    summary["chi_square"] = std::move(chi);
  }

  if (s.max_batch > 0) {
    summary["max_batch"] = s.max_batch;
    summary["truncation_rate"] =
        static_cast<double>(truncated_batches) / static_cast<double>(total_batches);
    if (random_size) {
      summary["expected_truncation_rate"] = binomial_tail(s.n, size_prob, s.max_batch);
    } else {
      summary["expected_truncation_rate"] = s.b > s.max_batch ? 1.0 : 0.0;
    }
  }

  std::cout << lines;
  json wrapped;
  wrapped["schema_version"] = kSchemaVersion;
  wrapped["summary"] = std::move(summary);
  std::cout << wrapped.dump() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// truncation-delta

struct TruncOpts {
  std::uint64_t n = 0;
  std::uint64_t b = 0;
  std::uint64_t steps = 1;
  std::uint64_t max_batch = 0;
  bool has_max_batch = false;
  double epsilon = 0.0;
  double target = kNaN;
  bool has_target = false;
};

int cmd_truncation(const TruncOpts& t) {
  if (!t.has_max_batch && !t.has_target) {
    throw ConfigError("truncation-delta needs --max-batch, --target, or both");
  }
  json out;
  out["schema_version"] = kSchemaVersion;
  out["version"] = kVersion;
  out["command"] = "truncation-delta";
  out["n"] = t.n;
  out["b"] = t.b;
  out["steps"] = t.steps;
  out["epsilon"] = t.epsilon;
  if (t.has_max_batch) {
    out["max_batch"] = t.max_batch;
    out["delta_prime"] = round_to_sig(truncation_delta(t.n, t.b, t.steps, t.max_batch, t.epsilon), 6);
  }
  if (t.has_target) {
    const std::uint64_t min_b = min_truncation_batch(t.n, t.b, t.steps, t.epsilon, t.target);
    out["target"] = t.target;
    out["min_batch"] = min_b;
    out["delta_prime_at_min_batch"] =
        round_to_sig(truncation_delta(t.n, t.b, t.steps, min_b, t.epsilon), 6);
  }
  std::cout << out.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Differential-privacy accounting for batch samplers"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));

  QueryOpts acc_opts;
  double acc_epsilon = 0.0;
  CLI::App* acc = app.add_subcommand("account", "Bounds on delta(epsilon) for one epsilon");
  add_query_flags(acc, &acc_opts);
  acc->add_option("--epsilon", acc_epsilon, "Privacy parameter epsilon")->required();

  CurveOpts curve_opts;
  CLI::App* curve = app.add_subcommand("curve", "Sweep delta(epsilon) over an epsilon grid");
  add_query_flags(curve, &curve_opts.q);
  curve->add_option("--epsilons", curve_opts.epsilons, "Comma-separated epsilon list");
  curve->add_option("--eps-min", curve_opts.eps_min, "Grid start");
  curve->add_option("--eps-max", curve_opts.eps_max, "Grid end");
  curve->add_option("--eps-count", curve_opts.eps_count, "Grid size");
  curve->add_option("--eps-scale", curve_opts.eps_scale, "linear or geometric (default linear)");
  curve->add_option("--format", curve_opts.format, "csv or json (default csv)");

  SimulateOpts sim_opts;
  CLI::App* sim = app.add_subcommand("simulate-sampler", "Draw batch assignments and summarize");
  sim->add_option("--sampler", sim_opts.sampler, "bnb, poisson, shuffle, deterministic")
      ->required();
  sim->add_option("--n", sim_opts.n, "Number of examples")->required();
  sim->add_option("--b", sim_opts.b, "Batch size (deterministic/shuffle/poisson)");
  sim->add_option("--steps", sim_opts.steps, "Batches per epoch (T)")->required();
  sim->add_option("--max-batch", sim_opts.max_batch, "Physical batch cap (0 = none)");
  sim->add_option("--trials", sim_opts.trials, "Independent assignment draws (default 1)");
  sim->add_option("--seed", sim_opts.seed, "RNG seed (default 0)");
  sim->add_option("--emit", sim_opts.emit, "Emit batches: first (default), all, none");

  TruncOpts tr_opts;
  CLI::App* tr = app.add_subcommand("truncation-delta", "Additive penalty for capping batches");
  tr->add_option("--n", tr_opts.n, "Number of examples")->required();
  tr->add_option("--b", tr_opts.b, "Expected batch size")->required();
  tr->add_option("--steps", tr_opts.steps, "Batches per epoch (T)")->required();
  auto* mb = tr->add_option("--max-batch", tr_opts.max_batch, "Physical batch cap");
  auto* tg = tr->add_option("--target", tr_opts.target, "Find smallest cap with penalty <= target");
  tr->add_option("--epsilon", tr_opts.epsilon, "Privacy parameter epsilon")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help / --version
    app.exit(e);
    return 2;
  }

  tr_opts.has_max_batch = mb->count() > 0;
  tr_opts.has_target = tg->count() > 0;

  try {
    if (acc->parsed()) return cmd_account(acc_opts, acc_epsilon);
    if (curve->parsed()) return cmd_curve(curve_opts);
    if (sim->parsed()) return cmd_simulate(sim_opts);
    if (tr->parsed()) return cmd_truncation(tr_opts);
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalRegimeError& e) {
    std::cerr << "numerical-regime error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
