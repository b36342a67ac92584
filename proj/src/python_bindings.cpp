#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cmath>
#include <cstdint>
#include <limits>
#include <sstream>
#include <string>

#include "dpacct/analytic.hpp"
#include "dpacct/math.hpp"
#include "dpacct/mc.hpp"
#include "dpacct/samplers.hpp"
#include "dpacct/version.hpp"

namespace py = pybind11;
using namespace dpacct;

namespace {

Direction direction_from(const std::string& s) {
  if (s == "pq") return Direction::PQ;
  if (s == "qp") return Direction::QP;
  if (s == "both") return Direction::Both;
  throw ConfigError("direction must be one of 'pq', 'qp', 'both'");
}

Strategy strategy_from(const std::string& s) {
  if (s == "plain") return Strategy::Plain;
  if (s == "importance") return Strategy::Importance;
  if (s == "order-stats") return Strategy::OrderStats;
  if (s == "combined") return Strategy::Combined;
  throw ConfigError("strategy must be one of 'plain', 'importance', 'order-stats', 'combined'");
}

PldMode mode_from(const std::string& s) {
  if (s == "pessimistic") return PldMode::Pessimistic;
  if (s == "optimistic") return PldMode::Optimistic;
  throw ConfigError("mode must be 'pessimistic' or 'optimistic'");
}

AccountingParams make_params(double sigma, std::uint64_t steps, std::uint64_t epochs,
                             double sampling_prob) {
  AccountingParams p;
  p.sigma = sigma;
  p.steps = steps;
  p.epochs = epochs;
  p.sampling_prob = sampling_prob;
  return p;
}

McConfig make_config(std::uint64_t m, double beta, const std::string& strategy,
                     const std::string& orders, unsigned workers, std::uint64_t seed) {
  McConfig cfg;
  cfg.m = m;
  cfg.beta = beta;
  cfg.strategy = strategy_from(strategy);
  if (!orders.empty()) cfg.order_spec = OrderSpec::parse(orders);
  cfg.workers = workers;
  cfg.seed = seed;
  return cfg;
}

}  // namespace

PYBIND11_MODULE(_core, mod) {
  mod.doc() = "Differential-privacy accounting for batch samplers (native core)";
  mod.attr("__version__") = kVersion;

  py::register_exception<ConfigError>(mod, "ConfigError", PyExc_ValueError);
  py::register_exception<NumericalRegimeError>(mod, "NumericalRegimeError", PyExc_ArithmeticError);

  py::class_<DeltaEstimate>(mod, "DeltaEstimate")
      .def_readonly("epsilon", &DeltaEstimate::epsilon)
      .def_property_readonly(
          "direction", [](const DeltaEstimate& e) { return std::string(to_string(e.direction)); })
      .def_readonly("mean", &DeltaEstimate::mean_q)
      .def_property_readonly("upper",
                             [](const DeltaEstimate& e) -> py::object {
                               if (!e.has_upper) return py::none();
                               return py::float_(e.upper_p);
                             })
      .def_property_readonly("lower",
                             [](const DeltaEstimate& e) -> py::object {
                               if (!e.has_lower) return py::none();
                               return py::float_(e.lower);
                             })
      .def_readonly("has_lower", &DeltaEstimate::has_lower)
      .def_readonly("has_upper", &DeltaEstimate::has_upper)
      .def_readonly("certificate", &DeltaEstimate::certificate)
      .def_readonly("raw_mean", &DeltaEstimate::raw_mean)
      .def_readonly("event_probability", &DeltaEstimate::event_probability)
      .def_readonly("log_event_probability", &DeltaEstimate::log_event_probability)
      .def_readonly("m", &DeltaEstimate::m_used)
      .def_readonly("beta", &DeltaEstimate::beta_used)
      .def_property_readonly(
          "strategy",
          [](const DeltaEstimate& e) { return std::string(to_string(e.strategy_used)); })
      .def_property_readonly(
          "pair", [](const DeltaEstimate& e) { return std::string(to_string(e.pair_used)); })
      .def_readonly("seed", &DeltaEstimate::seed)
      .def_readonly("workers", &DeltaEstimate::workers_used)
      .def("__repr__", [](const DeltaEstimate& e) {
        std::ostringstream os;
        os << "DeltaEstimate(epsilon=" << e.epsilon << ", direction=" << to_string(e.direction)
           << ", mean=" << e.mean_q;
        if (e.has_lower) os << ", lower=" << e.lower;
        if (e.has_upper) os << ", upper=" << e.upper_p;
        os << ", strategy=" << to_string(e.strategy_used) << ")";
        return os.str();
      });

  py::class_<BnbLowerBound>(mod, "BnbLowerBound")
      .def_readonly("epsilon", &BnbLowerBound::epsilon)
      .def_readonly("threshold", &BnbLowerBound::threshold)
      .def_readonly("value", &BnbLowerBound::value)
      .def_readonly("p_tail", &BnbLowerBound::p_tail)
      .def_readonly("q_tail", &BnbLowerBound::q_tail)
      .def("__repr__", [](const BnbLowerBound& b) {
        std::ostringstream os;
        os << "BnbLowerBound(epsilon=" << b.epsilon << ", value=" << b.value
           << ", threshold=" << b.threshold << ")";
        return os.str();
      });

  mod.def("delta_gaussian", &delta_gaussian, py::arg("sigma"), py::arg("epsilon"),
          py::arg("distance") = 1.0,
          "Hockey-stick divergence of N(distance, sigma^2) vs N(0, sigma^2) at e^epsilon.");

  mod.def(
      "delta_deterministic",
      [](double sigma, double epsilon) {
        return delta_deterministic(make_params(sigma, 1, 1,
                                               std::numeric_limits<double>::quiet_NaN()),
                                   epsilon);
      },
      py::arg("sigma"), py::arg("epsilon"),
      "Exact delta(epsilon) for the deterministic batch sampler.");

  mod.def(
      "bnb_lower_bound",
      [](double sigma, std::uint64_t steps, double epsilon) {
        return bnb_lower_bound(
            make_params(sigma, steps, 1, std::numeric_limits<double>::quiet_NaN()), epsilon);
      },
      py::arg("sigma"), py::arg("steps"), py::arg("epsilon"),
      py::call_guard<py::gil_scoped_release>(),
      "Analytic threshold-family lower bound for the balls-and-bins sampler.");

  mod.def(
      "poisson_delta",
      [](double sigma, std::uint64_t steps, double epsilon, const std::string& direction,
         const std::string& mode, std::uint64_t epochs, double sampling_prob, double grid_step,
         double tail_mass) {
        return poisson_delta(make_params(sigma, steps, epochs, sampling_prob), epsilon,
                             direction_from(direction), mode_from(mode), grid_step, tail_mass);
      },
      py::arg("sigma"), py::arg("steps"), py::arg("epsilon"), py::arg("direction") = "both",
      py::arg("mode") = "pessimistic", py::arg("epochs") = 1,
      py::arg("sampling_prob") = std::numeric_limits<double>::quiet_NaN(),
      py::arg("grid_step") = 1e-4, py::arg("tail_mass") = 1e-15,
      py::call_guard<py::gil_scoped_release>(),
      "Composed Poisson-subsampling delta via the discretized loss distribution. "
      "'pessimistic' gives a certified upper bound, 'optimistic' a lower bound.");

  mod.def(
      "estimate_delta",
      [](const std::string& sampler, double sigma, std::uint64_t steps, double epsilon,
         const std::string& direction, const std::string& strategy, std::uint64_t epochs,
         double sampling_prob, std::uint64_t m, double beta, const std::string& orders,
         unsigned workers, std::uint64_t seed) {
        const AccountingParams params = make_params(sigma, steps, epochs, sampling_prob);
        const McConfig cfg = make_config(m, beta, strategy, orders, workers, seed);
        const Direction dir = direction_from(direction);
        if (sampler == "shuffle") {
          if (cfg.strategy != Strategy::Plain) {
            throw ConfigError("shuffle supports lower bounds only");
          }
          return shuffle_lower_bound(params, epsilon, dir, cfg);
        }
        PairKind pair;
        if (sampler == "bnb") {
          pair = PairKind::BallsAndBins;
        } else if (sampler == "poisson") {
          pair = PairKind::Poisson;
        } else if (sampler == "deterministic") {
          pair = PairKind::Deterministic;
        } else {
          throw ConfigError("sampler must be one of 'bnb', 'poisson', 'shuffle', 'deterministic'");
        }
        return estimate_delta(pair, params, epsilon, dir, cfg);
      },
      py::arg("sampler"), py::arg("sigma"), py::arg("steps"), py::arg("epsilon"),
      py::arg("direction") = "both", py::arg("strategy") = "plain", py::arg("epochs") = 1,
      py::arg("sampling_prob") = std::numeric_limits<double>::quiet_NaN(),
      py::arg("m") = 1000000, py::arg("beta") = 1e-3, py::arg("orders") = "",
      py::arg("workers") = 1, py::arg("seed") = 0,
      py::call_guard<py::gil_scoped_release>(),
      "Monte Carlo delta(epsilon) estimate with one-sided confidence bounds. "
      "Strategies 'importance', 'order-stats' and 'combined' apply to the bnb sampler; "
      "orders is a compact rank list like '1..400,410..1000:10'.");

  mod.def(
      "simulate_batches",
      [](const std::string& sampler, std::uint64_t n, std::uint64_t b, std::uint64_t steps,
         std::uint64_t seed, std::uint64_t trial, std::uint64_t max_batch) {
        RngStream rng(seed, trial);
        Batches batches;
        if (sampler == "bnb") {
          batches = balls_and_bins_batches(n, steps, rng);
        } else if (sampler == "poisson") {
          batches = poisson_batches(n, b, steps, rng);
        } else if (sampler == "shuffle") {
          batches = shuffle_batches(n, b, steps, rng);
        } else if (sampler == "deterministic") {
          batches = deterministic_batches(n, b, steps);
        } else {
          throw ConfigError("sampler must be one of 'bnb', 'poisson', 'shuffle', 'deterministic'");
        }
        if (max_batch > 0) batches = truncate_batches(batches, max_batch, rng);
        return batches;
      },
      py::arg("sampler"), py::arg("n"), py::arg("b") = 0, py::arg("steps") = 1,
      py::arg("seed") = 0, py::arg("trial") = 0, py::arg("max_batch") = 0,
      "One batch assignment draw: a list of sorted index lists, one per step.");

  mod.def("truncation_delta", &truncation_delta, py::arg("n"), py::arg("b"), py::arg("steps"),
          py::arg("max_batch"), py::arg("epsilon"),
          "Additive delta penalty (1 + e^eps) * steps * Pr[Binomial(n, b/n) > max_batch].");

  mod.def("min_truncation_batch", &min_truncation_batch, py::arg("n"), py::arg("b"),
          py::arg("steps"), py::arg("epsilon"), py::arg("target"),
          "Smallest batch cap whose truncation penalty is at most target.");
}
