#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "bdt/config.hpp"
#include "bdt/consensus.hpp"
#include "bdt/dnn_profile.hpp"
#include "bdt/error.hpp"
#include "bdt/harness.hpp"
#include "bdt/validate.hpp"

namespace py = pybind11;
using namespace bdt;

namespace {

ExperimentConfig config_from(const std::string& text) {
  ExperimentConfig c = text.empty() ? paper_default() : parse_config(text);
  validate_config(c);
  return c;
}

py::dict trace_dict(const RunResult& run) {
  std::vector<double> latency, makespan, block_time, objective;
  std::vector<std::vector<double>> reputation, q, s, block_energy,
      inference_energy;
  for (const SlotRecord& r : run.slots) {
    latency.push_back(r.latency);
    makespan.push_back(r.makespan);
    block_time.push_back(r.block_time);
    objective.push_back(r.objective);
    reputation.push_back(r.reputation);
    q.push_back(r.q);
    s.push_back(r.s);
    inference_energy.push_back(r.inference_energy);
    block_energy.push_back(r.block_energy);
  }
  py::dict d;
  d["policy"] = std::string(to_string(run.policy));
  d["V"] = run.V;
  d["seed"] = run.seed;
  d["ap_type"] = run.ap_type;
  d["tau_min"] = run.tau_min;
  d["latency"] = latency;
  d["makespan"] = makespan;
  d["block_time"] = block_time;
  d["objective"] = objective;
  d["reputation"] = reputation;
  d["q"] = q;
  d["s"] = s;
  d["inference_energy"] = inference_energy;
  d["block_energy"] = block_energy;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Edge inference offloading with reputation-based consensus";

  static py::exception<Error> base(m, "BdtError", PyExc_RuntimeError);
  static py::exception<ConfigError> config_error(m, "ConfigError",
                                                 base.ptr());
  static py::exception<InfeasibleSlotError> infeasible(
      m, "InfeasibleSlotError", base.ptr());
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ConfigError& e) {
      py::set_error(config_error, e.what());
    } catch (const InfeasibleSlotError& e) {
      py::set_error(infeasible, e.what());
    } catch (const Error& e) {
      py::set_error(base, e.what());
    }
  });

  m.def("paper_default_json", [] { return config_to_json(paper_default()); },
        "Paper-default configuration as JSON text.");
  m.def("normalize_config_json",
        [](const std::string& text) { return config_to_json(config_from(text)); },
        py::arg("text"),
        "Parses a config layered over paper-default and re-serializes it.");

  m.def(
      "simulate_json",
      [](const std::string& config, const std::string& policy, double V,
         std::uint64_t seed, std::size_t T, bool strict) {
        const ExperimentConfig c = config_from(config);
        RunOptions o;
        o.T = T;
        o.strict = strict;
        RunResult run;
        {
          py::gil_scoped_release release;
          run = simulate(c, parse_policy(policy), V, seed, o);
        }
        std::ostringstream trace;
        write_trace(run, trace);
        py::dict out = trace_dict(run);
        out["summary"] = summary_to_json(summarize(run), -1);
        out["trace_csv"] = trace.str();
        return out;
      },
      py::arg("config"), py::arg("policy"), py::arg("V"), py::arg("seed"),
      py::arg("T"), py::arg("strict") = false);

  m.def(
      "summarize_trace_csv",
      [](const std::string& csv) {
        std::istringstream in(csv);
        return summary_to_json(summarize(read_trace(in)), -1);
      },
      py::arg("csv"));

  m.def(
      "validate_json",
      [](const std::string& kind, const std::string& config,
         std::size_t instances, std::uint64_t seed) {
        ValidationReport r;
        py::gil_scoped_release release;
        if (kind == "oracle") {
          OracleOptions o;
          o.instances = instances;
          o.seed = seed;
          r = validate_oracle(o);
        } else if (kind == "statistics") {
          StatisticsOptions o;
          o.seed = seed;
          r = validate_statistics(config_from(config), o);
        } else if (kind == "drift") {
          const ExperimentConfig c = config_from(config);
          r = validate_drift(c, c.V.front(), seed, c.T);
        } else {
          throw ConfigError("kind", "expected oracle, statistics or drift");
        }
        return report_to_json(r, -1);
      },
      py::arg("kind"), py::arg("config"), py::arg("instances"),
      py::arg("seed"));

  m.def(
      "model_profile",
      [](const std::string& preset, std::int64_t batch, std::int64_t bits) {
        const ModelProfile p =
            build_preset(parse_model_preset(preset), batch, bits);
        std::vector<std::pair<double, double>> layers;
        for (const LayerProfile& l : p.layers()) {
          layers.emplace_back(l.flops, l.output_bits);
        }
        return layers;
      },
      py::arg("preset"), py::arg("batch") = 1, py::arg("precision_bits") = 32,
      "(FLOPs, output bits) per layer of a preset model.");

  m.def(
      "difficulty",
      [](double alpha, double beta, double u) {
        ReputationParams p;
        p.alpha = alpha;
        p.beta = beta;
        return difficulty(p, u);
      },
      py::arg("alpha"), py::arg("beta"), py::arg("reputation"));

  m.def(
      "block_time",
      [](double alpha, double beta, double p0,
         const std::vector<double>& frequencies,
         const std::vector<double>& reputations) {
        ReputationParams p;
        p.alpha = alpha;
        p.beta = beta;
        p.p0 = p0;
        const BlockRace r = block_time(p, frequencies, reputations);
        return py::make_tuple(r.block_time, r.total_rate, r.rates);
      },
      py::arg("alpha"), py::arg("beta"), py::arg("p0"),
      py::arg("frequencies"), py::arg("reputations"),
      "(block time, total rate, per-AP rates) of the block race.");
}
