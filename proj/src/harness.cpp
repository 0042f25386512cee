#include "bdt/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "bdt/error.hpp"

namespace bdt {
namespace {

constexpr const char* kTraceTag = "# bdt-trace v1";

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double(const std::string& s) {
  std::size_t pos = 0;
  const double v = std::stod(s, &pos);
  if (pos != s.size()) throw Error("bad number '" + s + "' in trace");
  return v;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(line);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  return out;
}

const char* const kScalarColumns[] = {
    "t",
    "latency",
    "makespan",
    "block_time",
    "objective",
    "queue_term",
    "mean_partition",
    "rounds",
    "partition_nodes",
    "relaxed_gateways",
    "gateway_energy_violations",
    "ap_energy_violations",
    "ap_energy_relaxed",
    "partition_truncated",
    "drift",
    "drift_bound",
};
const char* const kApColumns[] = {"O", "U", "gamma", "theta", "fbloc",
                                  "e_inf", "e_bloc", "Q", "S"};
constexpr std::size_t kNumScalar = std::size(kScalarColumns);
constexpr std::size_t kNumAp = std::size(kApColumns);

double percentile(std::vector<double> v, double p) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const auto rank = static_cast<std::size_t>(
      std::ceil(p * static_cast<double>(v.size())));
  return v[std::clamp<std::size_t>(rank, 1, v.size()) - 1];
}

int num_types(const std::vector<int>& ap_type) {
  int k = 0;
  for (int t : ap_type) k = std::max(k, t);
  return k;
}

}  // namespace

RunResult simulate(const ExperimentConfig& config, Policy policy, double V,
                   std::uint64_t seed, const RunOptions& options) {
  const Scenario sc = build_scenario(config, seed);
  const ReputationParams rep = build_reputation(config, sc);
  const SlotOptions slot_opts =
      policy_slot_options(policy, rep, config.baselines);
  LyapunovParams lp = config.solver;
  lp.V = V;
  StepOptions step_opts;
  step_opts.strict = options.strict;
  step_opts.max_partition_nodes = config.max_partition_nodes;

  RunResult run;
  run.policy = policy;
  run.V = V;
  run.seed = seed;
  run.ap_type = sc.ap_type;
  run.tau_min = theorem1_tau_min(sc, rep);
  run.slots.reserve(options.T);

  AuxQueues queues = AuxQueues::initial(sc.topology.num_aps(), rep.u_min,
                                        rep.u_max);
  std::vector<std::size_t> previous;
  for (std::size_t t = 0; t < options.T; ++t) {
    const SlotProblem problem(sc, rep, sample_slot(sc, seed, t), slot_opts);
    StepResult step;
    try {
      step = policy_step(policy, problem, queues, lp, config.baselines,
                         previous, step_opts);
    } catch (const InfeasibleSlotError& e) {
      throw InfeasibleSlotError(e.what(), t);
    }
    const SlotEvaluation& ev = step.evaluation;
    AuxQueues next = update_queues(queues, ev.reputation, rep.u_min, rep.u_max);
    const DriftReport drift =
        drift_report(queues, next, ev.reputation, lemma1_constant(problem),
                     rep.u_min, rep.u_max);

    SlotRecord r;
    r.t = t;
    r.latency = ev.latency;
    r.makespan = ev.makespan;
    r.block_time = ev.block_time;
    r.objective = ev.objective;
    r.queue_term = ev.queue_term;
    double lsum = 0.0;
    for (std::size_t l : step.decision.partition) lsum += static_cast<double>(l);
    r.mean_partition =
        step.decision.partition.empty()
            ? 0.0
            : lsum / static_cast<double>(step.decision.partition.size());
    r.rounds = step.rounds;
    r.partition_nodes = step.partition_nodes;
    r.relaxed_gateways = step.relaxed_gateways;
    r.gateway_energy_violations = ev.gateway_energy_violations;
    r.ap_energy_violations = ev.ap_energy_violations;
    r.ap_energy_relaxed = step.ap_energy_relaxed ? 1 : 0;
    r.partition_truncated = step.partition_truncated ? 1 : 0;
    r.drift = drift.delta;
    r.drift_bound = drift.bound;
    r.offloaded = ev.offloaded;
    r.reputation = ev.reputation;
    r.difficulty = ev.difficulty;
    r.rate = ev.rate;
    r.block_frequency = step.decision.block_frequency;
    r.inference_energy = ev.ap_inference_energy_by_ap;
    r.block_energy = ev.block_energy;
    r.q = next.q;
    r.s = next.s;
    if (options.on_slot) options.on_slot(r);
    run.slots.push_back(std::move(r));

    previous = step.decision.partition;
    queues = std::move(next);
  }
  return run;
}

RunResult simulate(const ExperimentConfig& config, Policy policy, double V,
                   std::uint64_t seed) {
  RunOptions opts;
  opts.T = config.T;
  opts.strict = config.strict;
  return simulate(config, policy, V, seed, opts);
}

RunSummary summarize(const RunResult& run) {
  RunSummary s;
  s.policy = run.policy;
  s.V = run.V;
  s.seed = run.seed;
  s.tau_min = run.tau_min;
  s.slots = run.slots.size();
  const int types = num_types(run.ap_type);
  s.mean_reputation.assign(types, 0.0);
  s.mean_inference_energy.assign(types, 0.0);
  s.mean_block_energy.assign(types, 0.0);
  std::vector<double> type_count(types, 0.0);
  for (int t : run.ap_type) type_count[t - 1] += 1.0;

  std::vector<double> latencies;
  latencies.reserve(run.slots.size());
  for (const SlotRecord& r : run.slots) {
    latencies.push_back(r.latency);
    s.mean_latency += r.latency;
    s.mean_block_time += r.block_time;
    s.mean_makespan += r.makespan;
    s.max_latency = std::max(s.max_latency, r.latency);
    for (std::size_t j = 0; j < run.ap_type.size(); ++j) {
      const int k = run.ap_type[j] - 1;
      s.mean_reputation[k] += r.reputation[j];
      s.mean_inference_energy[k] += r.inference_energy[j];
      s.mean_block_energy[k] += r.block_energy[j];
    }
    s.gateway_energy_violations += r.gateway_energy_violations;
    s.ap_energy_violations += r.ap_energy_violations;
    if (r.relaxed_gateways > 0 || r.ap_energy_relaxed) ++s.relaxed_slots;
    if (r.partition_truncated) ++s.truncated_slots;
    if (r.drift > r.drift_bound) ++s.drift_violations;
  }
  if (!run.slots.empty()) {
    const double n = static_cast<double>(run.slots.size());
    s.mean_latency /= n;
    s.mean_block_time /= n;
    s.mean_makespan /= n;
    for (int k = 0; k < types; ++k) {
      const double denom = n * type_count[k];
      if (denom > 0.0) {
        s.mean_reputation[k] /= denom;
        s.mean_inference_energy[k] /= denom;
        s.mean_block_energy[k] /= denom;
      }
    }
    s.final_q = run.slots.back().q;
    s.final_s = run.slots.back().s;
    for (std::size_t j = 0; j < s.final_q.size(); ++j) {
      s.max_q_rate = std::max(s.max_q_rate, s.final_q[j] / n);
      s.max_s_rate = std::max(s.max_s_rate, s.final_s[j] / n);
    }
  }
  s.p50_latency = percentile(latencies, 0.5);
  s.p95_latency = percentile(latencies, 0.95);
  return s;
}

std::vector<std::vector<double>> running_type_reputation(const RunResult& run) {
  const int types = num_types(run.ap_type);
  std::vector<double> count(types, 0.0);
  for (int t : run.ap_type) count[t - 1] += 1.0;
  std::vector<std::vector<double>> out(types);
  std::vector<double> acc(types, 0.0);
  for (std::size_t t = 0; t < run.slots.size(); ++t) {
    std::vector<double> slot(types, 0.0);
    for (std::size_t j = 0; j < run.ap_type.size(); ++j) {
      slot[run.ap_type[j] - 1] += run.slots[t].reputation[j];
    }
    for (int k = 0; k < types; ++k) {
      acc[k] += count[k] > 0.0 ? slot[k] / count[k] : 0.0;
      out[k].push_back(acc[k] / static_cast<double>(t + 1));
    }
  }
  return out;
}

void write_trace(const RunResult& run, std::ostream& out) {
  out << kTraceTag << " policy=" << to_string(run.policy)
      << " V=" << fmt(run.V) << " seed=" << run.seed << " ap_type=";
  for (std::size_t j = 0; j < run.ap_type.size(); ++j) {
    out << (j ? "," : "") << run.ap_type[j];
  }
  out << " tau_min=" << fmt(run.tau_min) << '\n';
  for (std::size_t i = 0; i < kNumScalar; ++i) {
    out << (i ? "," : "") << kScalarColumns[i];
  }
  for (std::size_t j = 0; j < run.ap_type.size(); ++j) {
    for (const char* c : kApColumns) out << ',' << c << '_' << j;
  }
  out << '\n';
  for (const SlotRecord& r : run.slots) {
    out << r.t << ',' << fmt(r.latency) << ',' << fmt(r.makespan) << ','
        << fmt(r.block_time) << ',' << fmt(r.objective) << ','
        << fmt(r.queue_term) << ',' << fmt(r.mean_partition) << ','
        << r.rounds << ',' << r.partition_nodes << ',' << r.relaxed_gateways
        << ',' << r.gateway_energy_violations << ',' << r.ap_energy_violations
        << ',' << r.ap_energy_relaxed << ',' << r.partition_truncated << ','
        << fmt(r.drift) << ',' << fmt(r.drift_bound);
    for (std::size_t j = 0; j < run.ap_type.size(); ++j) {
      out << ',' << fmt(r.offloaded[j]) << ',' << fmt(r.reputation[j]) << ','
          << fmt(r.difficulty[j]) << ',' << fmt(r.rate[j]) << ','
          << fmt(r.block_frequency[j]) << ',' << fmt(r.inference_energy[j])
          << ',' << fmt(r.block_energy[j]) << ',' << fmt(r.q[j]) << ','
          << fmt(r.s[j]);
    }
    out << '\n';
  }
}

RunResult read_trace(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind(kTraceTag, 0) != 0) {
    throw Error("not a bdt trace (missing version header)");
  }
  RunResult run;
  for (const std::string& tok : split(line.substr(std::string(kTraceTag).size()), ' ')) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = tok.substr(0, eq);
    const std::string value = tok.substr(eq + 1);
    if (key == "policy") run.policy = parse_policy(value);
    if (key == "V") run.V = parse_double(value);
    if (key == "seed") run.seed = std::stoull(value);
    if (key == "tau_min") run.tau_min = parse_double(value);
    if (key == "ap_type") {
      for (const std::string& v : split(value, ',')) {
        run.ap_type.push_back(std::stoi(v));
      }
    }
  }
  if (!std::getline(in, line)) throw Error("trace lacks a column header");
  const std::size_t n_ap = run.ap_type.size();
  const std::size_t width = kNumScalar + kNumAp * n_ap;
  if (split(line, ',').size() != width) {
    throw Error("trace column count does not match the AP count");
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != width) throw Error("short trace row");
    SlotRecord r;
    r.t = std::stoull(f[0]);
    r.latency = parse_double(f[1]);
    r.makespan = parse_double(f[2]);
    r.block_time = parse_double(f[3]);
    r.objective = parse_double(f[4]);
    r.queue_term = parse_double(f[5]);
    r.mean_partition = parse_double(f[6]);
    r.rounds = std::stoi(f[7]);
    r.partition_nodes = std::stoull(f[8]);
    r.relaxed_gateways = std::stoull(f[9]);
    r.gateway_energy_violations = std::stoull(f[10]);
    r.ap_energy_violations = std::stoull(f[11]);
    r.ap_energy_relaxed = std::stoi(f[12]);
    r.partition_truncated = std::stoi(f[13]);
    r.drift = parse_double(f[14]);
    r.drift_bound = parse_double(f[15]);
    std::vector<double>* cols[] = {&r.offloaded,       &r.reputation,
                                   &r.difficulty,      &r.rate,
                                   &r.block_frequency, &r.inference_energy,
                                   &r.block_energy,    &r.q,
                                   &r.s};
    for (std::size_t j = 0; j < n_ap; ++j) {
      for (std::size_t c = 0; c < kNumAp; ++c) {
        cols[c]->push_back(parse_double(f[kNumScalar + j * kNumAp + c]));
      }
    }
    run.slots.push_back(std::move(r));
  }
  return run;
}

void write_consensus(const RunResult& run, std::ostream& out) {
  out << "# bdt-consensus v1\n";
  out << "t,j,O,U,gamma,theta,tau_bloc,e_bloc\n";
  for (const SlotRecord& r : run.slots) {
    for (std::size_t j = 0; j < r.offloaded.size(); ++j) {
      out << r.t << ',' << j << ',' << fmt(r.offloaded[j]) << ','
          << fmt(r.reputation[j]) << ',' << fmt(r.difficulty[j]) << ','
          << fmt(r.rate[j]) << ',' << fmt(r.block_time) << ','
          << fmt(r.block_energy[j]) << '\n';
    }
  }
}

void write_realizations(const ExperimentConfig& config, std::uint64_t seed,
                        std::size_t T, std::ostream& out) {
  const Scenario sc = build_scenario(config, seed);
  out << "# bdt-realization v1 seed=" << seed << '\n';
  out << "t,kind,index,value\n";
  for (std::size_t t = 0; t < T; ++t) {
    const SlotRealization r = sample_slot(sc, seed, t);
    auto dump = [&](const char* kind, const std::vector<double>& v) {
      for (std::size_t i = 0; i < v.size(); ++i) {
        out << t << ',' << kind << ',' << i << ',' << fmt(v[i]) << '\n';
      }
    };
    dump("D", r.data);
    dump("rho", r.fading);
    dump("eta", r.interference);
    dump("E_G", r.gateway_energy);
    dump("E_A", r.ap_energy);
  }
}

std::string summary_to_json(const RunSummary& s, int indent) {
  nlohmann::json j;
  j["policy"] = std::string(to_string(s.policy));
  j["V"] = s.V;
  j["seed"] = s.seed;
  j["slots"] = s.slots;
  j["mean_latency"] = s.mean_latency;
  j["p50_latency"] = s.p50_latency;
  j["p95_latency"] = s.p95_latency;
  j["max_latency"] = s.max_latency;
  j["mean_block_time"] = s.mean_block_time;
  j["mean_makespan"] = s.mean_makespan;
  j["tau_min"] = s.tau_min;
  j["mean_reputation_by_type"] = s.mean_reputation;
  j["mean_inference_energy_by_type"] = s.mean_inference_energy;
  j["mean_block_energy_by_type"] = s.mean_block_energy;
  j["final_q"] = s.final_q;
  j["final_s"] = s.final_s;
  j["max_q_rate"] = s.max_q_rate;
  j["max_s_rate"] = s.max_s_rate;
  j["gateway_energy_violations"] = s.gateway_energy_violations;
  j["ap_energy_violations"] = s.ap_energy_violations;
  j["relaxed_slots"] = s.relaxed_slots;
  j["truncated_slots"] = s.truncated_slots;
  j["drift_violations"] = s.drift_violations;
  return j.dump(indent);
}

std::string cell_name(Policy policy, double V, std::uint64_t seed) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "%s_V%g_seed%" PRIu64,
                std::string(to_string(policy)).c_str(), V, seed);
  return buf;
}

std::vector<SweepCell> sweep_cells(const ExperimentConfig& config) {
  std::vector<SweepCell> cells;
  for (std::uint64_t seed : config.seeds) {
    for (double V : config.V) {
      for (Policy p : config.policies) cells.push_back({p, V, seed});
    }
  }
  return cells;
}

SweepResult run_sweep(const ExperimentConfig& config, bool write_files) {
  validate_config(config);
  SweepResult out;
  out.cells = sweep_cells(config);
  const std::size_t n = out.cells.size();
  out.runs.resize(n);
  out.summaries.resize(n);
  std::vector<std::exception_ptr> errors(n);
  if (write_files) std::filesystem::create_directories(config.output_dir);

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      const SweepCell& c = out.cells[i];
      try {
        out.runs[i] = simulate(config, c.policy, c.V, c.seed);
        out.summaries[i] = summarize(out.runs[i]);
        if (write_files) {
          const std::filesystem::path dir(config.output_dir);
          const std::string name = cell_name(c.policy, c.V, c.seed);
          std::ofstream trace(dir / ("trace_" + name + ".csv"));
          write_trace(out.runs[i], trace);
          std::ofstream cons(dir / ("consensus_" + name + ".csv"));
          write_consensus(out.runs[i], cons);
          std::ofstream sum(dir / ("summary_" + name + ".json"));
          sum << summary_to_json(out.summaries[i]) << '\n';
        }
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::size_t threads = config.workers;
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, std::max<std::size_t>(n, 1));
  std::vector<std::thread> pool;
  for (std::size_t k = 1; k < threads; ++k) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  if (write_files && config.dump_realizations) {
    for (std::uint64_t seed : config.seeds) {
      std::ofstream f(std::filesystem::path(config.output_dir) /
                      ("realizations_seed" + std::to_string(seed) + ".csv"));
      write_realizations(config, seed, config.T, f);
    }
  }
  return out;
}

void write_sweep_table(const SweepResult& sweep, std::ostream& out) {
  int types = 0;
  for (const RunSummary& s : sweep.summaries) {
    types = std::max(types, static_cast<int>(s.mean_reputation.size()));
  }
  out << "# bdt-sweep v1\n";
  out << "policy,V,seed,slots,mean_latency,p95_latency,mean_block_time,"
         "mean_makespan,tau_min";
  for (int k = 1; k <= types; ++k) out << ",U_type" << k;
  for (int k = 1; k <= types; ++k) out << ",e_inf_type" << k;
  for (int k = 1; k <= types; ++k) out << ",e_bloc_type" << k;
  out << ",max_q_rate,max_s_rate,gateway_energy_violations,"
         "ap_energy_violations\n";

  auto row = [&](const RunSummary& s, const std::string& seed) {
    out << to_string(s.policy) << ',' << fmt(s.V) << ',' << seed << ','
        << s.slots << ',' << fmt(s.mean_latency) << ',' << fmt(s.p95_latency)
        << ',' << fmt(s.mean_block_time) << ',' << fmt(s.mean_makespan) << ','
        << fmt(s.tau_min);
    for (int k = 0; k < types; ++k) out << ',' << fmt(s.mean_reputation[k]);
    for (int k = 0; k < types; ++k) {
      out << ',' << fmt(s.mean_inference_energy[k]);
    }
    for (int k = 0; k < types; ++k) out << ',' << fmt(s.mean_block_energy[k]);
    out << ',' << fmt(s.max_q_rate) << ',' << fmt(s.max_s_rate) << ','
        << s.gateway_energy_violations << ',' << s.ap_energy_violations
        << '\n';
  };
  for (std::size_t i = 0; i < sweep.summaries.size(); ++i) {
    row(sweep.summaries[i], std::to_string(sweep.cells[i].seed));
  }

  // seed averages, in first-appearance order of (V, policy)
  std::vector<std::pair<double, Policy>> keys;
  for (const SweepCell& c : sweep.cells) {
    const std::pair<double, Policy> k{c.V, c.policy};
    if (std::find(keys.begin(), keys.end(), k) == keys.end()) keys.push_back(k);
  }
  for (const auto& [V, policy] : keys) {
    RunSummary avg;
    avg.policy = policy;
    avg.V = V;
    avg.mean_reputation.assign(types, 0.0);
    avg.mean_inference_energy.assign(types, 0.0);
    avg.mean_block_energy.assign(types, 0.0);
    double count = 0.0;
    for (std::size_t i = 0; i < sweep.cells.size(); ++i) {
      if (sweep.cells[i].V != V || sweep.cells[i].policy != policy) continue;
      const RunSummary& s = sweep.summaries[i];
      count += 1.0;
      avg.slots = s.slots;
      avg.mean_latency += s.mean_latency;
      avg.p95_latency += s.p95_latency;
      avg.mean_block_time += s.mean_block_time;
      avg.mean_makespan += s.mean_makespan;
      avg.tau_min += s.tau_min;
      for (int k = 0; k < types; ++k) {
        avg.mean_reputation[k] += s.mean_reputation[k];
        avg.mean_inference_energy[k] += s.mean_inference_energy[k];
        avg.mean_block_energy[k] += s.mean_block_energy[k];
      }
      avg.max_q_rate = std::max(avg.max_q_rate, s.max_q_rate);
      avg.max_s_rate = std::max(avg.max_s_rate, s.max_s_rate);
      avg.gateway_energy_violations += s.gateway_energy_violations;
      avg.ap_energy_violations += s.ap_energy_violations;
    }
    avg.mean_latency /= count;
    avg.p95_latency /= count;
    avg.mean_block_time /= count;
    avg.mean_makespan /= count;
    avg.tau_min /= count;
    for (int k = 0; k < types; ++k) {
      avg.mean_reputation[k] /= count;
      avg.mean_inference_energy[k] /= count;
      avg.mean_block_energy[k] /= count;
    }
    row(avg, "mean");
  }
}

}  // namespace bdt
