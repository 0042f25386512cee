#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "bdt/baselines.hpp"
#include "bdt/config.hpp"

namespace bdt {

/// One slot of a run, after the decision and the queue update.
struct SlotRecord {
  std::size_t t = 0;
  double latency = 0.0;
  double makespan = 0.0;
  double block_time = 0.0;
  double objective = 0.0;
  double queue_term = 0.0;
  double mean_partition = 0.0;
  int rounds = 0;
  std::size_t partition_nodes = 0;
  std::size_t relaxed_gateways = 0;
  std::size_t gateway_energy_violations = 0;
  std::size_t ap_energy_violations = 0;
  int ap_energy_relaxed = 0;
  int partition_truncated = 0;
  double drift = 0.0;        // L(t+1) - L(t)
  double drift_bound = 0.0;  // right side of the drift inequality
  // per AP
  std::vector<double> offloaded;
  std::vector<double> reputation;
  std::vector<double> difficulty;
  std::vector<double> rate;
  std::vector<double> block_frequency;
  std::vector<double> inference_energy;
  std::vector<double> block_energy;
  std::vector<double> q;  // Q_j(t+1)
  std::vector<double> s;  // S_j(t+1)
};

struct RunResult {
  Policy policy = Policy::Dpra;
  double V = 0.0;
  std::uint64_t seed = 0;
  std::vector<int> ap_type;
  double tau_min = 0.0;
  std::vector<SlotRecord> slots;
};

/// Aggregates of one run; every field is a function of the trace alone.
struct RunSummary {
  Policy policy = Policy::Dpra;
  double V = 0.0;
  std::uint64_t seed = 0;
  std::size_t slots = 0;
  double mean_latency = 0.0;
  double p50_latency = 0.0;
  double p95_latency = 0.0;
  double max_latency = 0.0;
  double mean_block_time = 0.0;
  double mean_makespan = 0.0;
  double tau_min = 0.0;
  // per AP type (index type - 1)
  std::vector<double> mean_reputation;
  std::vector<double> mean_inference_energy;  // per AP per slot
  std::vector<double> mean_block_energy;      // per AP per slot
  std::vector<double> final_q;
  std::vector<double> final_s;
  double max_q_rate = 0.0;  // max_j Q_j(T) / T
  double max_s_rate = 0.0;
  std::size_t gateway_energy_violations = 0;
  std::size_t ap_energy_violations = 0;
  std::size_t relaxed_slots = 0;
  std::size_t truncated_slots = 0;
  std::size_t drift_violations = 0;
};

struct RunOptions {
  std::size_t T = 0;
  bool strict = false;
  /// Called after every slot; may be empty.
  std::function<void(const SlotRecord&)> on_slot;
};

/// The online control loop for one (policy, V, seed) cell: sample the slot,
/// step the policy, update the queues, record. Realizations depend on
/// (seed, t) only.
RunResult simulate(const ExperimentConfig& config, Policy policy, double V,
                   std::uint64_t seed, const RunOptions& options);
RunResult simulate(const ExperimentConfig& config, Policy policy, double V,
                   std::uint64_t seed);

RunSummary summarize(const RunResult& run);

/// Running average over slots 0..t of the mean reputation of each AP type;
/// result[type - 1][t].
std::vector<std::vector<double>> running_type_reputation(const RunResult& run);

/// Trace CSV with a versioned header comment; doubles are printed with 17
/// significant digits, so reading back yields identical values.
void write_trace(const RunResult& run, std::ostream& out);
RunResult read_trace(std::istream& in);
/// Long-format consensus CSV: t, j, O, U, gamma, theta, tau_bloc, e_bloc.
void write_consensus(const RunResult& run, std::ostream& out);
/// Realization dump: t, kind, index, value.
void write_realizations(const ExperimentConfig& config, std::uint64_t seed,
                        std::size_t T, std::ostream& out);
std::string summary_to_json(const RunSummary& summary, int indent = 2);

std::string cell_name(Policy policy, double V, std::uint64_t seed);

struct SweepCell {
  Policy policy = Policy::Dpra;
  double V = 0.0;
  std::uint64_t seed = 0;
};

struct SweepResult {
  std::vector<SweepCell> cells;  // seed-major, then V, then policy
  std::vector<RunResult> runs;
  std::vector<RunSummary> summaries;
};

std::vector<SweepCell> sweep_cells(const ExperimentConfig& config);

/// Runs every cell on a worker pool. Results are stored by cell index, so the
/// output does not depend on scheduling. When `write_files` is set, each
/// cell's trace, consensus CSV and summary go to config.output_dir.
SweepResult run_sweep(const ExperimentConfig& config, bool write_files);

/// Wide table: one row per cell plus one seed-averaged row per (V, policy).
void write_sweep_table(const SweepResult& sweep, std::ostream& out);

}  // namespace bdt
