#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "bdt/config.hpp"
#include "bdt/dpra.hpp"

namespace bdt {

/// Outcome of one validation check. `failing` holds a JSON description of
/// the first failing case (empty when the check passed).
struct CheckResult {
  std::string name;
  bool passed = true;
  std::size_t cases = 0;
  std::size_t failures = 0;
  double worst = 0.0;  // largest observed gap, in the check's own units
  double threshold = 0.0;
  std::string detail;
  std::string failing;
};

struct ValidationReport {
  std::string kind;
  std::vector<CheckResult> checks;
  bool passed() const;
};

std::string report_to_json(const ValidationReport& report, int indent = 2);

/// A small randomized slot together with the fixed blocks each subproblem
/// receives. Instances are a pure function of (seed, index).
struct OracleInstance {
  std::uint64_t seed = 0;
  std::size_t index = 0;
  Scenario scenario;
  ReputationParams reputation;
  SlotRealization realization;
  AuxQueues queues;
  double V = 1.0;
  std::vector<std::size_t> partition;
  std::vector<double> ap_frequency;
  std::vector<double> block_frequency;
};

/// M <= 3 gateways, N <= 4 devices, L_n <= 5 layers, J <= M APs.
OracleInstance make_oracle_instance(std::uint64_t seed, std::size_t index);
std::string instance_to_json(const OracleInstance& instance, int indent = -1);

/// Smallest block time reachable under the f_max cap and the AP energy left after
/// inference, by nested log grids over the block time with `points` per
/// level. Returns +inf if no AP can mine.
double grid_block_time(const SlotProblem& problem,
                       const std::vector<std::size_t>& partition,
                       const std::vector<double>& ap_frequency,
                       std::size_t points = 1000);

/// Smallest makespan reachable under the AP frequency and energy budgets
/// for fixed f^bloc, by nested
/// log grids over the makespan. Returns +inf if no grid point is feasible.
double grid_makespan(const SlotProblem& problem,
                     const std::vector<std::size_t>& partition,
                     const std::vector<double>& block_frequency,
                     std::size_t points = 1000);

struct OracleOptions {
  std::uint64_t seed = 7;
  std::size_t first = 0;
  std::size_t instances = 200;
  std::size_t grid_points = 1000;
  std::size_t random_probes = 2000;
  double rel_tol = 1e-6;
};

/// solve_fbloc and solve_fa against grid oracles and random feasible probes;
/// solve_partition against exhaustive enumeration.
ValidationReport validate_oracle(const OracleOptions& options = {});

/// Kolmogorov-Smirnov statistic of `samples` against `cdf`.
double ks_statistic(std::vector<double> samples,
                    const std::function<double(double)>& cdf);
/// Asymptotic p-value of the KS statistic for n samples.
double ks_p_value(double statistic, std::size_t n);

struct StatisticsOptions {
  std::uint64_t seed = 11;
  std::size_t samples = 100000;
  double ks_alpha = 0.01;
  double sigmas = 3.0;
  std::size_t arrival_slots = 2000;
  double arrival_rel_tol = 0.02;
};

/// Block-time distribution, success-probability quantile and arrival means
/// on the configured scenario.
ValidationReport validate_statistics(const ExperimentConfig& config,
                                     const StatisticsOptions& options = {});

/// Pathwise drift inequality over a DPRA run.
ValidationReport validate_drift(const ExperimentConfig& config, double V,
                                std::uint64_t seed, std::size_t T);

}  // namespace bdt
