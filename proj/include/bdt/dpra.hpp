#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "bdt/consensus.hpp"
#include "bdt/system_env.hpp"

namespace bdt {

/// Virtual queues Q_j (under-reputation backlog) and S_j (over-reputation
/// backlog) for the long-term reputation band.
struct AuxQueues {
  std::vector<double> q;
  std::vector<double> s;

  /// Q = S = (U_min + U_max) / 2 for every AP.
  static AuxQueues initial(std::size_t num_aps, double u_min, double u_max);
  std::size_t size() const { return q.size(); }
};

/// Q' = max{Q - U + U_min, 0}, S' = max{S + U - U_max, 0}.
AuxQueues update_queues(const AuxQueues& queues,
                        std::span<const double> reputations, double u_min,
                        double u_max);

struct LyapunovParams {
  double V = 1e4;
  int bcd_max_rounds = 8;
  double bcd_tol = 1e-9;
  double bisection_tol = 1e-9;
  int bisection_max_iters = 100;
};

/// X(t) = [l, f^A, f^bloc]. `ap_frequency` is indexed by gateway (the share
/// of its AP's frequency), `block_frequency` by AP.
struct Decision {
  std::vector<std::size_t> partition;
  std::vector<double> ap_frequency;
  std::vector<double> block_frequency;
};

enum class ConsensusMode {
  Reputation,       // gamma_j = exp(-alpha U_j - beta)
  FixedDifficulty,  // gamma_j = fixed_difficulty for every AP
};

struct SlotOptions {
  ConsensusMode consensus = ConsensusMode::Reputation;
  double fixed_difficulty = 1.0;
  /// Keep the (S_j - Q_j) U_j term in the per-slot objective.
  bool queue_incentive = true;
};

/// Everything the closed forms produce for one decision on one realization.
struct SlotEvaluation {
  // per gateway
  std::vector<double> gateway_time;    // tau^{exe,G}
  std::vector<double> offload_time;    // tau^{off}
  std::vector<double> ap_time;         // tau^{exe,A}
  std::vector<double> total_time;      // sum of the three
  std::vector<double> gateway_inference_energy;
  std::vector<double> offload_energy;
  std::vector<double> gateway_energy;  // e^G
  std::vector<double> ap_inference_energy;  // e^{exe,A}, per gateway
  // per AP
  std::vector<double> offloaded;
  std::vector<double> reputation;
  std::vector<double> difficulty;
  std::vector<double> rate;
  std::vector<double> block_energy;
  std::vector<double> ap_energy;       // e^A
  std::vector<double> ap_inference_energy_by_ap;

  double total_rate = 0.0;
  double block_time = 0.0;
  double makespan = 0.0;
  double latency = 0.0;       // tau(t)
  double queue_term = 0.0;    // sum_j (S_j - Q_j) U_j
  double objective = 0.0;     // V tau + queue_term

  std::size_t gateway_energy_violations = 0;  // gateway energy budget
  std::size_t ap_energy_violations = 0;       // AP energy budget
  bool feasible() const {
    return gateway_energy_violations == 0 && ap_energy_violations == 0;
  }
};

/// Relative slack used when checking the energy constraints.
inline constexpr double kEnergyTolerance = 1e-9;

/// One slot of the per-slot problem: the static scenario, the realization and
/// the consensus variant, with the per-slot constants precomputed. Holds
/// references to `scenario` and `reputation`, which must outlive it.
class SlotProblem {
 public:
  SlotProblem(const Scenario& scenario, const ReputationParams& reputation,
              SlotRealization realization, SlotOptions options = {});

  const Scenario& scenario() const { return *scenario_; }
  const ReputationParams& reputation_params() const { return *reputation_; }
  const SlotRealization& realization() const { return realization_; }
  const SlotOptions& options() const { return options_; }

  std::size_t num_devices() const { return scenario_->topology.num_devices(); }
  std::size_t num_gateways() const {
    return scenario_->topology.num_gateways();
  }
  std::size_t num_aps() const { return scenario_->topology.num_aps(); }

  double data(std::size_t n) const { return realization_.data[n]; }
  double rate(std::size_t m) const { return rates_[m]; }
  double gateway_energy_budget(std::size_t m) const {
    return realization_.gateway_energy[m];
  }
  double ap_energy_budget(std::size_t j) const {
    return realization_.ap_energy[j];
  }

  /// gamma for a given reputation under the configured consensus mode.
  double difficulty_for(double reputation) const;

  /// Throws OutOfRangeError on a partition point out of range and
  /// InfeasibleDecisionError on frequencies above f_max or zero frequencies
  /// with pending work. Energy
  /// constraints are reported, not enforced.
  SlotEvaluation evaluate(const Decision& decision, const AuxQueues& queues,
                          double V) const;

  /// l_n = ceil(L_n / 2) for every device.
  std::vector<std::size_t> midpoint_partition() const;

 private:
  const Scenario* scenario_;
  const ReputationParams* reputation_;
  SlotRealization realization_;
  SlotOptions options_;
  std::vector<double> rates_;
};

/// V tau(t) + sum_j (S_j - Q_j) U_j(t).
double drift_plus_penalty(const SlotProblem& problem, const Decision& decision,
                          const AuxQueues& queues, double V);

struct BisectionOptions {
  double rel_tol = 1e-9;
  int max_iters = 100;
};

struct FblocResult {
  std::vector<double> frequency;
  double block_time = 0.0;
  int iterations = 0;
  bool converged = true;
};

/// Block-mining frequencies minimizing the block time for fixed (l, f^A)
/// under the f_max cap and the AP energy left after inference. Bisects on the block time
/// mu; at each mu the frequency is min{f_max, cbrt(residual / (v mu))}.
FblocResult solve_fbloc(const SlotProblem& problem,
                        std::span<const std::size_t> partition,
                        std::span<const double> ap_frequency,
                        const BisectionOptions& options = {});

struct FaResult {
  std::vector<double> frequency;
  double makespan = 0.0;
  int iterations = 0;
  bool converged = true;
};

/// AP inference frequencies minimizing the gateway makespan for fixed
/// (l, f^bloc) under the AP frequency and energy budgets. Bisects on the makespan lambda; each gateway
/// needs f = W / (phi (lambda - fixed part)) to finish by lambda.
FaResult solve_fa(const SlotProblem& problem,
                  std::span<const std::size_t> partition,
                  std::span<const double> block_frequency,
                  const BisectionOptions& options = {});

struct PartitionOptions {
  /// Throw InfeasibleSlotError instead of relaxing energy budgets.
  bool strict = false;
  /// Upper bound on explored branch-and-bound nodes (all cases together);
  /// zero means unlimited.
  std::size_t max_nodes = 0;
};

struct PartitionResult {
  std::vector<std::size_t> partition;
  double objective = 0.0;
  std::size_t case_index = 0;  // gateway attaining the makespan
  std::size_t nodes = 0;
  std::vector<bool> gateway_relaxed;  // budget unsatisfiable, minimal excess used
  bool ap_energy_relaxed = false;     // AP budget dropped because nothing met it
  bool truncated = false;             // node budget exhausted
};

/// Partition points for fixed frequencies. Splits the problem into one case
/// per gateway (that gateway attains the makespan) and solves each by
/// branch-and-bound over devices; the best case wins. `hint`, when feasible,
/// seeds the incumbent.
PartitionResult solve_partition(const SlotProblem& problem,
                                std::span<const double> ap_frequency,
                                std::span<const double> block_frequency,
                                const AuxQueues& queues, double V,
                                const PartitionOptions& options = {},
                                std::span<const std::size_t> hint = {});

/// Enumerates every partition vector. Throws OutOfRangeError if the domain
/// exceeds `limit` points.
PartitionResult solve_partition_exhaustive(
    const SlotProblem& problem, std::span<const double> ap_frequency,
    std::span<const double> block_frequency, const AuxQueues& queues,
    double V, const PartitionOptions& options = {},
    std::size_t limit = 1'000'000);

/// Objective used by the partition search for a full partition vector, or
/// nullopt if it violates the AP or gateway energy budgets (gateway budgets
/// relaxed to each gateway's least achievable energy, as in the lenient
/// search).
std::optional<double> partition_objective(
    const SlotProblem& problem, std::span<const double> ap_frequency,
    std::span<const double> block_frequency, const AuxQueues& queues,
    double V, std::span<const std::size_t> partition);

struct StepOptions {
  bool strict = false;
  std::size_t max_partition_nodes = 0;
  /// Skip the partition block (frequencies only).
  bool optimize_partition = true;
};

struct StepResult {
  Decision decision;
  SlotEvaluation evaluation;
  std::vector<double> objective_history;  // after each BCD round
  int rounds = 0;
  std::size_t partition_nodes = 0;
  std::size_t bisection_cap_hits = 0;
  std::size_t relaxed_gateways = 0;
  bool ap_energy_relaxed = false;
  bool partition_truncated = false;
};

/// One slot of block coordinate descent. Each round re-splits AP energy
/// between inference and mining (balance_energy_split, kept only if it
/// improves), then solves f^bloc, f^A and l in turn; rounds repeat until the
/// relative objective improvement drops below bcd_tol. `previous`
/// is last slot's partition (empty at t = 0, which starts at the midpoint).
StepResult dpra_step(const SlotProblem& problem, const AuxQueues& queues,
                     const LyapunovParams& params,
                     std::span<const std::size_t> previous = {},
                     const StepOptions& options = {});

struct SplitResult {
  std::vector<double> ap_frequency;
  std::vector<double> block_frequency;
  double makespan = 0.0;
  double block_time = 0.0;
  int evaluations = 0;
};

/// Joint line search over the makespan target lambda for fixed l: each
/// lambda fixes the smallest AP shares meeting it, solve_fbloc spends the
/// remaining AP energy on mining, and V (makespan + block time) is minimized
/// over lambda. Returns nullopt if no lambda leaves a feasible split.
std::optional<SplitResult> balance_energy_split(
    const SlotProblem& problem, std::span<const std::size_t> partition,
    double V, const BisectionOptions& options = {});

/// Initial AP-inference shares: each AP's minimum frequency split equally
/// across its gateways, lowered where needed so that inference uses at most
/// half of the slot's AP energy.
std::vector<double> initial_ap_frequency(const SlotProblem& problem,
                                         std::span<const std::size_t> partition);

/// H = sum_j g(full-offload O_j)^2 + J/2 (U_min^2 + U_max^2).
double lemma1_constant(const SlotProblem& problem);

struct DriftReport {
  double lyapunov_before = 0.0;
  double lyapunov_after = 0.0;
  double delta = 0.0;      // L(t+1) - L(t)
  double h_constant = 0.0;
  double bound = 0.0;      // sum_j [Q (U_min - U) + S (U - U_max)] + H
  bool holds() const { return delta <= bound; }
};

/// L = 1/2 sum_j (Q_j^2 + S_j^2).
double lyapunov(const AuxQueues& queues);

DriftReport drift_report(const AuxQueues& before, const AuxQueues& after,
                         std::span<const double> reputations, double h_constant,
                         double u_min, double u_max);

/// Latency floor evaluated at mean arrivals and mean channel: fastest
/// inference of the whole model, smallest forward output on the uplink, and
/// block mining at the largest f_max under full-offload reputation.
double theorem1_tau_min(const Scenario& scenario,
                        const ReputationParams& reputation);

}  // namespace bdt
