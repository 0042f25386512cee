#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "bdt/dpra.hpp"

namespace bdt {

enum class Policy { Dpra, Wdpo, Wtcm };

Policy parse_policy(std::string_view name);
std::string_view to_string(Policy policy);

/// Parameters of the comparison policies.
struct BaselineSpec {
  /// WDPO partition vector; empty means ceil(L_n / 2) for every device.
  std::vector<std::size_t> wdpo_partition;
  /// WTCM difficulty; unset means exp(-alpha (U_min + U_max) / 2 - beta).
  std::optional<double> wtcm_difficulty;
  /// Keep the (S - Q) U term in the WTCM objective.
  bool wtcm_queue_incentive = true;
};

double default_fixed_difficulty(const ReputationParams& reputation);

/// WDPO partition for a scenario; throws OutOfRangeError if a configured
/// entry is outside 1..L_n.
std::vector<std::size_t> wdpo_partition(const Scenario& scenario,
                                        const BaselineSpec& spec);

/// Consensus options a policy evaluates its decisions under.
SlotOptions policy_slot_options(Policy policy,
                                const ReputationParams& reputation,
                                const BaselineSpec& spec);

/// Partition fixed by the spec, f^bloc and f^A by BCD.
StepResult wdpo_step(const SlotProblem& problem, const AuxQueues& queues,
                     const LyapunovParams& params, const BaselineSpec& spec,
                     const StepOptions& options = {});

/// Full BCD with every AP's difficulty pinned to the fixed value. `problem`
/// may carry any consensus mode; the step re-poses it with fixed difficulty.
StepResult wtcm_step(const SlotProblem& problem, const AuxQueues& queues,
                     const LyapunovParams& params, const BaselineSpec& spec,
                     std::span<const std::size_t> previous = {},
                     const StepOptions& options = {});

/// Dispatches to dpra_step, wdpo_step or wtcm_step.
StepResult policy_step(Policy policy, const SlotProblem& problem,
                       const AuxQueues& queues, const LyapunovParams& params,
                       const BaselineSpec& spec,
                       std::span<const std::size_t> previous = {},
                       const StepOptions& options = {});

}  // namespace bdt
