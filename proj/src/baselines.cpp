#include "bdt/baselines.hpp"

#include <cmath>
#include <string>

#include "bdt/error.hpp"

namespace bdt {

Policy parse_policy(std::string_view name) {
  if (name == "dpra" || name == "DPRA") return Policy::Dpra;
  if (name == "wdpo" || name == "WDPO") return Policy::Wdpo;
  if (name == "wtcm" || name == "WTCM") return Policy::Wtcm;
  throw InvalidSpecError("unknown policy '" + std::string(name) + "'");
}

std::string_view to_string(Policy policy) {
  switch (policy) {
    case Policy::Dpra:
      return "dpra";
    case Policy::Wdpo:
      return "wdpo";
    case Policy::Wtcm:
      return "wtcm";
  }
  return "?";
}

double default_fixed_difficulty(const ReputationParams& reputation) {
  return std::exp(-reputation.alpha * 0.5 * (reputation.u_min + reputation.u_max) -
                  reputation.beta);
}

std::vector<std::size_t> wdpo_partition(const Scenario& scenario,
                                        const BaselineSpec& spec) {
  const std::size_t n_dev = scenario.topology.num_devices();
  std::vector<std::size_t> l(n_dev);
  if (spec.wdpo_partition.empty()) {
    for (std::size_t n = 0; n < n_dev; ++n) {
      l[n] = (scenario.model(n).num_layers() + 1) / 2;
    }
    return l;
  }
  if (spec.wdpo_partition.size() != n_dev) {
    throw InvalidSpecError("WDPO partition needs one entry per device");
  }
  for (std::size_t n = 0; n < n_dev; ++n) {
    l[n] = spec.wdpo_partition[n];
    if (l[n] < 1 || l[n] > scenario.model(n).num_layers()) {
      throw OutOfRangeError("WDPO partition point of device " +
                            std::to_string(n) + " outside 1..L");
    }
  }
  return l;
}

SlotOptions policy_slot_options(Policy policy,
                                const ReputationParams& reputation,
                                const BaselineSpec& spec) {
  SlotOptions opts;
  if (policy == Policy::Wtcm) {
    opts.consensus = ConsensusMode::FixedDifficulty;
    opts.fixed_difficulty =
        spec.wtcm_difficulty.value_or(default_fixed_difficulty(reputation));
    opts.queue_incentive = spec.wtcm_queue_incentive;
    if (!(opts.fixed_difficulty > 0.0)) {
      throw InvalidSpecError("WTCM difficulty must be positive");
    }
  }
  return opts;
}

StepResult wdpo_step(const SlotProblem& problem, const AuxQueues& queues,
                     const LyapunovParams& params, const BaselineSpec& spec,
                     const StepOptions& options) {
  StepOptions opts = options;
  opts.optimize_partition = false;
  const auto l = wdpo_partition(problem.scenario(), spec);
  return dpra_step(problem, queues, params, l, opts);
}

StepResult wtcm_step(const SlotProblem& problem, const AuxQueues& queues,
                     const LyapunovParams& params, const BaselineSpec& spec,
                     std::span<const std::size_t> previous,
                     const StepOptions& options) {
  const SlotOptions wanted =
      policy_slot_options(Policy::Wtcm, problem.reputation_params(), spec);
  const SlotOptions& have = problem.options();
  if (have.consensus == wanted.consensus &&
      have.fixed_difficulty == wanted.fixed_difficulty &&
      have.queue_incentive == wanted.queue_incentive) {
    return dpra_step(problem, queues, params, previous, options);
  }
  const SlotProblem fixed(problem.scenario(), problem.reputation_params(),
                          problem.realization(), wanted);
  return dpra_step(fixed, queues, params, previous, options);
}

StepResult policy_step(Policy policy, const SlotProblem& problem,
                       const AuxQueues& queues, const LyapunovParams& params,
                       const BaselineSpec& spec,
                       std::span<const std::size_t> previous,
                       const StepOptions& options) {
  switch (policy) {
    case Policy::Dpra:
      return dpra_step(problem, queues, params, previous, options);
    case Policy::Wdpo:
      return wdpo_step(problem, queues, params, spec, options);
    case Policy::Wtcm:
      return wtcm_step(problem, queues, params, spec, previous, options);
  }
  throw InvalidSpecError("unknown policy");
}

}  // namespace bdt
