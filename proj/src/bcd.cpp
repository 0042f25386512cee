#include <algorithm>
#include <cmath>
#include <limits>

#include "bdt/dpra.hpp"
#include "bdt/error.hpp"

namespace bdt {
namespace {

std::vector<std::size_t> starting_partition(
    const SlotProblem& problem, std::span<const std::size_t> previous) {
  const Scenario& sc = problem.scenario();
  std::vector<std::size_t> l;
  if (previous.size() == problem.num_devices()) {
    l.assign(previous.begin(), previous.end());
    for (std::size_t n = 0; n < l.size(); ++n) {
      l[n] = std::clamp<std::size_t>(l[n], 1, sc.model(n).num_layers());
    }
  } else {
    l = problem.midpoint_partition();
  }
  // An AP without energy cannot run offloaded work.
  for (std::size_t n = 0; n < l.size(); ++n) {
    if (!(problem.ap_energy_budget(sc.topology.ap_of_device(n)) > 0.0)) {
      l[n] = sc.model(n).num_layers();
    }
  }
  // A gateway over its energy arrival restarts at its least-energy points.
  for (std::size_t m = 0; m < problem.num_gateways(); ++m) {
    const GatewayParams& g = sc.gateways[m];
    const double rate = problem.rate(m);
    auto energy = [&](std::size_t n, std::size_t point) {
      const ModelProfile& model = sc.model(n);
      const double d = problem.data(n);
      const double bits = d * model.output_bits(point);
      double e = g.switched_capacitance * g.frequency_hz * g.frequency_hz /
                 g.flops_per_cycle * d * model.prefix_flops(point);
      if (bits > 0.0) {
        e += rate > 0.0 ? g.transmit_power_w * bits / rate
                        : std::numeric_limits<double>::infinity();
      }
      return e;
    };
    double used = 0.0;
    for (std::size_t n : sc.topology.devices_of_gateway(m)) used += energy(n, l[n]);
    const double budget = problem.gateway_energy_budget(m);
    if (used <= budget + kEnergyTolerance * std::max(budget, 1e-12)) continue;
    for (std::size_t n : sc.topology.devices_of_gateway(m)) {
      std::size_t best = 1;
      for (std::size_t p = 2; p <= sc.model(n).num_layers(); ++p) {
        if (energy(n, p) < energy(n, best)) best = p;
      }
      l[n] = best;
    }
  }
  return l;
}

std::vector<double> idle_shares(const SlotProblem& problem) {
  const Scenario& sc = problem.scenario();
  std::vector<double> f(problem.num_gateways());
  for (std::size_t m = 0; m < f.size(); ++m) {
    const std::size_t j = sc.topology.ap_of_gateway(m);
    f[m] = sc.aps[j].min_frequency_hz /
           static_cast<double>(sc.topology.gateways_of_ap(j).size());
  }
  return f;
}

}  // namespace

std::optional<SplitResult> balance_energy_split(
    const SlotProblem& problem, std::span<const std::size_t> partition,
    double V, const BisectionOptions& options) {
  const Scenario& sc = problem.scenario();
  const Topology& topo = sc.topology;
  const std::size_t n_gw = topo.num_gateways();
  const std::size_t n_ap = topo.num_aps();
  const auto& data = problem.realization().data;

  std::vector<double> fixed(n_gw);
  std::vector<double> work(n_gw);
  double max_fixed = 0.0;
  double gap = 0.0;  // smallest AP-side time any gateway can reach
  for (std::size_t m = 0; m < n_gw; ++m) {
    const GatewayParams& g = sc.gateways[m];
    const ApParams& ap = sc.ap_of_gateway(m);
    const GatewayWorkload w = gateway_workload(sc, m, data, partition);
    fixed[m] = w.local_flops / (g.flops_per_cycle * g.frequency_hz);
    if (w.offload_bits > 0.0) {
      if (!(problem.rate(m) > 0.0)) return std::nullopt;
      fixed[m] += w.offload_bits / problem.rate(m);
    }
    work[m] = w.remote_flops;
    max_fixed = std::max(max_fixed, fixed[m]);
    gap = std::max(gap, work[m] / (ap.flops_per_cycle * ap.max_frequency_hz));
  }
  const std::vector<double> idle = idle_shares(problem);

  std::optional<SplitResult> best;
  double best_value = std::numeric_limits<double>::infinity();
  int evaluations = 0;
  auto value_at = [&](double lambda) {
    ++evaluations;
    std::vector<double> fa(n_gw);
    for (std::size_t m = 0; m < n_gw; ++m) {
      if (work[m] <= 0.0) {
        fa[m] = idle[m];
        continue;
      }
      const double slack = lambda - fixed[m];
      if (!(slack > 0.0)) return std::numeric_limits<double>::infinity();
      fa[m] = work[m] / (sc.ap_of_gateway(m).flops_per_cycle * slack);
    }
    for (std::size_t j = 0; j < n_ap; ++j) {
      const ApParams& ap = sc.aps[j];
      double sum = 0.0;
      double energy = 0.0;
      for (std::size_t m : topo.gateways_of_ap(j)) {
        sum += fa[m];
        energy += ap.switched_capacitance * fa[m] * fa[m] /
                  ap.flops_per_cycle * work[m];
      }
      if (sum > ap.max_frequency_hz) return std::numeric_limits<double>::infinity();
      if (energy > problem.ap_energy_budget(j)) {
        return std::numeric_limits<double>::infinity();
      }
    }
    FblocResult fb;
    try {
      fb = solve_fbloc(problem, partition, fa, options);
    } catch (const InfeasibleSlotError&) {
      return std::numeric_limits<double>::infinity();
    } catch (const NoMinerError&) {
      return std::numeric_limits<double>::infinity();
    }
    double makespan = 0.0;
    for (std::size_t m = 0; m < n_gw; ++m) {
      const double t =
          fixed[m] + (work[m] > 0.0
                          ? work[m] / (sc.ap_of_gateway(m).flops_per_cycle * fa[m])
                          : 0.0);
      makespan = std::max(makespan, t);
    }
    const double value = V * (makespan + fb.block_time);
    if (value < best_value) {
      best_value = value;
      best = SplitResult{std::move(fa), std::move(fb.frequency), makespan,
                         fb.block_time, 0};
    }
    return value;
  };

  if (!(gap > 0.0)) {
    value_at(max_fixed);
  } else {
    // Coarse log grid over the AP-side time, then golden section around the
    // best grid point.
    constexpr int kPerDecade = 4;
    constexpr int kDecades = 12;
    constexpr int kGoldenIters = 40;
    const double log_lo = std::log10(gap);
    int best_k = -1;
    double best_grid = std::numeric_limits<double>::infinity();
    for (int k = 0; k <= kPerDecade * kDecades; ++k) {
      const double v = value_at(
          max_fixed + std::pow(10.0, log_lo + static_cast<double>(k) / kPerDecade));
      if (v < best_grid) {
        best_grid = v;
        best_k = k;
      }
    }
    if (best_k >= 0) {
      const double step = 1.0 / kPerDecade;
      double a = log_lo + (best_k - 1) * step;
      double b = log_lo + (best_k + 1) * step;
      const double r = 0.5 * (std::sqrt(5.0) - 1.0);
      auto f = [&](double x) { return value_at(max_fixed + std::pow(10.0, x)); };
      double x1 = b - r * (b - a);
      double x2 = a + r * (b - a);
      double f1 = f(x1);
      double f2 = f(x2);
      for (int i = 0; i < kGoldenIters; ++i) {
        if (f1 <= f2) {
          b = x2;
          x2 = x1;
          f2 = f1;
          x1 = b - r * (b - a);
          f1 = f(x1);
        } else {
          a = x1;
          x1 = x2;
          f1 = f2;
          x2 = a + r * (b - a);
          f2 = f(x2);
        }
      }
    }
  }
  if (best) best->evaluations = evaluations;
  return best;
}

StepResult dpra_step(const SlotProblem& problem, const AuxQueues& queues,
                     const LyapunovParams& params,
                     std::span<const std::size_t> previous,
                     const StepOptions& options) {
  if (!(params.V >= 0.0) || params.bcd_max_rounds < 1 ||
      !(params.bcd_tol > 0.0) || !(params.bisection_tol > 0.0) ||
      params.bisection_max_iters < 1) {
    throw InvalidSpecError("invalid Lyapunov parameters");
  }
  const BisectionOptions bis{params.bisection_tol, params.bisection_max_iters};
  PartitionOptions popts;
  popts.strict = options.strict;
  popts.max_nodes = options.max_partition_nodes;

  Decision current;
  current.partition = options.optimize_partition
                          ? starting_partition(problem, previous)
                          : std::vector<std::size_t>(previous.begin(),
                                                     previous.end());
  if (current.partition.size() != problem.num_devices()) {
    current.partition = problem.midpoint_partition();
  }
  current.ap_frequency = initial_ap_frequency(problem, current.partition);
  current.block_frequency.resize(problem.num_aps());
  for (std::size_t j = 0; j < problem.num_aps(); ++j) {
    current.block_frequency[j] =
        problem.scenario().aps[j].max_frequency_hz;
  }

  StepResult out;
  bool have_best = false;
  double previous_objective = std::numeric_limits<double>::infinity();
  std::vector<bool> relaxed(problem.num_gateways(), false);

  for (int round = 0; round < params.bcd_max_rounds; ++round) {
    Decision next = current;
    if (auto split = balance_energy_split(problem, next.partition, params.V,
                                          bis)) {
      Decision candidate = next;
      candidate.ap_frequency = std::move(split->ap_frequency);
      candidate.block_frequency = std::move(split->block_frequency);
      bool take = !have_best;
      if (!take) {
        try {
          take = problem.evaluate(candidate, queues, params.V).objective <
                 out.objective_history.back();
        } catch (const InfeasibleDecisionError&) {
          take = false;
        }
      }
      if (take) next = std::move(candidate);
    }
    try {
      FblocResult fb =
          solve_fbloc(problem, next.partition, next.ap_frequency, bis);
      if (!fb.converged) ++out.bisection_cap_hits;
      next.block_frequency = std::move(fb.frequency);

      FaResult fa =
          solve_fa(problem, next.partition, next.block_frequency, bis);
      if (!fa.converged) ++out.bisection_cap_hits;
      next.ap_frequency = std::move(fa.frequency);

      if (options.optimize_partition) {
        PartitionResult pr =
            solve_partition(problem, next.ap_frequency, next.block_frequency,
                            queues, params.V, popts, next.partition);
        out.partition_nodes += pr.nodes;
        out.partition_truncated |= pr.truncated;
        out.ap_energy_relaxed |= pr.ap_energy_relaxed;
        for (std::size_t m = 0; m < relaxed.size(); ++m) {
          if (pr.gateway_relaxed[m]) relaxed[m] = true;
        }
        next.partition = std::move(pr.partition);
      }
    } catch (const InfeasibleSlotError& e) {
      if (options.strict || have_best) {
        if (options.strict) throw;
        break;
      }
      // Nothing feasible from the warm start: run everything locally unless
      // the partition is pinned.
      if (options.optimize_partition) {
        next.partition.clear();
        for (std::size_t n = 0; n < problem.num_devices(); ++n) {
          next.partition.push_back(problem.scenario().model(n).num_layers());
        }
      }
      next.ap_frequency = idle_shares(problem);
      FblocResult fb =
          solve_fbloc(problem, next.partition, next.ap_frequency, bis);
      next.block_frequency = std::move(fb.frequency);
      out.ap_energy_relaxed = true;
    }

    SlotEvaluation ev = problem.evaluate(next, queues, params.V);
    out.rounds = round + 1;
    if (have_best && !(ev.objective < out.evaluation.objective)) {
      // The sweep did not improve on the incumbent: keep it and stop.
      out.objective_history.push_back(out.evaluation.objective);
      break;
    }
    out.objective_history.push_back(ev.objective);
    out.decision = next;
    out.evaluation = std::move(ev);
    have_best = true;
    const double obj = out.objective_history.back();
    current = std::move(next);
    if (std::isfinite(previous_objective) &&
        previous_objective - obj <= params.bcd_tol * std::abs(previous_objective)) {
      break;
    }
    previous_objective = obj;
  }
  out.relaxed_gateways =
      static_cast<std::size_t>(std::count(relaxed.begin(), relaxed.end(), true));
  return out;
}

}  // namespace bdt
