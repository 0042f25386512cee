#include "bdt/dpra.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "bdt/error.hpp"

namespace bdt {
namespace {

bool exceeds(double used, double budget) {
  return used > budget + kEnergyTolerance * std::max(budget, 1e-12);
}

}  // namespace

AuxQueues AuxQueues::initial(std::size_t num_aps, double u_min, double u_max) {
  const double mid = 0.5 * (u_min + u_max);
  return AuxQueues{std::vector<double>(num_aps, mid),
                   std::vector<double>(num_aps, mid)};
}

AuxQueues update_queues(const AuxQueues& queues,
                        std::span<const double> reputations, double u_min,
                        double u_max) {
  AuxQueues next;
  next.q.resize(queues.size());
  next.s.resize(queues.size());
  for (std::size_t j = 0; j < queues.size(); ++j) {
    next.q[j] = std::max(queues.q[j] - reputations[j] + u_min, 0.0);
    next.s[j] = std::max(queues.s[j] + reputations[j] - u_max, 0.0);
  }
  return next;
}

SlotProblem::SlotProblem(const Scenario& scenario,
                         const ReputationParams& reputation,
                         SlotRealization realization, SlotOptions options)
    : scenario_(&scenario),
      reputation_(&reputation),
      realization_(std::move(realization)),
      options_(options) {
  const Topology& topo = scenario.topology;
  if (realization_.data.size() != topo.num_devices() ||
      realization_.fading.size() != topo.num_gateways() ||
      realization_.interference.size() != topo.num_gateways() ||
      realization_.gateway_energy.size() != topo.num_gateways() ||
      realization_.ap_energy.size() != topo.num_aps()) {
    throw InvalidSpecError("realization does not match the topology");
  }
  if (options_.consensus == ConsensusMode::FixedDifficulty &&
      !(options_.fixed_difficulty > 0.0)) {
    throw InvalidSpecError("fixed difficulty must be positive");
  }
  rates_.resize(topo.num_gateways());
  for (std::size_t m = 0; m < rates_.size(); ++m) {
    const GatewayParams& g = scenario.gateways[m];
    const double gain =
        channel_gain(scenario.channel, g, realization_.fading[m]);
    rates_[m] = uplink_rate(scenario.channel, g, gain,
                            realization_.interference[m]);
  }
}

double SlotProblem::difficulty_for(double reputation) const {
  if (options_.consensus == ConsensusMode::FixedDifficulty) {
    return options_.fixed_difficulty;
  }
  return difficulty(*reputation_, reputation);
}

std::vector<std::size_t> SlotProblem::midpoint_partition() const {
  std::vector<std::size_t> l(num_devices());
  for (std::size_t n = 0; n < l.size(); ++n) {
    l[n] = (scenario_->model(n).num_layers() + 1) / 2;
  }
  return l;
}

SlotEvaluation SlotProblem::evaluate(const Decision& decision,
                                     const AuxQueues& queues,
                                     double V) const {
  const Scenario& sc = *scenario_;
  const Topology& topo = sc.topology;
  const std::size_t n_gw = topo.num_gateways();
  const std::size_t n_ap = topo.num_aps();
  if (decision.partition.size() != topo.num_devices() ||
      decision.ap_frequency.size() != n_gw ||
      decision.block_frequency.size() != n_ap || queues.size() != n_ap) {
    throw InvalidSpecError("decision/queue sizes do not match the topology");
  }

  for (std::size_t j = 0; j < n_ap; ++j) {
    const double fmax = sc.aps[j].max_frequency_hz;
    double sum = 0.0;
    for (std::size_t m : topo.gateways_of_ap(j)) {
      if (decision.ap_frequency[m] < 0.0) {
        throw InfeasibleDecisionError("negative AP inference frequency");
      }
      sum += decision.ap_frequency[m];
    }
    if (sum > fmax * (1.0 + 1e-12)) {
      throw InfeasibleDecisionError("AP " + std::to_string(j) +
                                    " inference shares exceed f_max");
    }
    const double fb = decision.block_frequency[j];
    if (fb < 0.0 || fb > fmax * (1.0 + 1e-12)) {
      throw InfeasibleDecisionError("block frequency of AP " +
                                    std::to_string(j) + " outside [0, f_max]");
    }
  }

  const auto& data = realization_.data;
  const auto& part = decision.partition;
  SlotEvaluation ev;
  ev.gateway_time.resize(n_gw);
  ev.offload_time.resize(n_gw);
  ev.ap_time.resize(n_gw);
  ev.total_time.resize(n_gw);
  ev.gateway_inference_energy.resize(n_gw);
  ev.offload_energy.resize(n_gw);
  ev.gateway_energy.resize(n_gw);
  ev.ap_inference_energy.resize(n_gw);
  for (std::size_t m = 0; m < n_gw; ++m) {
    const GatewayParams& g = sc.gateways[m];
    const ApParams& ap = sc.ap_of_gateway(m);
    const GatewayWorkload w = gateway_workload(sc, m, data, part);
    ev.gateway_time[m] = w.local_flops / (g.flops_per_cycle * g.frequency_hz);
    ev.gateway_inference_energy[m] = g.switched_capacitance * g.frequency_hz *
                                     g.frequency_hz / g.flops_per_cycle *
                                     w.local_flops;
    if (w.offload_bits > 0.0) {
      if (!(rates_[m] > 0.0)) {
        throw InfeasibleSlotError("gateway " + std::to_string(m) +
                                      " has a zero uplink rate",
                                  realization_.t);
      }
      ev.offload_time[m] = w.offload_bits / rates_[m];
    }
    ev.offload_energy[m] = g.transmit_power_w * ev.offload_time[m];
    const double fa = decision.ap_frequency[m];
    if (w.remote_flops > 0.0) {
      if (!(fa > 0.0)) {
        throw InfeasibleDecisionError("gateway " + std::to_string(m) +
                                      " offloads work to a zero AP share");
      }
      ev.ap_time[m] = w.remote_flops / (ap.flops_per_cycle * fa);
    }
    ev.ap_inference_energy[m] =
        ap.switched_capacitance * fa * fa / ap.flops_per_cycle * w.remote_flops;
    ev.total_time[m] = ev.gateway_time[m] + ev.offload_time[m] + ev.ap_time[m];
    ev.gateway_energy[m] =
        gateway_energy(ev.gateway_inference_energy[m], ev.offload_energy[m]);
    if (exceeds(ev.gateway_energy[m], realization_.gateway_energy[m])) {
      ++ev.gateway_energy_violations;
    }
  }

  ev.offloaded.assign(n_ap, 0.0);
  ev.reputation.resize(n_ap);
  ev.difficulty.resize(n_ap);
  ev.ap_inference_energy_by_ap.assign(n_ap, 0.0);
  for (std::size_t j = 0; j < n_ap; ++j) {
    for (std::size_t m : topo.gateways_of_ap(j)) {
      ev.offloaded[j] += gateway_workload(sc, m, data, part).remote_flops;
      ev.ap_inference_energy_by_ap[j] += ev.ap_inference_energy[m];
    }
    ev.reputation[j] = reputation(*reputation_, ev.offloaded[j]);
    ev.difficulty[j] = difficulty_for(ev.reputation[j]);
  }
  BlockRace race = block_time_with_difficulty(
      *reputation_, decision.block_frequency, ev.difficulty);
  ev.rate = std::move(race.rates);
  ev.total_rate = race.total_rate;
  ev.block_time = race.block_time;

  ev.block_energy.resize(n_ap);
  ev.ap_energy.resize(n_ap);
  for (std::size_t j = 0; j < n_ap; ++j) {
    ev.block_energy[j] = block_energy(sc.aps[j].switched_capacitance,
                                      ev.block_time,
                                      decision.block_frequency[j]);
    ev.ap_energy[j] =
        ap_energy(topo, j, ev.ap_inference_energy, ev.block_energy[j]);
    if (exceeds(ev.ap_energy[j], realization_.ap_energy[j])) {
      ++ev.ap_energy_violations;
    }
  }

  ev.makespan = 0.0;
  for (double t : ev.total_time) ev.makespan = std::max(ev.makespan, t);
  ev.latency = slot_latency(ev.total_time, ev.block_time);
  if (options_.queue_incentive) {
    for (std::size_t j = 0; j < n_ap; ++j) {
      ev.queue_term += (queues.s[j] - queues.q[j]) * ev.reputation[j];
    }
  }
  ev.objective = V * ev.latency + ev.queue_term;
  return ev;
}

double drift_plus_penalty(const SlotProblem& problem, const Decision& decision,
                          const AuxQueues& queues, double V) {
  return problem.evaluate(decision, queues, V).objective;
}

std::vector<double> initial_ap_frequency(
    const SlotProblem& problem, std::span<const std::size_t> partition) {
  const Scenario& sc = problem.scenario();
  const Topology& topo = sc.topology;
  std::vector<double> f(topo.num_gateways(), 0.0);
  for (std::size_t j = 0; j < topo.num_aps(); ++j) {
    const auto& gws = topo.gateways_of_ap(j);
    const ApParams& ap = sc.aps[j];
    const double share =
        ap.min_frequency_hz / static_cast<double>(std::max<std::size_t>(gws.size(), 1));
    double energy = 0.0;
    for (std::size_t m : gws) {
      f[m] = share;
      const double work =
          gateway_workload(sc, m, problem.realization().data, partition)
              .remote_flops;
      energy += ap.switched_capacitance * share * share / ap.flops_per_cycle *
                work;
    }
    const double cap = 0.5 * problem.ap_energy_budget(j);
    if (energy > cap) {
      const double scale = cap > 0.0 ? std::sqrt(cap / energy) : 0.0;
      for (std::size_t m : gws) f[m] *= scale;
    }
  }
  return f;
}

double lemma1_constant(const SlotProblem& problem) {
  const Scenario& sc = problem.scenario();
  const Topology& topo = sc.topology;
  const ReputationParams& rep = problem.reputation_params();
  std::vector<double> full(topo.num_aps(), 0.0);
  for (std::size_t n = 0; n < topo.num_devices(); ++n) {
    full[topo.ap_of_device(n)] += problem.data(n) * sc.model(n).total_flops();
  }
  double h = 0.0;
  for (double o : full) {
    const double u = rep.g(o);
    h += u * u;
  }
  h += 0.5 * static_cast<double>(topo.num_aps()) *
       (rep.u_min * rep.u_min + rep.u_max * rep.u_max);
  return h;
}

double lyapunov(const AuxQueues& queues) {
  double sum = 0.0;
  for (std::size_t j = 0; j < queues.size(); ++j) {
    sum += queues.q[j] * queues.q[j] + queues.s[j] * queues.s[j];
  }
  return 0.5 * sum;
}

DriftReport drift_report(const AuxQueues& before, const AuxQueues& after,
                         std::span<const double> reputations, double h_constant,
                         double u_min, double u_max) {
  DriftReport r;
  r.lyapunov_before = lyapunov(before);
  r.lyapunov_after = lyapunov(after);
  double delta = 0.0;
  double linear = 0.0;
  for (std::size_t j = 0; j < before.size(); ++j) {
    delta += after.q[j] * after.q[j] + after.s[j] * after.s[j] -
             before.q[j] * before.q[j] - before.s[j] * before.s[j];
    linear += before.q[j] * (u_min - reputations[j]) +
              before.s[j] * (reputations[j] - u_max);
  }
  r.delta = 0.5 * delta;
  r.h_constant = h_constant;
  r.bound = linear + h_constant;
  return r;
}

double theorem1_tau_min(const Scenario& sc, const ReputationParams& rep) {
  const Topology& topo = sc.topology;
  double best_gateway_speed = 0.0;
  double best_ap_phi = 0.0;
  double best_fmax = 0.0;
  for (const GatewayParams& g : sc.gateways) {
    best_gateway_speed =
        std::max(best_gateway_speed, g.flops_per_cycle * g.frequency_hz);
  }
  for (const ApParams& ap : sc.aps) {
    best_ap_phi = std::max(best_ap_phi, ap.flops_per_cycle);
    best_fmax = std::max(best_fmax, ap.max_frequency_hz);
  }
  const double speed = std::max(best_gateway_speed, best_ap_phi * best_fmax);

  double worst = 0.0;
  for (std::size_t m = 0; m < topo.num_gateways(); ++m) {
    double work = 0.0;
    double bits = 0.0;
    for (std::size_t n : topo.devices_of_gateway(m)) {
      work += sc.mean_arrivals[n] * sc.model(n).total_flops();
      bits += sc.mean_arrivals[n] * sc.model(n).min_output_bits();
    }
    const GatewayParams& g = sc.gateways[m];
    const double mean_gain = channel_gain(sc.channel, g, 1.0);
    const double r =
        uplink_rate(sc.channel, g, mean_gain, sc.channel.interference_mean_w);
    const double t = work / speed + (bits > 0.0 ? bits / r : 0.0);
    worst = std::max(worst, t);
  }

  std::vector<double> full(topo.num_aps(), 0.0);
  for (std::size_t n = 0; n < topo.num_devices(); ++n) {
    full[topo.ap_of_device(n)] +=
        sc.mean_arrivals[n] * sc.model(n).total_flops();
  }
  double weight = 0.0;
  for (double o : full) weight += std::exp(rep.beta + rep.alpha * rep.g(o));
  return worst + rep.quantile_factor() / best_fmax / weight;
}

}  // namespace bdt
