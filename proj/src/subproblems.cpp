#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "bdt/dpra.hpp"
#include "bdt/error.hpp"

namespace bdt {
namespace {

constexpr int kMaxBracketDoublings = 4096;

bool converged(double lo, double hi, double rel_tol) {
  return hi - lo <= rel_tol * std::abs(hi);
}

}  // namespace

FblocResult solve_fbloc(const SlotProblem& problem,
                        std::span<const std::size_t> partition,
                        std::span<const double> ap_frequency,
                        const BisectionOptions& options) {
  const Scenario& sc = problem.scenario();
  const Topology& topo = sc.topology;
  const ReputationParams& rep = problem.reputation_params();
  const std::size_t n_ap = topo.num_aps();
  const auto& data = problem.realization().data;

  std::vector<double> weight(n_ap);    // 1 / gamma_j
  std::vector<double> residual(n_ap);  // energy left after inference
  for (std::size_t j = 0; j < n_ap; ++j) {
    const ApParams& ap = sc.aps[j];
    double offloaded = 0.0;
    double inference = 0.0;
    for (std::size_t m : topo.gateways_of_ap(j)) {
      const double work = gateway_workload(sc, m, data, partition).remote_flops;
      offloaded += work;
      inference += ap.switched_capacitance * ap_frequency[m] *
                   ap_frequency[m] / ap.flops_per_cycle * work;
    }
    weight[j] = 1.0 / problem.difficulty_for(rep.g(offloaded));
    const double budget = problem.ap_energy_budget(j);
    residual[j] = budget - inference;
    if (residual[j] < -kEnergyTolerance * std::max(budget, 1e-12)) {
      throw InfeasibleSlotError("AP " + std::to_string(j) +
                                    " inference energy exceeds its arrival",
                                problem.realization().t);
    }
    residual[j] = std::max(residual[j], 0.0);
  }
  if (std::all_of(residual.begin(), residual.end(),
                  [](double r) { return r <= 0.0; })) {
    throw NoMinerError("no AP has energy left for block mining");
  }

  const double c = rep.quantile_factor();
  auto freq_at = [&](double mu, std::size_t j) {
    const ApParams& ap = sc.aps[j];
    if (residual[j] <= 0.0) return 0.0;
    return std::min(ap.max_frequency_hz,
                    std::cbrt(residual[j] / (ap.switched_capacitance * mu)));
  };
  // mu is achievable iff the rate it allows clears c / mu.
  auto achievable = [&](double mu) {
    double r = 0.0;
    for (std::size_t j = 0; j < n_ap; ++j) r += freq_at(mu, j) * weight[j];
    return mu * r >= c;
  };

  double fastest = 0.0;
  double slowest = 0.0;
  for (std::size_t j = 0; j < n_ap; ++j) {
    fastest += sc.aps[j].max_frequency_hz * weight[j];
    slowest += sc.aps[j].min_frequency_hz * weight[j];
  }
  double lo = c / fastest;
  FblocResult out;
  out.frequency.resize(n_ap);
  if (achievable(lo)) {
    // Energy never binds: every AP mines at f_max.
    for (std::size_t j = 0; j < n_ap; ++j) {
      out.frequency[j] = residual[j] > 0.0 ? sc.aps[j].max_frequency_hz : 0.0;
    }
  } else {
    double hi = slowest > 0.0 ? c / slowest : 2.0 * lo;
    int doublings = 0;
    while (!achievable(hi)) {
      lo = hi;
      hi *= 2.0;
      if (++doublings > kMaxBracketDoublings || !std::isfinite(hi)) {
        throw SolverError("block-frequency bisection failed to bracket");
      }
    }
    out.converged = false;
    while (out.iterations < options.max_iters) {
      if (converged(lo, hi, options.rel_tol)) {
        out.converged = true;
        break;
      }
      const double mid = 0.5 * (lo + hi);
      if (achievable(mid)) {
        hi = mid;
      } else {
        lo = mid;
      }
      ++out.iterations;
    }
    if (!out.converged) out.converged = converged(lo, hi, options.rel_tol);
    for (std::size_t j = 0; j < n_ap; ++j) out.frequency[j] = freq_at(hi, j);
  }

  double rate = 0.0;
  for (std::size_t j = 0; j < n_ap; ++j) rate += out.frequency[j] * weight[j];
  out.block_time = c / rate;
  return out;
}

FaResult solve_fa(const SlotProblem& problem,
                  std::span<const std::size_t> partition,
                  std::span<const double> block_frequency,
                  const BisectionOptions& options) {
  const Scenario& sc = problem.scenario();
  const Topology& topo = sc.topology;
  const ReputationParams& rep = problem.reputation_params();
  const std::size_t n_gw = topo.num_gateways();
  const std::size_t n_ap = topo.num_aps();
  const auto& data = problem.realization().data;

  std::vector<double> fixed(n_gw);  // gateway inference + offload time
  std::vector<double> work(n_gw);   // AP-side FLOPs
  std::vector<double> offloaded(n_ap, 0.0);
  for (std::size_t m = 0; m < n_gw; ++m) {
    const GatewayParams& g = sc.gateways[m];
    const GatewayWorkload w = gateway_workload(sc, m, data, partition);
    fixed[m] = w.local_flops / (g.flops_per_cycle * g.frequency_hz);
    if (w.offload_bits > 0.0) {
      if (!(problem.rate(m) > 0.0)) {
        throw InfeasibleSlotError("zero uplink rate with pending payload",
                                  problem.realization().t);
      }
      fixed[m] += w.offload_bits / problem.rate(m);
    }
    work[m] = w.remote_flops;
    offloaded[topo.ap_of_gateway(m)] += w.remote_flops;
  }

  // Energy left for inference once block mining is paid for.
  std::vector<double> difficulties(n_ap);
  for (std::size_t j = 0; j < n_ap; ++j) {
    difficulties[j] = problem.difficulty_for(rep.g(offloaded[j]));
  }
  const BlockRace race =
      block_time_with_difficulty(rep, block_frequency, difficulties);
  std::vector<double> budget(n_ap);
  std::vector<double> idle_share(n_ap);
  for (std::size_t j = 0; j < n_ap; ++j) {
    const ApParams& ap = sc.aps[j];
    budget[j] = problem.ap_energy_budget(j) -
                block_energy(ap.switched_capacitance, race.block_time,
                             block_frequency[j]);
    idle_share[j] = ap.min_frequency_hz /
                    static_cast<double>(topo.gateways_of_ap(j).size());
    bool has_work = false;
    for (std::size_t m : topo.gateways_of_ap(j)) has_work |= work[m] > 0.0;
    if (has_work && !(budget[j] > 0.0)) {
      throw InfeasibleSlotError("AP " + std::to_string(j) +
                                    " has no energy left for offloaded work",
                                problem.realization().t);
    }
  }

  auto need = [&](double lambda, std::size_t m) {
    if (work[m] <= 0.0) return idle_share[topo.ap_of_gateway(m)];
    const double slack = lambda - fixed[m];
    if (!(slack > 0.0)) return std::numeric_limits<double>::infinity();
    return work[m] / (sc.ap_of_gateway(m).flops_per_cycle * slack);
  };
  auto feasible = [&](double lambda) {
    for (std::size_t j = 0; j < n_ap; ++j) {
      const ApParams& ap = sc.aps[j];
      double sum = 0.0;
      double energy = 0.0;
      for (std::size_t m : topo.gateways_of_ap(j)) {
        const double f = need(lambda, m);
        if (!std::isfinite(f)) return false;
        sum += f;
        energy += ap.switched_capacitance * f * f / ap.flops_per_cycle * work[m];
      }
      if (sum > ap.max_frequency_hz) return false;
      if (energy > budget[j] + kEnergyTolerance * std::max(budget[j], 1e-12)) {
        return false;
      }
    }
    return true;
  };

  double lo = 0.0;
  double max_fixed = 0.0;
  for (std::size_t m = 0; m < n_gw; ++m) {
    const double fastest =
        work[m] > 0.0 ? work[m] / (sc.ap_of_gateway(m).flops_per_cycle *
                                   sc.ap_of_gateway(m).max_frequency_hz)
                      : 0.0;
    lo = std::max(lo, fixed[m] + fastest);
    max_fixed = std::max(max_fixed, fixed[m]);
  }

  FaResult out;
  out.frequency.resize(n_gw);
  double hi = lo;
  if (!feasible(lo)) {
    double gap = std::max(lo - max_fixed, std::numeric_limits<double>::min());
    int doublings = 0;
    do {
      gap *= 2.0;
      hi = max_fixed + gap;
      if (++doublings > kMaxBracketDoublings || !std::isfinite(hi)) {
        throw InfeasibleSlotError("no AP inference frequency meets the AP frequency and energy budgets",
                                  problem.realization().t);
      }
    } while (!feasible(hi));
    lo = std::max(lo, max_fixed + 0.5 * gap);
    out.converged = false;
    while (out.iterations < options.max_iters) {
      if (converged(lo, hi, options.rel_tol)) {
        out.converged = true;
        break;
      }
      const double mid = 0.5 * (lo + hi);
      if (feasible(mid)) {
        hi = mid;
      } else {
        lo = mid;
      }
      ++out.iterations;
    }
    if (!out.converged) out.converged = converged(lo, hi, options.rel_tol);
  }

  out.makespan = 0.0;
  for (std::size_t m = 0; m < n_gw; ++m) {
    out.frequency[m] = need(hi, m);
    const double t =
        fixed[m] + (work[m] > 0.0 ? work[m] / (sc.ap_of_gateway(m).flops_per_cycle *
                                               out.frequency[m])
                                  : 0.0);
    out.makespan = std::max(out.makespan, t);
  }
  return out;
}

}  // namespace bdt
