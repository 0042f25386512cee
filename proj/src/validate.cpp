#include "bdt/validate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <cstdio>
#include <random>
#include <sstream>

#include <json.hpp>

#include "bdt/consensus.hpp"
#include "bdt/error.hpp"
#include "bdt/harness.hpp"

namespace bdt {
namespace {

using json = nlohmann::json;

constexpr std::uint64_t kOracleStream = 0x0A;
constexpr std::uint64_t kProbeStream = 0x0B;
constexpr std::uint64_t kBlockStream = 0x57;
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kMaxLevels = 24;
constexpr int kMaxDecades = 400;

double rel_gap(double got, double want) {
  if (got == want) return 0.0;
  return std::abs(got - want) / std::max(std::abs(want), 1e-300);
}

std::vector<double> log_grid(double lo, double hi, std::size_t points) {
  std::vector<double> v(points);
  const double a = std::log(lo);
  const double b = std::log(hi);
  for (std::size_t i = 0; i < points; ++i) {
    v[i] = std::exp(a + (b - a) * static_cast<double>(i) /
                            static_cast<double>(points - 1));
  }
  v.front() = lo;
  v.back() = hi;
  return v;
}

// Smallest x in [lo, hi] passing the monotone predicate `ok`, given ok(hi).
// Each level scans a log grid and narrows to the first passing cell.
template <class Pred>
double nested_grid_min(double lo, double hi, std::size_t points, Pred ok) {
  points = std::max<std::size_t>(points, 3);
  for (int level = 0; level < kMaxLevels; ++level) {
    if (hi - lo <= 1e-14 * hi) break;
    const std::vector<double> g = log_grid(lo, hi, points);
    std::size_t i = 1;
    while (i + 1 < points && !ok(g[i])) ++i;
    lo = g[i - 1];
    hi = g[i];
  }
  return hi;
}

struct ApBudget {
  std::vector<double> weight;    // 1 / gamma_j
  std::vector<double> residual;  // E_j - inference
};

ApBudget mining_budget(const SlotProblem& problem,
                       const std::vector<std::size_t>& partition,
                       const std::vector<double>& ap_frequency) {
  const Scenario& sc = problem.scenario();
  const auto& data = problem.realization().data;
  const std::vector<double> o = offloaded_flops(sc, data, partition);
  ApBudget b;
  for (std::size_t j = 0; j < sc.topology.num_aps(); ++j) {
    double inference = 0.0;
    for (std::size_t m : sc.topology.gateways_of_ap(j)) {
      inference += ap_inference_energy(sc, m, data, partition, ap_frequency[m]);
    }
    b.weight.push_back(1.0 / problem.difficulty_for(
                                 reputation(problem.reputation_params(), o[j])));
    b.residual.push_back(problem.ap_energy_budget(j) - inference);
  }
  return b;
}

struct InferenceBudget {
  std::vector<double> fixed;  // gateway compute + uplink time
  std::vector<double> work;   // AP-side FLOPs
  std::vector<double> budget;  // E_j - e_j^bloc
};

InferenceBudget inference_budget(const SlotProblem& problem,
                                 const std::vector<std::size_t>& partition,
                                 const std::vector<double>& block_frequency) {
  const Scenario& sc = problem.scenario();
  const auto& data = problem.realization().data;
  InferenceBudget b;
  for (std::size_t m = 0; m < sc.topology.num_gateways(); ++m) {
    b.fixed.push_back(gateway_inference_time(sc, m, data, partition) +
                      offload_time(sc, m, data, partition, problem.rate(m)));
    b.work.push_back(gateway_workload(sc, m, data, partition).remote_flops);
  }
  const std::vector<double> o = offloaded_flops(sc, data, partition);
  std::vector<double> gamma;
  for (double x : o) {
    gamma.push_back(
        problem.difficulty_for(reputation(problem.reputation_params(), x)));
  }
  const BlockRace race = block_time_with_difficulty(problem.reputation_params(),
                                                    block_frequency, gamma);
  for (std::size_t j = 0; j < sc.topology.num_aps(); ++j) {
    b.budget.push_back(problem.ap_energy_budget(j) -
                       block_energy(sc.aps[j].switched_capacitance,
                                    race.block_time, block_frequency[j]));
  }
  return b;
}

double energy_slack(double budget) {
  return kEnergyTolerance * std::max(budget, 1e-12);
}

json vec_json(const std::vector<double>& v) { return json(v); }

CheckResult make_check(std::string name, double threshold) {
  CheckResult c;
  c.name = std::move(name);
  c.threshold = threshold;
  return c;
}

// `failing` is only invoked for the first failure of a check.
template <class Describe>
void record(CheckResult& c, double gap, bool ok, Describe failing) {
  ++c.cases;
  if (std::isfinite(gap)) c.worst = std::max(c.worst, gap);
  if (!ok) {
    ++c.failures;
    c.passed = false;
    if (c.failing.empty()) c.failing = failing();
  }
}

std::string format_p0(double p0) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.15g", p0);
  return buf;
}

}  // namespace

bool ValidationReport::passed() const {
  return std::all_of(checks.begin(), checks.end(),
                     [](const CheckResult& c) { return c.passed; });
}

std::string report_to_json(const ValidationReport& report, int indent) {
  json j;
  j["kind"] = report.kind;
  j["passed"] = report.passed();
  j["checks"] = json::array();
  for (const CheckResult& c : report.checks) {
    json e{{"name", c.name},         {"passed", c.passed},
           {"cases", c.cases},       {"failures", c.failures},
           {"worst", c.worst},       {"threshold", c.threshold},
           {"detail", c.detail}};
    if (!c.failing.empty()) e["failing"] = json::parse(c.failing);
    j["checks"].push_back(std::move(e));
  }
  return j.dump(indent);
}

OracleInstance make_oracle_instance(std::uint64_t seed, std::size_t index) {
  auto rng = make_stream(seed, index, kOracleStream);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto uniform = [&](double a, double b) { return a + (b - a) * unit(rng); };
  auto log_uniform = [&](double a, double b) {
    return std::exp(uniform(std::log(a), std::log(b)));
  };
  auto pick = [&](std::size_t a, std::size_t b) {
    return std::uniform_int_distribution<std::size_t>(a, b)(rng);
  };

  const std::size_t M = pick(1, 3);
  const std::size_t N = pick(M, 4);
  const std::size_t J = pick(1, M);
  std::vector<std::size_t> gw_of_dev(N);
  for (std::size_t n = 0; n < N; ++n) gw_of_dev[n] = n < M ? n : pick(0, M - 1);
  std::vector<std::size_t> ap_of_gw(M);
  for (std::size_t m = 0; m < M; ++m) ap_of_gw[m] = m < J ? m : pick(0, J - 1);

  OracleInstance in;
  in.seed = seed;
  in.index = index;
  Scenario& sc = in.scenario;
  sc.topology = Topology(gw_of_dev, ap_of_gw, M, J);
  for (std::size_t n = 0; n < N; ++n) {
    const std::size_t L = pick(1, 5);
    std::vector<LayerProfile> layers(L);
    for (auto& layer : layers) {
      layer.flops = log_uniform(1e6, 1e8);
      layer.output_bits = log_uniform(1e5, 1e7);
    }
    sc.models.emplace_back("m" + std::to_string(n), std::move(layers));
    sc.model_of_device.push_back(n);
    sc.mean_arrivals.push_back(uniform(1.0, 20.0));
  }
  for (std::size_t m = 0; m < M; ++m) {
    GatewayParams g;
    g.frequency_hz = uniform(1e6, 1e7);
    g.distance_m = uniform(1.0, 50.0);
    sc.gateways.push_back(g);
  }
  for (std::size_t j = 0; j < J; ++j) {
    ApParams a;
    a.switched_capacitance = log_uniform(1e-24, 1e-21);
    a.max_frequency_hz = uniform(5e7, 2e8);
    sc.aps.push_back(a);
    sc.ap_type.push_back(1);
  }
  sc.channel.interference_mean_w = sc.channel.noise_power_w();
  sc.channel.interference_std_w = 0.5 * sc.channel.interference_mean_w;
  sc.validate();

  SlotRealization& r = in.realization;
  std::exponential_distribution<double> unit_exp(1.0);
  for (std::size_t n = 0; n < N; ++n) {
    r.data.push_back(sc.mean_arrivals[n] * unit_exp(rng));
  }
  for (std::size_t m = 0; m < M; ++m) {
    r.fading.push_back(unit_exp(rng));
    r.interference.push_back(sc.channel.interference_mean_w * uniform(0.5, 1.5));
  }

  // Gateway budgets around the cheaper of all-local and all-offload, so that
  // The gateway budget sometimes binds.
  std::vector<std::size_t> all_local(N), all_off(N, 1);
  for (std::size_t n = 0; n < N; ++n) all_local[n] = sc.model(n).num_layers();
  for (std::size_t m = 0; m < M; ++m) {
    const double gain = channel_gain(sc.channel, sc.gateways[m], r.fading[m]);
    const double rate =
        uplink_rate(sc.channel, sc.gateways[m], gain, r.interference[m]);
    auto energy = [&](const std::vector<std::size_t>& l) {
      return gateway_inference_energy(sc, m, r.data, l) +
             offload_energy(sc, m, r.data, l, rate);
    };
    const double lo = std::min(energy(all_local), energy(all_off));
    const double hi = std::max(energy(all_local), energy(all_off));
    r.gateway_energy.push_back(uniform(0.8 * lo, 1.1 * hi));
  }

  // Difficulty scaled so that mining at f_max with U = 0 takes about 1 s.
  ReputationParams& rep = in.reputation;
  rep.alpha = uniform(0.005, 0.05);
  double total_fmax = 0.0;
  for (const ApParams& a : sc.aps) total_fmax += a.max_frequency_hz;
  rep.beta = -std::log(total_fmax / rep.quantile_factor());
  double full = 0.0;
  for (std::size_t n = 0; n < N; ++n) {
    full += sc.mean_arrivals[n] * sc.model(n).total_flops();
  }
  rep.g = ReputationFunction::affine(full / static_cast<double>(J) /
                                     (0.5 * (rep.u_min + rep.u_max)));
  for (std::size_t j = 0; j < J; ++j) {
    const double at_fmax = sc.aps[j].switched_capacitance *
                           std::pow(sc.aps[j].max_frequency_hz, 3.0);
    r.ap_energy.push_back(at_fmax * uniform(0.02, 2.0));
  }

  in.queues.q.resize(J);
  in.queues.s.resize(J);
  for (std::size_t j = 0; j < J; ++j) {
    in.queues.q[j] = uniform(0.0, 200.0);
    in.queues.s[j] = uniform(0.0, 200.0);
  }
  in.V = log_uniform(1.0, 1e4);
  for (std::size_t n = 0; n < N; ++n) {
    in.partition.push_back(pick(1, sc.model(n).num_layers()));
  }
  in.ap_frequency.assign(M, 0.0);
  for (std::size_t j = 0; j < J; ++j) {
    const auto& gws = sc.topology.gateways_of_ap(j);
    std::vector<double> w;
    double sum = 0.0;
    for (std::size_t k = 0; k < gws.size(); ++k) {
      w.push_back(uniform(0.1, 1.0));
      sum += w.back();
    }
    const double total = sc.aps[j].max_frequency_hz * uniform(0.01, 0.5);
    for (std::size_t k = 0; k < gws.size(); ++k) {
      in.ap_frequency[gws[k]] = total * w[k] / sum;
    }
  }
  for (std::size_t j = 0; j < J; ++j) {
    in.block_frequency.push_back(sc.aps[j].max_frequency_hz *
                                 uniform(0.05, 1.0));
  }
  return in;
}

std::string instance_to_json(const OracleInstance& in, int indent) {
  const Scenario& sc = in.scenario;
  json j;
  j["seed"] = in.seed;
  j["index"] = in.index;
  std::vector<std::size_t> gw, ap;
  for (std::size_t n = 0; n < sc.topology.num_devices(); ++n) {
    gw.push_back(sc.topology.gateway_of_device(n));
  }
  for (std::size_t m = 0; m < sc.topology.num_gateways(); ++m) {
    ap.push_back(sc.topology.ap_of_gateway(m));
  }
  j["gateway_of_device"] = gw;
  j["ap_of_gateway"] = ap;
  j["models"] = json::array();
  for (const ModelProfile& p : sc.models) {
    json layers = json::array();
    for (const LayerProfile& l : p.layers()) {
      layers.push_back({l.flops, l.output_bits});
    }
    j["models"].push_back(layers);
  }
  j["mean_arrivals"] = sc.mean_arrivals;
  j["gateways"] = json::array();
  for (const GatewayParams& g : sc.gateways) {
    j["gateways"].push_back({{"frequency_hz", g.frequency_hz},
                             {"distance_m", g.distance_m}});
  }
  j["aps"] = json::array();
  for (const ApParams& a : sc.aps) {
    j["aps"].push_back({{"switched_capacitance", a.switched_capacitance},
                        {"max_frequency_hz", a.max_frequency_hz},
                        {"min_frequency_hz", a.min_frequency_hz}});
  }
  j["reputation"] = {{"alpha", in.reputation.alpha},
                     {"beta", in.reputation.beta},
                     {"kappa", in.reputation.g.kappa()}};
  const SlotRealization& r = in.realization;
  j["realization"] = {{"data", r.data},
                      {"fading", r.fading},
                      {"interference", r.interference},
                      {"gateway_energy", r.gateway_energy},
                      {"ap_energy", r.ap_energy}};
  j["Q"] = in.queues.q;
  j["S"] = in.queues.s;
  j["V"] = in.V;
  j["partition"] = in.partition;
  j["ap_frequency"] = vec_json(in.ap_frequency);
  j["block_frequency"] = vec_json(in.block_frequency);
  return j.dump(indent);
}

double grid_block_time(const SlotProblem& problem,
                       const std::vector<std::size_t>& partition,
                       const std::vector<double>& ap_frequency,
                       std::size_t points) {
  const Scenario& sc = problem.scenario();
  const ApBudget b = mining_budget(problem, partition, ap_frequency);
  const double c = problem.reputation_params().quantile_factor();
  auto freq = [&](double mu, std::size_t j) {
    if (!(b.residual[j] > 0.0)) return 0.0;
    return std::min(sc.aps[j].max_frequency_hz,
                    std::cbrt(b.residual[j] /
                              (sc.aps[j].switched_capacitance * mu)));
  };
  auto rate = [&](double mu) {
    double r = 0.0;
    for (std::size_t j = 0; j < b.weight.size(); ++j) {
      r += b.weight[j] * freq(mu, j);
    }
    return r;
  };
  auto ok = [&](double mu) { return mu * rate(mu) >= c; };

  double fastest = 0.0;
  for (std::size_t j = 0; j < b.weight.size(); ++j) {
    if (b.residual[j] > 0.0) fastest += b.weight[j] * sc.aps[j].max_frequency_hz;
  }
  if (!(fastest > 0.0)) return kInf;
  const double lo = c / fastest;
  if (ok(lo)) return lo;
  double hi = lo;
  for (int k = 0; k < kMaxDecades && !ok(hi); ++k) hi *= 10.0;
  if (!ok(hi)) return kInf;
  const double mu = nested_grid_min(lo, hi, points, ok);
  return c / rate(mu);
}

double grid_makespan(const SlotProblem& problem,
                     const std::vector<std::size_t>& partition,
                     const std::vector<double>& block_frequency,
                     std::size_t points) {
  const Scenario& sc = problem.scenario();
  const Topology& topo = sc.topology;
  const InferenceBudget b =
      inference_budget(problem, partition, block_frequency);
  auto need = [&](double lambda, std::size_t m) {
    const ApParams& a = sc.ap_of_gateway(m);
    if (b.work[m] <= 0.0) {
      return a.min_frequency_hz /
             static_cast<double>(topo.gateways_of_ap(topo.ap_of_gateway(m)).size());
    }
    if (!(lambda > b.fixed[m])) return kInf;
    return b.work[m] / (a.flops_per_cycle * (lambda - b.fixed[m]));
  };
  auto ok = [&](double lambda) {
    for (std::size_t j = 0; j < topo.num_aps(); ++j) {
      const ApParams& a = sc.aps[j];
      double sum = 0.0;
      double energy = 0.0;
      for (std::size_t m : topo.gateways_of_ap(j)) {
        const double f = need(lambda, m);
        if (!std::isfinite(f)) return false;
        sum += f;
        energy += a.switched_capacitance * f * f / a.flops_per_cycle * b.work[m];
      }
      if (sum > a.max_frequency_hz) return false;
      if (energy > b.budget[j] + energy_slack(b.budget[j])) return false;
    }
    return true;
  };

  double lo = 0.0;
  for (std::size_t m = 0; m < topo.num_gateways(); ++m) {
    const ApParams& a = sc.ap_of_gateway(m);
    lo = std::max(lo, b.fixed[m] + b.work[m] / (a.flops_per_cycle *
                                                a.max_frequency_hz));
  }
  if (!(lo > 0.0)) return ok(0.0) ? 0.0 : kInf;
  if (ok(lo)) return lo;
  double hi = lo;
  for (int k = 0; k < kMaxDecades && !ok(hi); ++k) hi *= 10.0;
  if (!ok(hi)) return kInf;
  return nested_grid_min(lo, hi, points, ok);
}

ValidationReport validate_oracle(const OracleOptions& options) {
  ValidationReport report;
  report.kind = "oracle";
  CheckResult fbloc = make_check("solve_fbloc vs grid", options.rel_tol);
  CheckResult fa = make_check("solve_fa vs grid", options.rel_tol);
  CheckResult probes = make_check("random feasible probes", 1e-7);
  CheckResult part = make_check("solve_partition vs exhaustive", 0.0);
  std::size_t fbloc_solved = 0, fa_solved = 0, part_solved = 0;
  BisectionOptions bis;
  bis.rel_tol = 1e-12;
  bis.max_iters = 200;

  for (std::size_t k = 0; k < options.instances; ++k) {
    const OracleInstance in = make_oracle_instance(options.seed,
                                                   options.first + k);
    const SlotProblem problem(in.scenario, in.reputation, in.realization);
    const Scenario& sc = in.scenario;
    const std::size_t J = sc.topology.num_aps();
    auto failing = [&](const std::string& why) {
      json j = json::parse(instance_to_json(in));
      j["reason"] = why;
      return j.dump();
    };
    auto prng = make_stream(options.seed, options.first + k, kProbeStream);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    // f^bloc
    {
      const double want =
          grid_block_time(problem, in.partition, in.ap_frequency,
                          options.grid_points);
      bool threw = false;
      FblocResult got;
      try {
        got = solve_fbloc(problem, in.partition, in.ap_frequency, bis);
      } catch (const Error&) {
        threw = true;
      }
      const ApBudget b = mining_budget(problem, in.partition, in.ap_frequency);
      bool any_negative = false;
      for (double r : b.residual) {
        any_negative |= r < -kEnergyTolerance * 1e-12;
      }
      if (threw) {
        // Only legitimate when no AP can mine or inference alone breaks the AP budget.
        const bool ok = !std::isfinite(want) || any_negative;
        record(fbloc, 0.0, ok, [&] {
          return failing("solve_fbloc threw on a feasible case");
        });
      } else {
        ++fbloc_solved;
        const double gap = rel_gap(got.block_time, want);
        bool feasible = true;
        for (std::size_t j = 0; j < J; ++j) {
          const double f = got.frequency[j];
          const double e = sc.aps[j].switched_capacitance * got.block_time *
                           f * f * f;
          const double budget = std::max(b.residual[j], 0.0);
          feasible &= f <= sc.aps[j].max_frequency_hz * (1.0 + 1e-12);
          feasible &= e <= budget + energy_slack(budget);
        }
        record(fbloc, gap, gap <= options.rel_tol && feasible,
               [&] {
                 return failing(feasible ? "block time gap"
                                         : "infeasible frequencies");
               });

        const double c = in.reputation.quantile_factor();
        for (std::size_t p = 0; p < options.random_probes; ++p) {
          std::vector<double> f(J);
          double rate = 0.0;
          for (std::size_t j = 0; j < J; ++j) {
            const double u = unit(prng);
            f[j] = sc.aps[j].max_frequency_hz * u * u;
            rate += b.weight[j] * f[j];
          }
          const double tau = c / rate;
          bool ok = true;
          for (std::size_t j = 0; j < J; ++j) {
            const double budget = std::max(b.residual[j], 0.0);
            ok &= sc.aps[j].switched_capacitance * tau * f[j] * f[j] * f[j] <=
                  budget;
          }
          if (!ok) continue;
          const double gap = (got.block_time - tau) / got.block_time;
          record(probes, std::max(gap, 0.0), gap <= probes.threshold,
                 [&] { return failing("random f_bloc beats solve_fbloc"); });
        }
      }
    }

    // f^A
    {
      double want = kInf;
      bool oracle_threw = false;
      try {
        want = grid_makespan(problem, in.partition, in.block_frequency,
                             options.grid_points);
      } catch (const Error&) {
        oracle_threw = true;
      }
      bool threw = false;
      FaResult got;
      try {
        got = solve_fa(problem, in.partition, in.block_frequency, bis);
      } catch (const Error&) {
        threw = true;
      }
      if (threw || oracle_threw) {
        const bool ok = !std::isfinite(want);
        record(fa, 0.0, ok, [&] {
          return failing("solve_fa threw on a feasible case");
        });
      } else {
        const InferenceBudget b =
            inference_budget(problem, in.partition, in.block_frequency);
        ++fa_solved;
        const double gap = rel_gap(got.makespan, want);
        bool feasible = true;
        for (std::size_t j = 0; j < J; ++j) {
          const ApParams& a = sc.aps[j];
          double sum = 0.0;
          double energy = 0.0;
          for (std::size_t m : sc.topology.gateways_of_ap(j)) {
            sum += got.frequency[m];
            energy += a.switched_capacitance * got.frequency[m] *
                      got.frequency[m] / a.flops_per_cycle * b.work[m];
          }
          feasible &= sum <= a.max_frequency_hz * (1.0 + 1e-12);
          feasible &= energy <= b.budget[j] + energy_slack(b.budget[j]);
        }
        record(fa, gap, gap <= options.rel_tol && feasible,
               [&] {
                 return failing(feasible ? "makespan gap" : "infeasible shares");
               });

        for (std::size_t p = 0; p < options.random_probes; ++p) {
          std::vector<double> f(sc.topology.num_gateways(), 0.0);
          bool ok = true;
          for (std::size_t j = 0; j < J && ok; ++j) {
            const ApParams& a = sc.aps[j];
            const auto& gws = sc.topology.gateways_of_ap(j);
            std::vector<double> w;
            double sum = 0.0;
            for (std::size_t i = 0; i < gws.size(); ++i) {
              w.push_back(unit(prng) + 1e-3);
              sum += w.back();
            }
            const double total = a.max_frequency_hz * unit(prng);
            double energy = 0.0;
            for (std::size_t i = 0; i < gws.size(); ++i) {
              f[gws[i]] = total * w[i] / sum;
              energy += a.switched_capacitance * f[gws[i]] * f[gws[i]] /
                        a.flops_per_cycle * b.work[gws[i]];
            }
            ok = energy <= b.budget[j];
          }
          if (!ok) continue;
          double makespan = 0.0;
          for (std::size_t m = 0; m < f.size(); ++m) {
            double t = b.fixed[m];
            if (b.work[m] > 0.0) {
              t += b.work[m] / (sc.ap_of_gateway(m).flops_per_cycle * f[m]);
            }
            makespan = std::max(makespan, t);
          }
          const double gap = (got.makespan - makespan) / got.makespan;
          record(probes, std::max(gap, 0.0), gap <= probes.threshold,
                 [&] { return failing("random f_A beats solve_fa"); });
        }
      }
    }

    // l
    {
      PartitionOptions popts;
      PartitionResult bb, ex;
      bool bb_threw = false, ex_threw = false;
      try {
        bb = solve_partition(problem, in.ap_frequency, in.block_frequency,
                             in.queues, in.V, popts);
      } catch (const InfeasibleSlotError&) {
        bb_threw = true;
      }
      try {
        ex = solve_partition_exhaustive(problem, in.ap_frequency,
                                        in.block_frequency, in.queues, in.V,
                                        popts);
      } catch (const InfeasibleSlotError&) {
        ex_threw = true;
      }
      if (bb_threw || ex_threw) {
        record(part, 0.0, bb_threw == ex_threw,
               [&] {
                 return failing(
                     "only one of branch-and-bound and exhaustive threw");
               });
      } else {
        ++part_solved;
        const bool same =
            bb.partition == ex.partition && bb.objective == ex.objective;
        const double gap = rel_gap(bb.objective, ex.objective);
        record(part, gap, same, [&] {
          return failing("partition differs from exhaustive");
        });
      }
    }
  }

  auto summarize_check = [](CheckResult& c, std::size_t solved,
                            const char* unit) {
    std::ostringstream s;
    s << c.cases << " cases (" << solved << " feasible), " << c.failures
      << " failures, worst " << unit << " " << c.worst;
    c.detail = s.str();
  };
  summarize_check(fbloc, fbloc_solved, "relative gap");
  summarize_check(fa, fa_solved, "relative gap");
  summarize_check(probes, probes.cases, "relative improvement");
  summarize_check(part, part_solved, "relative gap");
  report.checks = {fbloc, fa, probes, part};
  return report;
}

double ks_statistic(std::vector<double> samples,
                    const std::function<double(double)>& cdf) {
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = cdf(samples[i]);
    d = std::max(d, std::max(static_cast<double>(i + 1) / n - f,
                             f - static_cast<double>(i) / n));
  }
  return d;
}

double ks_p_value(double statistic, std::size_t n) {
  const double sn = std::sqrt(static_cast<double>(n));
  const double lambda = (sn + 0.12 + 0.11 / sn) * statistic;
  if (lambda < 0.2) return 1.0;
  double sum = 0.0;
  double sign = 1.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += sign * term;
    if (term < 1e-16 * sum) break;
    sign = -sign;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

ValidationReport validate_statistics(const ExperimentConfig& config,
                                     const StatisticsOptions& options) {
  ValidationReport report;
  report.kind = "statistics";
  const Scenario sc = build_scenario(config, options.seed);
  const ReputationParams rep = build_reputation(config, sc);
  const std::size_t J = sc.topology.num_aps();

  std::vector<double> f(J), u(J, 0.5 * (rep.u_min + rep.u_max));
  for (std::size_t j = 0; j < J; ++j) f[j] = sc.aps[j].max_frequency_hz;
  const BlockRace race = block_time(rep, f, u);
  auto rng = make_stream(options.seed, 0, kBlockStream);
  std::vector<double> samples(options.samples);
  for (double& x : samples) x = sample_block_time(race.total_rate, rng);
  const double n = static_cast<double>(samples.size());

  {
    CheckResult c = make_check("block time KS vs Exp(theta_hat)",
                               options.ks_alpha);
    const double theta = race.total_rate;
    const double d = ks_statistic(
        samples, [theta](double x) { return -std::expm1(-theta * x); });
    const double p = ks_p_value(d, samples.size());
    c.cases = samples.size();
    c.worst = d;
    c.passed = p > options.ks_alpha;
    c.failures = c.passed ? 0 : 1;
    std::ostringstream s;
    s << "D = " << d << ", p = " << p << ", theta_hat = " << theta;
    c.detail = s.str();
    if (!c.passed) {
      c.failing = json{{"seed", options.seed}, {"theta_hat", theta},
                       {"D", d}, {"p", p}}.dump();
    }
    report.checks.push_back(c);
  }

  for (double p0 : {rep.p0, 0.9}) {
    ReputationParams r = rep;
    r.p0 = p0;
    const BlockRace rr = block_time(r, f, u);
    std::size_t below = 0;
    for (double x : samples) below += x < rr.block_time ? 1 : 0;
    const double est = static_cast<double>(below) / n;
    const double sigma = std::sqrt(p0 * (1.0 - p0) / n);
    const double dev = std::abs(est - p0);
    CheckResult c = make_check("Pr(tau < tau_bloc) at p0 = " + format_p0(p0),
                               options.sigmas);
    c.cases = samples.size();
    // A deviation below one ulp of p0 is indistinguishable from zero.
    const bool ok = dev <= options.sigmas * sigma ||
                    dev <= std::numeric_limits<double>::epsilon();
    c.worst = sigma > 0.0 ? dev / sigma : 0.0;
    c.passed = ok;
    c.failures = ok ? 0 : 1;
    std::ostringstream s;
    s.precision(17);
    s << "estimate " << est << ", sigma " << sigma;
    c.detail = s.str();
    if (!ok) {
      c.failing = json{{"seed", options.seed}, {"p0", p0}, {"estimate", est},
                       {"sigma", sigma}}.dump();
    }
    report.checks.push_back(c);

    CheckResult id = make_check(
        "tau_bloc * theta_hat = -ln(1 - p0) at p0 = " + format_p0(p0),
        1e-12);
    const double gap =
        rel_gap(rr.block_time * rr.total_rate, -std::log1p(-p0));
    record(id, gap, gap <= 1e-12, [&] {
      return json{{"p0", p0}, {"tau_bloc", rr.block_time},
                  {"theta_hat", rr.total_rate}}.dump();
    });
    id.detail = "relative gap " + std::to_string(gap);
    report.checks.push_back(id);
  }

  {
    CheckResult c = make_check("mean arrivals per AP type",
                               options.arrival_rel_tol);
    const int types = static_cast<int>(sc.num_types());
    std::vector<double> got(types, 0.0), want(types, 0.0);
    for (std::size_t t = 0; t < options.arrival_slots; ++t) {
      const SlotRealization r = sample_slot(sc, options.seed, t);
      for (std::size_t dev = 0; dev < r.data.size(); ++dev) {
        const int k = sc.ap_type[sc.topology.ap_of_device(dev)] - 1;
        got[k] += r.data[dev];
        want[k] += sc.mean_arrivals[dev];
      }
    }
    std::ostringstream s;
    for (int k = 0; k < types; ++k) {
      if (!(want[k] > 0.0)) continue;
      const double gap = rel_gap(got[k], want[k]);
      record(c, gap, gap <= options.arrival_rel_tol, [&] {
        return json{{"seed", options.seed}, {"type", k + 1},
                    {"sample_mean", got[k] / want[k]}}.dump();
      });
      s << "type " << k + 1 << " relative error " << gap << "; ";
    }
    c.detail = s.str();
    report.checks.push_back(c);
  }
  return report;
}

ValidationReport validate_drift(const ExperimentConfig& config, double V,
                                std::uint64_t seed, std::size_t T) {
  ValidationReport report;
  report.kind = "drift";
  CheckResult c = make_check("drift inequality", 0.0);
  RunOptions opts;
  opts.T = T;
  opts.strict = false;
  c.worst = -kInf;
  opts.on_slot = [&](const SlotRecord& r) {
    const double excess = r.drift - r.drift_bound;
    ++c.cases;
    c.worst = std::max(c.worst, excess);
    if (excess > 0.0) {
      ++c.failures;
      c.passed = false;
      if (c.failing.empty()) {
        c.failing = json{{"seed", seed}, {"V", V}, {"t", r.t},
                         {"drift", r.drift}, {"bound", r.drift_bound},
                         {"U", r.reputation}, {"Q", r.q}, {"S", r.s}}.dump();
      }
    }
  };
  simulate(config, Policy::Dpra, V, seed, opts);
  if (c.cases == 0) c.worst = 0.0;
  std::ostringstream s;
  s << c.cases << " slots, " << c.failures
    << " violations, max (drift - bound) " << c.worst;
  c.detail = s.str();
  report.checks.push_back(c);
  return report;
}

}  // namespace bdt
