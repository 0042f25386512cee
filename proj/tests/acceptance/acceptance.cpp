#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "bdt/consensus.hpp"
#include "bdt/dnn_profile.hpp"
#include "bdt/dpra.hpp"
#include "bdt/error.hpp"
#include "bdt/harness.hpp"
#include "bdt/system_env.hpp"
#include "bdt/validate.hpp"

using namespace bdt;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
  Outcome(int id, std::string title) : id(id), title(std::move(title)) {}
  int id = 0;
  std::string title;
  bool passed = false;
  std::string detail;
};

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

void log(const std::string& line) { std::cerr << "[acceptance] " << line << '\n'; }

/// Counts hand-fixture mismatches.
struct Tally {
  std::size_t cases = 0;
  std::vector<std::string> failed;

  void exact(const std::string& name, double got, double want) {
    ++cases;
    if (got != want) failed.push_back(name + fmt(" got %.17g want %.17g", got, want));
  }
  void close(const std::string& name, double got, double want,
             double rel = 1e-12) {
    ++cases;
    const double scale = std::max(std::abs(want), 1e-300);
    if (!(std::abs(got - want) <= rel * scale)) {
      failed.push_back(name + fmt(" got %.17g want %.17g", got, want));
    }
  }
};

Scenario one_gateway(const ModelProfile& model) {
  Scenario sc;
  sc.topology = Topology({0}, {0}, 1, 1);
  sc.models = {model};
  sc.model_of_device = {0};
  sc.mean_arrivals = {1.0};
  sc.gateways = {GatewayParams{}};
  sc.aps = {ApParams{}};
  sc.ap_type = {1};
  return sc;
}

Outcome closed_forms() {
  const auto start = Clock::now();
  Tally t;

  // Layer FLOPs and output sizes.
  t.exact("conv flops",
          flops_of_layer(LayerSpec::convolution(3, 32, 32, 64, 32, 32, 3, 3)),
          3538944.0);
  t.exact("pool flops",
          flops_of_layer(LayerSpec::pooling(64, 32, 32, 16, 16, 2, 2)), 65536.0);
  t.exact("fc flops", flops_of_layer(LayerSpec::fully_connected(512, 4096, 2)),
          2.0 * 2 * 512 * 4096);
  t.exact("conv bits",
          output_bits_of_layer(
              LayerSpec::convolution(3, 32, 32, 64, 32, 32, 3, 3, 1, 32)),
          2097152.0);
  t.exact("fc bits",
          output_bits_of_layer(LayerSpec::fully_connected(128, 10, 1, 32)),
          320.0);
  const ModelProfile vgg = build_preset(ModelPreset::Vgg11Cifar10);
  const ModelProfile cnn = build_preset(ModelPreset::CnnFashionMnist);
  t.exact("vgg layers", static_cast<double>(vgg.num_layers()), 16.0);
  t.exact("cnn layers", static_cast<double>(cnn.num_layers()), 6.0);
  for (std::size_t l = 0; l <= vgg.num_layers(); ++l) {
    t.close("vgg prefix+suffix", vgg.prefix_flops(l) + vgg.suffix_flops(l),
            vgg.prefix_flops(vgg.num_layers()));
  }

  // Channel and uplink.
  t.close("noise", dbm_per_hz_to_w_per_hz(-174.0), 3.981071705534986e-21);
  ChannelParams ch;
  ch.path_loss_const = 1e-3;
  ch.reference_distance_m = 1.0;
  ch.path_loss_exponent = 2.0;
  GatewayParams g;
  g.distance_m = 10.0;
  t.close("gain", channel_gain(ch, g, 2.0), 2e-5);
  ChannelParams wide_ch;
  wide_ch.bandwidth_hz = 5e6;
  wide_ch.noise_psd_w_per_hz = dbm_per_hz_to_w_per_hz(-174.0);
  t.close("uplink rate", uplink_rate(wide_ch, GatewayParams{}, 1e-3, 0.0),
          161130620.46114188);

  // Gateway, offload and AP terms.
  Scenario sc = one_gateway(ModelProfile("m", {{10.0, 1e6}, {32.0, 8.0}}));
  sc.gateways[0].flops_per_cycle = 1.0;
  sc.gateways[0].frequency_hz = 5.0;
  sc.gateways[0].switched_capacitance = 0.5;
  sc.aps[0].flops_per_cycle = 32.0;
  sc.aps[0].switched_capacitance = 1.0;
  const std::vector<std::size_t> l{1};
  const std::vector<double> d{2.0};
  t.exact("gateway time", gateway_inference_time(sc, 0, d, l), 4.0);
  t.exact("gateway energy", gateway_inference_energy(sc, 0, d, l), 250.0);
  t.exact("offload time", offload_time(sc, 0, d, l, 5e6), 0.4);
  t.exact("offload energy", offload_energy(sc, 0, d, l, 5e6),
          sc.gateways[0].transmit_power_w * 0.4);
  t.exact("ap time", ap_inference_time(sc, 0, d, l, 2.0), 1.0);
  t.exact("ap energy", ap_inference_energy(sc, 0, d, l, 2.0), 8.0);
  t.exact("latency", slot_latency(std::vector<double>{1.0, 2.0, 3.0}, 0.5), 3.5);
  t.exact("gateway total", gateway_energy(0.25, 0.5), 0.75);

  // Reputation, difficulty, block race, block energy.
  t.exact("offloaded", offloaded_flops(sc, d, l)[0], 64.0);
  t.exact("affine g", ReputationFunction::affine(1e6)(5e7), 50.0);
  t.close("log g", ReputationFunction::logarithmic(10.0, 1.0)(std::exp(1.0) - 1),
          10.0, 1e-14);
  ReputationParams published;
  t.close("difficulty", difficulty(published, 50.0), std::exp(28.9975), 1e-14);
  ReputationParams unit;
  unit.alpha = 1.0;
  unit.beta = 0.0;
  unit.p0 = 1.0 - std::exp(-1.0);
  t.close("block time",
          block_time(unit, std::vector<double>(4, 1.0),
                     std::vector<double>(4, 0.0)).block_time,
          0.25, 1e-15);
  const BlockRace race = block_time(published, std::vector<double>{1e8, 5e7},
                                    std::vector<double>{40, 60});
  t.close("quantile identity", race.block_time * race.total_rate,
          -std::log1p(-published.p0));
  t.exact("block energy", block_energy(1.0, 2.0, 3.0), 54.0);

  // Queues and drift.
  const AuxQueues before{{3.0}, {1.0}};
  const std::vector<double> u{30.0};
  const AuxQueues after = update_queues(before, u, 25.0, 75.0);
  t.exact("Q update", after.q[0], 0.0);
  t.exact("S update", after.s[0], 0.0);
  const AuxQueues grow = update_queues(AuxQueues{{0.0}, {0.0}},
                                       std::vector<double>{80.0}, 25.0, 75.0);
  t.exact("S growth", grow.s[0], 5.0);
  const DriftReport r =
      drift_report(before, after, u, 0.5 * (25.0 * 25 + 75.0 * 75), 25.0, 75.0);
  t.exact("drift", r.delta, -5.0);
  t.exact("drift bound", r.bound, 3065.0);

  const double elapsed = seconds_since(start);
  Outcome o{1, "closed-form fixtures"};
  o.passed = t.failed.empty() && elapsed < 5.0;
  o.detail = fmt("%zu fixtures, %zu mismatches, %.3f s", t.cases,
                 t.failed.size(), elapsed);
  if (!t.failed.empty()) o.detail += "; first: " + t.failed.front();
  return o;
}

Outcome check_report(int id, const std::string& title,
                     const ValidationReport& report, double elapsed,
                     double limit) {
  Outcome o{id, title};
  o.passed = report.passed() && elapsed < limit;
  std::string failing;
  for (const CheckResult& c : report.checks) {
    if (!c.passed) failing += (failing.empty() ? "" : ", ") + c.name;
  }
  o.detail = fmt("%zu checks, %.1f s", report.checks.size(), elapsed);
  if (!failing.empty()) o.detail += "; failing: " + failing;
  return o;
}

RunResult prefix(const RunResult& run, std::size_t T) {
  RunResult out = run;
  if (out.slots.size() > T) out.slots.resize(T);
  return out;
}

/// Majority over seeds of a per-seed claim.
struct Vote {
  int yes = 0;
  int total = 0;
  void add(bool ok) {
    yes += ok;
    ++total;
  }
  bool majority() const { return 2 * yes > total; }
  std::string str() const { return fmt("%d/%d", yes, total); }
};

bool nonincreasing(const std::vector<double>& v) {
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] > v[i - 1]) return false;
  }
  return true;
}

bool nondecreasing(const std::vector<double>& v) {
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] < v[i - 1]) return false;
  }
  return true;
}

void write_trace_file(const fs::path& dir, const RunResult& run) {
  std::ofstream f(dir / ("trace_" + cell_name(run.policy, run.V, run.seed) +
                         ".csv"));
  write_trace(run, f);
}

std::string read_file(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria at paper-default scale"};
  std::string out = "acceptance";
  std::vector<int> known;
  app.add_option("--out", out, "directory for traces and the report");
  app.add_option("--known-failures", known,
                 "criteria whose failure is documented; they still print FAIL")
      ->delimiter(',');
  CLI11_PARSE(app, argc, argv);
  const fs::path dir(out);
  fs::create_directories(dir);

  const ExperimentConfig base = paper_default();
  const std::vector<double> Vs{1e2, 1e4, 1e6};
  const std::vector<std::uint64_t> seeds{1, 2, 3};
  std::vector<Outcome> outcomes;

  outcomes.push_back(closed_forms());

  {
    const auto start = Clock::now();
    const ValidationReport r = validate_oracle();
    outcomes.push_back(check_report(2, "solver-oracle equivalence", r,
                                    seconds_since(start), 120.0));
  }

  // DPRA at every (V, seed). The V = 1e4, seed 1 cell runs to T = 2000 and
  // its first 1000 slots double as the drift-audit run.
  std::map<std::pair<double, std::uint64_t>, RunResult> dpra;
  double drift_seconds = 0.0;
  double sweep_seconds = 0.0;
  for (std::uint64_t seed : seeds) {
    for (double V : Vs) {
      const bool long_run = seed == 1 && V == 1e4;
      RunOptions opts;
      opts.T = long_run ? 2000 : 1000;
      const auto start = Clock::now();
      if (long_run) {
        opts.on_slot = [&](const SlotRecord& s) {
          if (s.t == 999) drift_seconds = seconds_since(start);
        };
      }
      log(fmt("dpra V=%g seed=%llu T=%zu", V,
              static_cast<unsigned long long>(seed), opts.T));
      RunResult run = simulate(base, Policy::Dpra, V, seed, opts);
      const double elapsed = seconds_since(start);
      sweep_seconds += long_run ? drift_seconds : elapsed;
      write_trace_file(dir, run);
      dpra.emplace(std::make_pair(V, seed), std::move(run));
    }
  }
  const RunResult& long_run = dpra.at({1e4, 1});

  {
    const RunSummary s = summarize(prefix(long_run, 1000));
    Outcome o{3, "drift inequality audit"};
    o.passed = s.drift_violations == 0 && s.slots == 1000 &&
               drift_seconds < 120.0;
    o.detail = fmt("%zu violations over %zu slots at V=1e4, %.1f s",
                   s.drift_violations, s.slots, drift_seconds);
    outcomes.push_back(o);
  }

  {
    const RunSummary s = summarize(long_run);
    Outcome o{4, "queue stability"};
    o.passed = s.slots == 2000 && s.max_q_rate <= 0.05 && s.max_s_rate <= 0.05;
    o.detail = fmt("max Q(T)/T = %.4g, max S(T)/T = %.4g at T = %zu",
                   s.max_q_rate, s.max_s_rate, s.slots);
    outcomes.push_back(o);
  }

  std::map<std::pair<double, std::uint64_t>, RunSummary> summary;
  for (const auto& [key, run] : dpra) summary[key] = summarize(prefix(run, 1000));

  {
    const double lo = base.reputation.u_min - 2.0;
    const double hi = base.reputation.u_max + 2.0;
    double worst_lo = INFINITY;
    double worst_hi = -INFINITY;
    std::size_t outside = 0;
    for (const auto& [key, run] : dpra) {
      const auto avg = running_type_reputation(prefix(run, 1000));
      for (const auto& series : avg) {
        for (std::size_t t = 100; t < series.size(); ++t) {
          worst_lo = std::min(worst_lo, series[t]);
          worst_hi = std::max(worst_hi, series[t]);
          outside += series[t] < lo || series[t] > hi;
        }
      }
    }
    Outcome o{5, "reputation band"};
    o.passed = outside == 0;
    o.detail = fmt("running type averages in [%.2f, %.2f] for t >= 100, "
                   "band [%g, %g], %zu points outside",
                   worst_lo, worst_hi, lo, hi, outside);
    outcomes.push_back(o);
  }

  {
    Vote latency, type1, type2;
    bool floor_ok = true;
    bool strict_drop = false;
    std::string means;
    for (std::uint64_t seed : seeds) {
      std::vector<double> lat, u1, u2;
      for (double V : Vs) {
        const RunSummary& s = summary.at({V, seed});
        lat.push_back(s.mean_latency);
        u1.push_back(s.mean_reputation[0]);
        u2.push_back(s.mean_reputation[1]);
        floor_ok &= s.mean_latency >= s.tau_min;
      }
      latency.add(nonincreasing(lat));
      type1.add(nondecreasing(u1));
      type2.add(nonincreasing(u2));
      strict_drop |= lat.back() < lat.front();
      means += fmt("%sseed %llu: %.6g/%.6g/%.6g", means.empty() ? "" : "; ",
                   static_cast<unsigned long long>(seed), lat[0], lat[1],
                   lat[2]);
    }
    Outcome o{6, "V-trend"};
    o.passed = latency.majority() && type1.majority() && type2.majority() &&
               floor_ok && sweep_seconds < 900.0;
    o.detail = fmt("latency nonincreasing %s, U1 nondecreasing %s, "
                   "U2 nonincreasing %s, latency >= tau_min %s, %.0f s",
                   latency.str().c_str(), type1.str().c_str(),
                   type2.str().c_str(), floor_ok ? "yes" : "no",
                   sweep_seconds);
    o.detail += strict_drop ? "" : "; latency equal across V";
    o.detail += "; mean latency " + means;
    outcomes.push_back(o);
  }

  {
    std::size_t pairs = 0, wins = 0;
    std::map<Policy, std::size_t> wins_vs;
    double worst = -INFINITY;
    std::string worst_cell;
    for (Policy policy : {Policy::Wdpo, Policy::Wtcm}) {
      for (std::uint64_t seed : seeds) {
        for (double V : Vs) {
          RunOptions opts;
          opts.T = 500;
          log(fmt("%s V=%g seed=%llu T=500", std::string(to_string(policy)).c_str(),
                  V, static_cast<unsigned long long>(seed)));
          const RunResult run = simulate(base, policy, V, seed, opts);
          write_trace_file(dir, run);
          const double mine = summarize(prefix(dpra.at({V, seed}), 500)).mean_latency;
          const double theirs = summarize(run).mean_latency;
          ++pairs;
          wins += mine <= theirs;
          wins_vs[policy] += mine <= theirs;
          const double gap = (mine - theirs) / theirs;
          if (gap > worst) {
            worst = gap;
            worst_cell = cell_name(policy, V, seed);
          }
        }
      }
    }
    Outcome o{7, "baseline dominance"};
    o.passed = wins == pairs;
    o.detail = fmt("DPRA no slower in %zu/%zu comparisons (vs WDPO %zu/9, "
                   "vs WTCM %zu/9); largest relative excess %.3g%% (%s)",
                   wins, pairs, wins_vs[Policy::Wdpo], wins_vs[Policy::Wtcm],
                   100.0 * worst, worst_cell.c_str());
    outcomes.push_back(o);
  }

  {
    const auto start = Clock::now();
    const ValidationReport r = validate_statistics(base);
    outcomes.push_back(check_report(8, "block-race statistics", r,
                                    seconds_since(start), INFINITY));
  }

  {
    Vote inf[2], bloc[2];
    for (std::uint64_t seed : seeds) {
      for (int k = 0; k < 2; ++k) {
        std::vector<double> ei, eb;
        for (double V : Vs) {
          ei.push_back(summary.at({V, seed}).mean_inference_energy[k]);
          eb.push_back(summary.at({V, seed}).mean_block_energy[k]);
        }
        inf[k].add(nondecreasing(ei));
        bloc[k].add(nonincreasing(eb));
      }
    }
    Outcome o{9, "energy split trend"};
    o.passed = inf[0].majority() && inf[1].majority() && bloc[0].majority() &&
               bloc[1].majority();
    o.detail = fmt("inference energy nondecreasing %s/%s, block energy "
                   "nonincreasing %s/%s (type 1/type 2)",
                   inf[0].str().c_str(), inf[1].str().c_str(),
                   bloc[0].str().c_str(), bloc[1].str().c_str());
    outcomes.push_back(o);
  }

  {
    ExperimentConfig c = base;
    c.T = 50;
    c.V = {1e4};
    c.seeds = {1};
    c.policies = {Policy::Dpra, Policy::Wdpo, Policy::Wtcm};
    c.workers = 1;
    std::size_t files = 0, identical = 0;
    c.output_dir = (dir / "determinism_a").string();
    fs::remove_all(c.output_dir);
    run_sweep(c, true);
    c.output_dir = (dir / "determinism_b").string();
    fs::remove_all(c.output_dir);
    run_sweep(c, true);
    for (const auto& entry : fs::directory_iterator(dir / "determinism_a")) {
      if (entry.path().extension() != ".csv") continue;
      ++files;
      const fs::path twin = dir / "determinism_b" / entry.path().filename();
      identical += fs::exists(twin) &&
                   read_file(entry.path()) == read_file(twin);
    }
    // The sweep rerun must also reproduce the first slots of the main runs.
    RunResult head = prefix(dpra.at({1e4, 1}), 50);
    std::ostringstream a, b;
    write_trace(head, a);
    RunOptions opts;
    opts.T = 50;
    write_trace(simulate(base, Policy::Dpra, 1e4, 1, opts), b);
    const bool prefix_same = a.str() == b.str();
    Outcome o{10, "determinism"};
    o.passed = files == 6 && identical == files && prefix_same;
    o.detail = fmt("%zu/%zu CSV files byte-identical across reruns; "
                   "T=50 rerun %s the T=2000 prefix",
                   identical, files, prefix_same ? "matches" : "differs from");
    outcomes.push_back(o);
  }

  const std::set<int> expected(known.begin(), known.end());
  bool unexpected = false;
  nlohmann::json report = nlohmann::json::array();
  for (const Outcome& o : outcomes) {
    std::cout << (o.passed ? "PASS" : "FAIL") << " criterion " << o.id << ": "
              << o.title << " (" << o.detail << ")";
    if (!o.passed && expected.count(o.id)) std::cout << " [known failure]";
    std::cout << '\n';
    unexpected |= !o.passed && !expected.count(o.id);
    report.push_back({{"criterion", o.id},
                      {"title", o.title},
                      {"passed", o.passed},
                      {"detail", o.detail}});
  }
  std::ofstream(dir / "acceptance.json") << report.dump(2) << '\n';
  return unexpected ? 1 : 0;
}
