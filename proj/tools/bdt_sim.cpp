#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bdt/config.hpp"
#include "bdt/error.hpp"
#include "bdt/harness.hpp"
#include "bdt/validate.hpp"

namespace {

enum ExitCode { kOk = 0, kConfigError = 1, kInfeasible = 2, kValidation = 3 };

struct Overrides {
  std::string config_path;
  std::vector<std::uint64_t> seeds;
  std::vector<double> V;
  std::optional<std::size_t> T;
  std::vector<std::string> policies;
  std::string out;
  bool strict = false;
  bool lenient = false;
  std::optional<std::size_t> workers;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("-c,--config", o.config_path,
                  "JSON config layered over paper-default")
      ->check(CLI::ExistingFile);
  cmd->add_option("--seed", o.seeds, "seed list")->delimiter(',');
  cmd->add_option("--V", o.V, "Lyapunov weight list")->delimiter(',');
  cmd->add_option("--T", o.T, "horizon in slots");
  cmd->add_option("--policy", o.policies, "dpra, wdpo, wtcm")->delimiter(',');
  cmd->add_option("-o,--out", o.out, "output directory");
  auto* strict = cmd->add_flag("--strict", o.strict,
                               "abort on an infeasible slot");
  cmd->add_flag("--lenient", o.lenient, "relax infeasible slots (default)")
      ->excludes(strict);
  cmd->add_option("--workers", o.workers, "worker threads (0: all cores)");
}

bdt::ExperimentConfig resolve(const Overrides& o) {
  bdt::ExperimentConfig c = o.config_path.empty()
                                ? bdt::paper_default()
                                : bdt::load_config(o.config_path);
  if (!o.seeds.empty()) c.seeds = o.seeds;
  if (!o.V.empty()) c.V = o.V;
  if (o.T) c.T = *o.T;
  if (!o.policies.empty()) {
    c.policies.clear();
    for (const std::string& p : o.policies) {
      try {
        c.policies.push_back(bdt::parse_policy(p));
      } catch (const bdt::Error& e) {
        throw bdt::ConfigError("run.policies", e.what());
      }
    }
  }
  if (!o.out.empty()) c.output_dir = o.out;
  if (o.strict) c.strict = true;
  if (o.lenient) c.strict = false;
  if (o.workers) c.workers = *o.workers;
  bdt::validate_config(c);
  return c;
}

int run_cells(const Overrides& o, bool table) {
  const bdt::ExperimentConfig c = resolve(o);
  if (table && c.V.size() < 2) {
    throw bdt::ConfigError("run.V", "a sweep needs at least two V values");
  }
  const bdt::SweepResult sweep = bdt::run_sweep(c, true);
  const std::filesystem::path dir(c.output_dir);
  {
    std::ofstream f(dir / "config.json");
    f << bdt::config_to_json(c) << '\n';
  }
  if (table) {
    std::ofstream f(dir / "sweep.csv");
    bdt::write_sweep_table(sweep, f);
    bdt::write_sweep_table(sweep, std::cout);
  } else {
    for (const bdt::RunSummary& s : sweep.summaries) {
      std::cout << bdt::summary_to_json(s) << '\n';
    }
  }
  return kOk;
}

int run_validate(const Overrides& o, const std::string& kind,
                 std::size_t instances, std::size_t first,
                 const std::string& report_path) {
  const bdt::ExperimentConfig c = resolve(o);
  const std::uint64_t seed = o.seeds.empty() ? 0 : o.seeds.front();
  std::vector<bdt::ValidationReport> reports;
  if (kind == "oracle" || kind == "all") {
    bdt::OracleOptions opts;
    if (!o.seeds.empty()) opts.seed = seed;
    opts.instances = instances;
    opts.first = first;
    reports.push_back(bdt::validate_oracle(opts));
  }
  if (kind == "statistics" || kind == "all") {
    bdt::StatisticsOptions opts;
    if (!o.seeds.empty()) opts.seed = seed;
    reports.push_back(bdt::validate_statistics(c, opts));
  }
  if (kind == "drift" || kind == "all") {
    const std::size_t T = o.T ? *o.T : 1000;
    reports.push_back(bdt::validate_drift(c, c.V.front(),
                                          o.seeds.empty() ? 1 : seed, T));
  }
  bool ok = true;
  std::string text = "[";
  for (std::size_t i = 0; i < reports.size(); ++i) {
    ok &= reports[i].passed();
    if (i) text += ",";
    text += bdt::report_to_json(reports[i]);
  }
  text += "]";
  std::cout << text << '\n';
  for (const bdt::ValidationReport& r : reports) {
    for (const bdt::CheckResult& ch : r.checks) {
      std::cerr << (ch.passed ? "PASS " : "FAIL ") << r.kind << ": "
                << ch.name << " (" << ch.detail << ")\n";
    }
  }
  if (!report_path.empty()) {
    std::ofstream f(report_path);
    f << text << '\n';
  }
  return ok ? kOk : kValidation;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Edge inference and reputation-based consensus simulator"};
  app.require_subcommand(1);
  Overrides o;

  auto* run = app.add_subcommand("run", "simulate every (seed, V, policy)");
  add_common(run, o);
  auto* sweep = app.add_subcommand("sweep", "V sweep with a comparison table");
  add_common(sweep, o);

  auto* validate = app.add_subcommand("validate", "oracle and audit checks");
  add_common(validate, o);
  std::string kind = "all";
  std::size_t instances = 200;
  std::size_t first = 0;
  std::string report_path;
  validate->add_option("--kind", kind, "oracle, statistics, drift or all")
      ->check(CLI::IsMember({"oracle", "statistics", "drift", "all"}));
  validate->add_option("--instances", instances, "oracle instance count");
  validate->add_option("--first", first, "first oracle instance index");
  validate->add_option("--report", report_path, "write the JSON report here");

  auto* emit = app.add_subcommand("emit-config", "print paper-default");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*emit) {
      std::cout << bdt::config_to_json(bdt::paper_default()) << '\n';
      return kOk;
    }
    if (*run) return run_cells(o, false);
    if (*sweep) return run_cells(o, true);
    if (*validate) return run_validate(o, kind, instances, first, report_path);
  } catch (const bdt::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const bdt::InfeasibleSlotError& e) {
    std::cerr << "infeasible slot " << e.slot() << ": " << e.what() << '\n';
    return kInfeasible;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfigError;
  }
  return kOk;
}
