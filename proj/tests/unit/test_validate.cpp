#include <doctest.h>

#include <cmath>

#include "bdt/validate.hpp"
#include "fixtures.hpp"

using namespace bdt;

TEST_CASE("KS statistic") {
  const auto uniform = [](double x) { return std::clamp(x, 0.0, 1.0); };
  CHECK(ks_statistic({0.5}, uniform) == doctest::Approx(0.5));
  CHECK(ks_statistic({0.25, 0.75}, uniform) == doctest::Approx(0.25));
  CHECK(ks_statistic({0.9, 0.1}, uniform) == doctest::Approx(0.4));
  CHECK(ks_p_value(0.0, 100) == doctest::Approx(1.0));
  CHECK(ks_p_value(0.5, 1000) < 1e-10);
}

TEST_CASE("oracle instances are reproducible") {
  const OracleInstance a = make_oracle_instance(7, 3);
  const OracleInstance b = make_oracle_instance(7, 3);
  CHECK(instance_to_json(a) == instance_to_json(b));
  CHECK(instance_to_json(a) != instance_to_json(make_oracle_instance(7, 4)));
  CHECK(a.scenario.topology.num_gateways() <= 3);
  CHECK(a.scenario.topology.num_devices() <= 4);
  CHECK(a.scenario.topology.num_aps() <= a.scenario.topology.num_gateways());
}

TEST_CASE("small oracle run") {
  OracleOptions o;
  o.instances = 20;
  o.random_probes = 200;
  const ValidationReport r = validate_oracle(o);
  CHECK(r.kind == "oracle");
  CHECK(r.checks.size() >= 3);
  for (const CheckResult& c : r.checks) {
    INFO(c.name << ": " << c.detail);
    CHECK(c.passed);
    CHECK(c.failing.empty());
  }
}

TEST_CASE("small statistics and drift runs") {
  StatisticsOptions o;
  o.samples = 20000;
  o.arrival_slots = 400;
  o.arrival_rel_tol = 0.05;
  const ExperimentConfig c = fixtures::small_config();
  const ValidationReport stats = validate_statistics(c, o);
  CHECK(stats.kind == "statistics");
  for (const CheckResult& ch : stats.checks) {
    INFO(ch.name << ": " << ch.detail);
    CHECK(ch.passed);
  }
  const ValidationReport drift = validate_drift(c, 1e4, 1, 10);
  CHECK(drift.passed());
  CHECK(drift.checks.front().cases == 10);
}
