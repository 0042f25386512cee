#include <doctest.h>

#include <string>

#include "bdt/config.hpp"
#include "bdt/error.hpp"

using namespace bdt;

namespace {

std::string field_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.field();
  }
  return "<no error>";
}

}  // namespace

TEST_CASE("paper-default network") {
  const ExperimentConfig c = paper_default();
  const Scenario sc = build_scenario(c, 1);
  CHECK(sc.topology.num_devices() == 60);
  CHECK(sc.topology.num_gateways() == 20);
  CHECK(sc.topology.num_aps() == 4);
  CHECK(sc.models.size() == 2);
  CHECK(sc.models[0].num_layers() == 16);
  CHECK(sc.models[1].num_layers() == 6);
  CHECK(sc.ap_type == std::vector<int>{1, 1, 2, 2});
  for (std::size_t j = 0; j < 4; ++j) {
    CHECK(sc.aps[j].max_energy_j == (j < 2 ? 10.0 : 30.0));
  }
  for (std::size_t n = 0; n < 60; ++n) {
    const int type = sc.ap_type[sc.topology.ap_of_device(n)];
    CHECK(sc.mean_arrivals[n] == (type == 1 ? 100.0 : 50.0));
    CHECK(sc.model_of_device[n] == n % 2);
  }
  for (const GatewayParams& g : sc.gateways) {
    CHECK(g.frequency_hz >= 1e6);
    CHECK(g.frequency_hz <= 1e7);
    CHECK(g.distance_m >= 1.0);
    CHECK(g.distance_m <= 50.0);
  }
  CHECK(sc.channel.noise_psd_w_per_hz ==
        doctest::Approx(3.9810717055349858e-21).epsilon(1e-12));
  CHECK(sc.channel.interference_mean_w == sc.channel.noise_power_w());

  // Same seed, same draws; another seed differs.
  const Scenario again = build_scenario(c, 1);
  const Scenario other = build_scenario(c, 2);
  CHECK(again.gateways[0].frequency_hz == sc.gateways[0].frequency_hz);
  CHECK(other.gateways[0].frequency_hz != sc.gateways[0].frequency_hz);
}

TEST_CASE("kappa calibration") {
  ExperimentConfig c = paper_default();
  c.num_aps = 2;
  c.gateways_per_ap = 1;
  c.devices_per_gateway = 2;
  c.ap_type_of_ap = {1, 2};
  const Scenario sc = build_scenario(c, 1);
  // Devices 0,1 on type 1 (100 points), 2,3 on type 2 (50); models alternate.
  const double vgg = sc.models[0].suffix_flops(1);
  const double cnn = sc.models[1].suffix_flops(1);
  const double expected = (150.0 * (vgg + cnn)) / 2.0 / 50.0;
  CHECK(calibrate_kappa(sc, 25, 75) == doctest::Approx(expected));
  const ReputationParams rp = build_reputation(c, sc);
  CHECK(rp.g(expected * 50.0) == doctest::Approx(50.0));
  c.reputation.kappa = 2.0;
  CHECK(build_reputation(c, sc).g(10.0) == doctest::Approx(5.0));
}

TEST_CASE("an empty document is paper-default") {
  CHECK(config_to_json(parse_config("{}")) == config_to_json(paper_default()));
}

TEST_CASE("round trip") {
  ExperimentConfig c = paper_default();
  c.V = {1e2, 1e6};
  c.seeds = {4, 5};
  c.T = 33;
  c.policies = {Policy::Wdpo, Policy::Dpra};
  c.reputation.kappa = 1.5e9;
  c.interference_mean_w = 2e-14;
  c.strict = true;
  const std::string text = config_to_json(c);
  const ExperimentConfig back = parse_config(text);
  CHECK(config_to_json(back) == text);
  CHECK(back.V == c.V);
  CHECK(back.seeds == c.seeds);
  CHECK(back.T == 33);
  CHECK(back.strict);
  CHECK(*back.reputation.kappa == 1.5e9);
}

TEST_CASE("config errors name the field") {
  CHECK(field_of(R"({"bogus": 1})") == "bogus");
  CHECK(field_of(R"({"reputation": {"alfa": 1}})") == "reputation.alfa");
  CHECK(field_of(R"({"run": {"T": "long"}})") == "run.T");
  CHECK(field_of(R"({"run": {"policies": ["greedy"]}})") == "run.policies");
  CHECK(field_of(R"({"profile": "other"})") == "profile");
  CHECK(field_of("{") == "");
  CHECK(field_of(R"({"run": {"T": 5}})") == "<no error>");
  CHECK_THROWS_AS(load_config("/nonexistent/config.json"), ConfigError);
}

TEST_CASE("structural validation") {
  ExperimentConfig c = paper_default();
  c.ap_type_of_ap = {1, 1, 2};
  CHECK_THROWS_AS(validate_config(c), ConfigError);
  c = paper_default();
  c.ap_type_of_ap = {1, 1, 2, 3};
  CHECK_THROWS_AS(validate_config(c), ConfigError);
  c = paper_default();
  c.V = {};
  CHECK_THROWS_AS(validate_config(c), ConfigError);
  c = paper_default();
  c.reputation.u_min = 80;
  CHECK_THROWS_AS(validate_config(c), ConfigError);
  CHECK_NOTHROW(validate_config(paper_default()));
}
