#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bdt/baselines.hpp"
#include "bdt/dnn_profile.hpp"
#include "bdt/dpra.hpp"

namespace bdt {

/// Per-type constants of the APs and of the devices they serve.
struct ApTypeSpec {
  double mean_arrivals = 100.0;  // Theta for every device under the type
  double max_energy_j = 10.0;    // E^{A,max}
};

/// A named DNN: either a preset or an explicit layer list.
struct ModelSpec {
  std::string name;
  std::optional<ModelPreset> preset;
  std::vector<LayerSpec> layers;
};

struct ReputationSpec {
  double alpha = 5e-5;
  double beta = -29.0;
  double p0 = 1.0 - 1e-15;
  double u_min = 25.0;
  double u_max = 75.0;
  /// "affine", "log" or "table".
  std::string kind = "affine";
  /// Unset: calibrated so that mean full-offload load maps to mid-band.
  std::optional<double> kappa;
  double c1 = 25.0;
  double c2 = 1e9;
  std::vector<std::pair<double, double>> table;
};

struct ExperimentConfig {
  std::string profile = "paper-default";

  // topology
  std::size_t num_aps = 4;
  std::size_t gateways_per_ap = 5;
  std::size_t devices_per_gateway = 3;
  std::vector<std::vector<int>> a_matrix;  // explicit N x M, optional
  std::vector<std::vector<int>> b_matrix;  // explicit M x J, optional

  std::vector<ApTypeSpec> ap_types{{100.0, 10.0}, {50.0, 30.0}};
  std::vector<int> ap_type_of_ap{1, 1, 2, 2};  // 1-based

  std::vector<ModelSpec> models;
  /// Model index per device; empty means devices cycle through `models`.
  std::vector<std::size_t> model_of_device;

  GatewayParams gateway;
  std::array<double, 2> gateway_frequency_range_hz{1e6, 1e7};
  std::array<double, 2> gateway_distance_range_m{1.0, 50.0};
  ApParams ap;
  ChannelParams channel;
  double noise_psd_dbm_per_hz = -174.0;
  /// Unset: mean = N0 B, std = mean / 2.
  std::optional<double> interference_mean_w;
  std::optional<double> interference_std_w;

  ReputationSpec reputation;
  LyapunovParams solver;
  std::size_t max_partition_nodes = 20000;

  std::vector<double> V{1e4};
  std::size_t T = 2000;
  std::vector<std::uint64_t> seeds{1};
  std::vector<Policy> policies{Policy::Dpra};
  bool strict = false;
  BaselineSpec baselines;

  std::string output_dir = "out";
  std::size_t workers = 0;  // 0: one per hardware thread
  bool dump_realizations = false;
};

/// The network, arrival and energy constants of the published experiment.
ExperimentConfig paper_default();

/// Parses a JSON document layered over paper_default(). Throws ConfigError
/// naming the offending field (or the parse position) on any problem.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);
std::string config_to_json(const ExperimentConfig& config, int indent = 2);

/// Throws ConfigError on structural problems.
void validate_config(const ExperimentConfig& config);

/// Static network for one seed. Gateway frequencies and distances are drawn
/// once per seed from their configured ranges.
Scenario build_scenario(const ExperimentConfig& config, std::uint64_t seed);

/// Reputation parameters for a scenario, calibrating kappa if unset.
ReputationParams build_reputation(const ExperimentConfig& config,
                                  const Scenario& scenario);

/// sum_j (sum over devices of AP j of Theta_n suffix_n(1)) / J /
/// ((U_min + U_max) / 2).
double calibrate_kappa(const Scenario& scenario, double u_min, double u_max);

}  // namespace bdt
