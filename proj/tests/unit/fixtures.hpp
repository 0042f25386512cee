#pragma once

#include <cstddef>
#include <vector>

#include "bdt/config.hpp"
#include "bdt/consensus.hpp"
#include "bdt/dpra.hpp"
#include "bdt/system_env.hpp"

namespace fixtures {

/// One device per gateway, `gateways` gateways, all on one AP unless
/// `ap_of_gateway` says otherwise; every device runs `model`.
inline bdt::Scenario small_scenario(
    const bdt::ModelProfile& model, std::size_t gateways = 1,
    std::vector<std::size_t> ap_of_gateway = {}) {
  if (ap_of_gateway.empty()) ap_of_gateway.assign(gateways, 0);
  std::size_t aps = 0;
  for (std::size_t j : ap_of_gateway) aps = std::max(aps, j + 1);
  std::vector<std::size_t> gw_of_dev(gateways);
  for (std::size_t m = 0; m < gateways; ++m) gw_of_dev[m] = m;
  bdt::Scenario sc;
  sc.topology = bdt::Topology(gw_of_dev, ap_of_gateway, gateways, aps);
  sc.models = {model};
  sc.model_of_device.assign(gateways, 0);
  sc.mean_arrivals.assign(gateways, 1.0);
  sc.gateways.assign(gateways, bdt::GatewayParams{});
  sc.aps.assign(aps, bdt::ApParams{});
  sc.ap_type.assign(aps, 1);
  return sc;
}

inline bdt::SlotRealization realization(const bdt::Scenario& sc,
                                        std::vector<double> data,
                                        double gateway_energy,
                                        double ap_energy) {
  bdt::SlotRealization r;
  r.data = std::move(data);
  r.fading.assign(sc.topology.num_gateways(), 1.0);
  r.interference.assign(sc.topology.num_gateways(), 0.0);
  r.gateway_energy.assign(sc.topology.num_gateways(), gateway_energy);
  r.ap_energy.assign(sc.topology.num_aps(), ap_energy);
  return r;
}

/// Paper-default config shrunk to one AP per type.
inline bdt::ExperimentConfig small_config() {
  bdt::ExperimentConfig c = bdt::paper_default();
  c.num_aps = 2;
  c.gateways_per_ap = 2;
  c.devices_per_gateway = 2;
  c.ap_type_of_ap = {1, 2};
  c.T = 20;
  return c;
}

}  // namespace fixtures
