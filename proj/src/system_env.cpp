#include "bdt/system_env.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "bdt/error.hpp"

namespace bdt {
namespace {

constexpr std::uint64_t kSlotStream = 0x51;

void require(bool ok, const std::string& what) {
  if (!ok) throw InvalidSpecError(what);
}

std::uint32_t lo32(std::uint64_t v) { return static_cast<std::uint32_t>(v); }
std::uint32_t hi32(std::uint64_t v) {
  return static_cast<std::uint32_t>(v >> 32);
}

}  // namespace

Topology::Topology(std::vector<std::size_t> gateway_of_device,
                   std::vector<std::size_t> ap_of_gateway,
                   std::size_t num_gateways, std::size_t num_aps)
    : gateway_of_device_(std::move(gateway_of_device)),
      ap_of_gateway_(std::move(ap_of_gateway)),
      devices_of_gateway_(num_gateways),
      gateways_of_ap_(num_aps) {
  require(ap_of_gateway_.size() == num_gateways,
          "ap_of_gateway must have one entry per gateway");
  for (std::size_t n = 0; n < gateway_of_device_.size(); ++n) {
    require(gateway_of_device_[n] < num_gateways,
            "device " + std::to_string(n) + " refers to unknown gateway");
    devices_of_gateway_[gateway_of_device_[n]].push_back(n);
  }
  for (std::size_t m = 0; m < num_gateways; ++m) {
    require(ap_of_gateway_[m] < num_aps,
            "gateway " + std::to_string(m) + " refers to unknown AP");
    gateways_of_ap_[ap_of_gateway_[m]].push_back(m);
  }
}

Topology Topology::from_matrices(const std::vector<std::vector<int>>& a,
                                 const std::vector<std::vector<int>>& b) {
  const std::size_t num_gateways = b.size();
  const std::size_t num_aps = b.empty() ? 0 : b.front().size();
  auto single_one = [](const std::vector<int>& row, std::size_t width,
                       const std::string& label) {
    require(row.size() == width, label + " has wrong length");
    std::size_t idx = width;
    for (std::size_t k = 0; k < row.size(); ++k) {
      require(row[k] == 0 || row[k] == 1, label + " entries must be 0/1");
      if (row[k] == 1) {
        require(idx == width, label + " associates with more than one node");
        idx = k;
      }
    }
    require(idx != width, label + " is not associated with any node");
    return idx;
  };
  std::vector<std::size_t> gw(a.size());
  for (std::size_t n = 0; n < a.size(); ++n) {
    gw[n] = single_one(a[n], num_gateways, "a row " + std::to_string(n));
  }
  std::vector<std::size_t> ap(num_gateways);
  for (std::size_t m = 0; m < num_gateways; ++m) {
    ap[m] = single_one(b[m], num_aps, "b row " + std::to_string(m));
  }
  return Topology(std::move(gw), std::move(ap), num_gateways, num_aps);
}

Topology Topology::regular(std::size_t num_aps, std::size_t gateways_per_ap,
                           std::size_t devices_per_gateway) {
  const std::size_t num_gateways = num_aps * gateways_per_ap;
  std::vector<std::size_t> gw(num_gateways * devices_per_gateway);
  for (std::size_t n = 0; n < gw.size(); ++n) gw[n] = n / devices_per_gateway;
  std::vector<std::size_t> ap(num_gateways);
  for (std::size_t m = 0; m < num_gateways; ++m) ap[m] = m / gateways_per_ap;
  return Topology(std::move(gw), std::move(ap), num_gateways, num_aps);
}

double dbm_per_hz_to_w_per_hz(double dbm) {
  return std::pow(10.0, (dbm - 30.0) / 10.0);
}

std::size_t Scenario::num_types() const {
  int hi = 0;
  for (int t : ap_type) hi = std::max(hi, t);
  return static_cast<std::size_t>(hi);
}

void Scenario::validate() const {
  const std::size_t n_dev = topology.num_devices();
  const std::size_t n_gw = topology.num_gateways();
  const std::size_t n_ap = topology.num_aps();
  require(n_dev > 0 && n_gw > 0 && n_ap > 0, "empty topology");
  require(!models.empty(), "no DNN models");
  require(model_of_device.size() == n_dev, "model_of_device size mismatch");
  for (std::size_t k : model_of_device) {
    require(k < models.size(), "model index out of range");
  }
  require(mean_arrivals.size() == n_dev, "mean_arrivals size mismatch");
  for (double th : mean_arrivals) {
    require(th >= 0.0 && std::isfinite(th), "mean arrival must be >= 0");
  }
  require(gateways.size() == n_gw, "gateway parameter count mismatch");
  for (const GatewayParams& g : gateways) {
    require(g.flops_per_cycle > 0 && g.frequency_hz > 0 &&
                g.switched_capacitance > 0 && g.transmit_power_w > 0 &&
                g.distance_m > 0 && g.max_energy_j >= 0,
            "gateway parameters must be positive");
  }
  require(aps.size() == n_ap, "AP parameter count mismatch");
  for (const ApParams& p : aps) {
    require(p.flops_per_cycle > 0 && p.switched_capacitance > 0 &&
                p.max_frequency_hz > 0 && p.max_energy_j >= 0,
            "AP parameters must be positive");
    require(p.min_frequency_hz >= 0 && p.min_frequency_hz < p.max_frequency_hz,
            "AP frequency bounds must satisfy 0 <= f_min < f_max");
  }
  require(ap_type.size() == n_ap, "ap_type size mismatch");
  for (int t : ap_type) require(t >= 1, "AP types are 1-based");
  require(channel.path_loss_const > 0 && channel.reference_distance_m > 0 &&
              channel.bandwidth_hz > 0 && channel.noise_psd_w_per_hz > 0 &&
              channel.interference_std_w >= 0,
          "channel parameters must be positive");
}

std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t index,
                            std::uint64_t stream) {
  std::seed_seq seq{lo32(seed),  hi32(seed),   lo32(index),
                    hi32(index), lo32(stream), hi32(stream)};
  return std::mt19937_64(seq);
}

SlotRealization sample_slot(const Scenario& scenario, std::uint64_t seed,
                            std::size_t t) {
  auto rng = make_stream(seed, t, kSlotStream);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::exponential_distribution<double> unit_exp(1.0);
  std::normal_distribution<double> std_normal(0.0, 1.0);

  const auto& topo = scenario.topology;
  SlotRealization r;
  r.t = t;
  r.data.resize(topo.num_devices());
  for (std::size_t n = 0; n < r.data.size(); ++n) {
    r.data[n] = scenario.mean_arrivals[n] * unit_exp(rng);
  }
  r.fading.resize(topo.num_gateways());
  for (double& rho : r.fading) rho = unit_exp(rng);

  const double mu = scenario.channel.interference_mean_w;
  const double sd = scenario.channel.interference_std_w;
  r.interference.resize(topo.num_gateways());
  for (double& eta : r.interference) {
    // Gaussian truncated at zero, by rejection; the clamp only triggers for a
    // mean far below zero.
    eta = 0.0;
    for (int tries = 0; tries < 64; ++tries) {
      const double x = mu + sd * std_normal(rng);
      if (x >= 0.0) {
        eta = x;
        break;
      }
    }
  }
  r.gateway_energy.resize(topo.num_gateways());
  for (std::size_t m = 0; m < r.gateway_energy.size(); ++m) {
    r.gateway_energy[m] = scenario.gateways[m].max_energy_j * unit(rng);
  }
  r.ap_energy.resize(topo.num_aps());
  for (std::size_t j = 0; j < r.ap_energy.size(); ++j) {
    r.ap_energy[j] = scenario.aps[j].max_energy_j * unit(rng);
  }
  return r;
}

double channel_gain(const ChannelParams& channel, const GatewayParams& gateway,
                    double fading) {
  if (!(gateway.distance_m > 0.0)) {
    throw InvalidSpecError("gateway distance must be positive");
  }
  if (fading < 0.0) throw InvalidSpecError("fading gain must be >= 0");
  return channel.path_loss_const * fading *
         std::pow(channel.reference_distance_m / gateway.distance_m,
                  channel.path_loss_exponent);
}

double uplink_rate(const ChannelParams& channel, const GatewayParams& gateway,
                   double gain, double interference) {
  const double snr = gateway.transmit_power_w * gain /
                     (interference + channel.noise_power_w());
  return channel.bandwidth_hz * std::log2(1.0 + snr);
}

GatewayWorkload gateway_workload(const Scenario& scenario, std::size_t m,
                                 std::span<const double> data,
                                 std::span<const std::size_t> partition) {
  GatewayWorkload w;
  for (std::size_t n : scenario.topology.devices_of_gateway(m)) {
    const ModelProfile& model = scenario.model(n);
    const std::size_t l = partition[n];
    if (l < 1 || l > model.num_layers()) {
      throw OutOfRangeError("partition point of device " + std::to_string(n) +
                            " outside 1.." +
                            std::to_string(model.num_layers()));
    }
    w.local_flops += data[n] * model.prefix_flops(l);
    w.offload_bits += data[n] * model.output_bits(l);
    w.remote_flops += data[n] * model.suffix_flops(l);
  }
  return w;
}

double gateway_inference_time(const Scenario& scenario, std::size_t m,
                              std::span<const double> data,
                              std::span<const std::size_t> partition) {
  const GatewayParams& g = scenario.gateways[m];
  return gateway_workload(scenario, m, data, partition).local_flops /
         (g.flops_per_cycle * g.frequency_hz);
}

double gateway_inference_energy(const Scenario& scenario, std::size_t m,
                                std::span<const double> data,
                                std::span<const std::size_t> partition) {
  const GatewayParams& g = scenario.gateways[m];
  return g.switched_capacitance * g.frequency_hz * g.frequency_hz /
         g.flops_per_cycle *
         gateway_workload(scenario, m, data, partition).local_flops;
}

double offload_time(const Scenario& scenario, std::size_t m,
                    std::span<const double> data,
                    std::span<const std::size_t> partition, double rate) {
  const double bits = gateway_workload(scenario, m, data, partition).offload_bits;
  if (bits == 0.0) return 0.0;
  if (!(rate > 0.0)) {
    throw InfeasibleSlotError("gateway " + std::to_string(m) +
                              " has a zero uplink rate with pending payload");
  }
  return bits / rate;
}

double offload_energy(const Scenario& scenario, std::size_t m,
                      std::span<const double> data,
                      std::span<const std::size_t> partition, double rate) {
  return scenario.gateways[m].transmit_power_w *
         offload_time(scenario, m, data, partition, rate);
}

double ap_inference_time(const Scenario& scenario, std::size_t m,
                         std::span<const double> data,
                         std::span<const std::size_t> partition,
                         double ap_frequency) {
  const double work =
      gateway_workload(scenario, m, data, partition).remote_flops;
  if (work == 0.0) return 0.0;
  if (!(ap_frequency > 0.0)) {
    throw InfeasibleDecisionError("AP frequency of gateway " +
                                  std::to_string(m) +
                                  " is zero with offloaded work");
  }
  return work / (scenario.ap_of_gateway(m).flops_per_cycle * ap_frequency);
}

double ap_inference_energy(const Scenario& scenario, std::size_t m,
                           std::span<const double> data,
                           std::span<const std::size_t> partition,
                           double ap_frequency) {
  const ApParams& ap = scenario.ap_of_gateway(m);
  return ap.switched_capacitance * ap_frequency * ap_frequency /
         ap.flops_per_cycle *
         gateway_workload(scenario, m, data, partition).remote_flops;
}

double slot_latency(std::span<const double> gateway_times, double block_time) {
  double worst = 0.0;
  for (double t : gateway_times) worst = std::max(worst, t);
  return worst + block_time;
}

double ap_energy(const Topology& topology, std::size_t j,
                 std::span<const double> ap_inference_energy_per_gateway,
                 double block_energy) {
  double sum = 0.0;
  for (std::size_t m : topology.gateways_of_ap(j)) {
    sum += ap_inference_energy_per_gateway[m];
  }
  return sum + block_energy;
}

}  // namespace bdt
