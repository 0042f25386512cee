#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "bdt/dnn_profile.hpp"

namespace bdt {

/// Device->gateway and gateway->AP association. Each device belongs to exactly
/// one gateway and each gateway to exactly one AP, so both matrices are stored
/// as assignment vectors.
class Topology {
 public:
  Topology() = default;
  Topology(std::vector<std::size_t> gateway_of_device,
           std::vector<std::size_t> ap_of_gateway, std::size_t num_gateways,
           std::size_t num_aps);

  /// Builds from 0/1 matrices a (N x M) and b (M x J); throws
  /// InvalidSpecError if a row does not contain exactly one 1.
  static Topology from_matrices(const std::vector<std::vector<int>>& a,
                                const std::vector<std::vector<int>>& b);

  /// `per_gateway` consecutive devices per gateway, `per_ap` consecutive
  /// gateways per AP.
  static Topology regular(std::size_t num_aps, std::size_t gateways_per_ap,
                          std::size_t devices_per_gateway);

  std::size_t num_devices() const { return gateway_of_device_.size(); }
  std::size_t num_gateways() const { return devices_of_gateway_.size(); }
  std::size_t num_aps() const { return gateways_of_ap_.size(); }

  std::size_t gateway_of_device(std::size_t n) const {
    return gateway_of_device_[n];
  }
  std::size_t ap_of_gateway(std::size_t m) const { return ap_of_gateway_[m]; }
  std::size_t ap_of_device(std::size_t n) const {
    return ap_of_gateway_[gateway_of_device_[n]];
  }
  const std::vector<std::size_t>& devices_of_gateway(std::size_t m) const {
    return devices_of_gateway_[m];
  }
  const std::vector<std::size_t>& gateways_of_ap(std::size_t j) const {
    return gateways_of_ap_[j];
  }

  int a(std::size_t n, std::size_t m) const {
    return gateway_of_device_[n] == m ? 1 : 0;
  }
  int b(std::size_t m, std::size_t j) const {
    return ap_of_gateway_[m] == j ? 1 : 0;
  }

 private:
  std::vector<std::size_t> gateway_of_device_;
  std::vector<std::size_t> ap_of_gateway_;
  std::vector<std::vector<std::size_t>> devices_of_gateway_;
  std::vector<std::vector<std::size_t>> gateways_of_ap_;
};

struct GatewayParams {
  double flops_per_cycle = 8.0;
  double frequency_hz = 5e6;
  double switched_capacitance = 1e-24;
  double transmit_power_w = 0.1;
  double distance_m = 10.0;
  double max_energy_j = 0.5;
};

struct ApParams {
  double flops_per_cycle = 32.0;
  double switched_capacitance = 1e-24;
  double max_frequency_hz = 1e8;
  double min_frequency_hz = 1e4;
  double max_energy_j = 10.0;
};

struct ChannelParams {
  double path_loss_const = 1e-3;
  double reference_distance_m = 1.0;
  double path_loss_exponent = 3.0;
  double bandwidth_hz = 5e6;
  double noise_psd_w_per_hz = 3.9810717055349858e-21;  // -174 dBm/Hz
  double interference_mean_w = 0.0;
  double interference_std_w = 0.0;

  double noise_power_w() const { return noise_psd_w_per_hz * bandwidth_hz; }
};

double dbm_per_hz_to_w_per_hz(double dbm);

/// Static description of the network: topology, per-device model and arrival
/// rate, and the gateway/AP/channel constants.
struct Scenario {
  Topology topology;
  std::vector<ModelProfile> models;
  std::vector<std::size_t> model_of_device;
  std::vector<double> mean_arrivals;  // per device, data points per slot
  std::vector<GatewayParams> gateways;
  std::vector<ApParams> aps;
  std::vector<int> ap_type;  // reporting label per AP, 1-based
  ChannelParams channel;

  const ModelProfile& model(std::size_t n) const {
    return models[model_of_device[n]];
  }
  const ApParams& ap_of_gateway(std::size_t m) const {
    return aps[topology.ap_of_gateway(m)];
  }
  std::size_t num_types() const;

  /// Throws InvalidSpecError on any size mismatch or non-positive constant.
  void validate() const;
};

/// One slot's random draws.
struct SlotRealization {
  std::size_t t = 0;
  std::vector<double> data;            // D_n, per device
  std::vector<double> fading;          // rho_m, per gateway
  std::vector<double> interference;    // eta_m (W), per gateway
  std::vector<double> gateway_energy;  // E_m^G (J)
  std::vector<double> ap_energy;       // E_j^A (J)
};

/// Generator for the (seed, t, stream) triple. Every slot gets an independent
/// stream, so realizations do not depend on evaluation order.
std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t index,
                            std::uint64_t stream);

SlotRealization sample_slot(const Scenario& scenario, std::uint64_t seed,
                            std::size_t t);

/// H = h0 * rho * (d0 / d)^nu.
double channel_gain(const ChannelParams& channel, const GatewayParams& gateway,
                    double fading);

/// Shannon rate in bits/s, base-2 logarithm.
double uplink_rate(const ChannelParams& channel, const GatewayParams& gateway,
                   double gain, double interference);

/// Per-gateway aggregates of one partition vector, weighted by the slot's
/// data arrivals.
struct GatewayWorkload {
  double local_flops = 0.0;   // sum_n a D_n prefix(l_n)
  double offload_bits = 0.0;  // sum_n a D_n o(l_n)
  double remote_flops = 0.0;  // sum_n a D_n suffix(l_n)
};

/// Throws OutOfRangeError if some associated l_n is outside 1..L_n.
GatewayWorkload gateway_workload(const Scenario& scenario, std::size_t m,
                                 std::span<const double> data,
                                 std::span<const std::size_t> partition);

double gateway_inference_time(const Scenario& scenario, std::size_t m,
                              std::span<const double> data,
                              std::span<const std::size_t> partition);
double gateway_inference_energy(const Scenario& scenario, std::size_t m,
                                std::span<const double> data,
                                std::span<const std::size_t> partition);

/// Throws InfeasibleSlotError if the rate is zero with a positive payload.
double offload_time(const Scenario& scenario, std::size_t m,
                    std::span<const double> data,
                    std::span<const std::size_t> partition, double rate);
double offload_energy(const Scenario& scenario, std::size_t m,
                      std::span<const double> data,
                      std::span<const std::size_t> partition, double rate);

/// Throws InfeasibleDecisionError if f_A is zero with a positive workload.
double ap_inference_time(const Scenario& scenario, std::size_t m,
                         std::span<const double> data,
                         std::span<const std::size_t> partition,
                         double ap_frequency);
double ap_inference_energy(const Scenario& scenario, std::size_t m,
                           std::span<const double> data,
                           std::span<const std::size_t> partition,
                           double ap_frequency);

/// max_m (gateway + offload + AP time) + block time.
double slot_latency(std::span<const double> gateway_times, double block_time);

inline double gateway_energy(double inference_energy, double offload_energy) {
  return inference_energy + offload_energy;
}

/// sum_m b[m,j] e_m^{exe,A} + e_j^bloc.
double ap_energy(const Topology& topology, std::size_t j,
                 std::span<const double> ap_inference_energy_per_gateway,
                 double block_energy);

}  // namespace bdt
