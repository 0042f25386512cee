#include "bdt/consensus.hpp"

#include <algorithm>
#include <cmath>

#include "bdt/error.hpp"

namespace bdt {

ReputationFunction ReputationFunction::affine(double kappa) {
  if (!(kappa > 0.0)) throw InvalidSpecError("affine kappa must be positive");
  ReputationFunction g;
  g.kind_ = Kind::Affine;
  g.a_ = kappa;
  return g;
}

ReputationFunction ReputationFunction::logarithmic(double c1, double c2) {
  if (!(c1 >= 0.0) || !(c2 > 0.0)) {
    throw InvalidSpecError("log reputation needs c1 >= 0 and c2 > 0");
  }
  ReputationFunction g;
  g.kind_ = Kind::Log;
  g.a_ = c1;
  g.b_ = c2;
  return g;
}

ReputationFunction ReputationFunction::table(
    std::vector<std::pair<double, double>> pts) {
  if (pts.empty()) throw InvalidSpecError("reputation table is empty");
  for (std::size_t k = 1; k < pts.size(); ++k) {
    if (!(pts[k].first > pts[k - 1].first)) {
      throw InvalidSpecError("reputation table O values must increase");
    }
    if (pts[k].second < pts[k - 1].second) {
      throw InvalidSpecError("reputation table must be nondecreasing");
    }
  }
  if (pts.front().second < 0.0) {
    throw InvalidSpecError("reputation table must be nonnegative");
  }
  ReputationFunction g;
  g.kind_ = Kind::Table;
  g.points_ = std::move(pts);
  return g;
}

double ReputationFunction::operator()(double o) const {
  switch (kind_) {
    case Kind::Affine:
      return o / a_;
    case Kind::Log:
      return a_ * std::log1p(o / b_);
    case Kind::Table: {
      if (o <= points_.front().first) return points_.front().second;
      if (o >= points_.back().first) return points_.back().second;
      auto it = std::upper_bound(
          points_.begin(), points_.end(), o,
          [](double x, const auto& p) { return x < p.first; });
      const auto& hi = *it;
      const auto& lo = *(it - 1);
      const double w = (o - lo.first) / (hi.first - lo.first);
      return lo.second + w * (hi.second - lo.second);
    }
  }
  return 0.0;
}

double ReputationParams::quantile_factor() const { return -std::log1p(-p0); }

void ReputationParams::validate() const {
  if (!(p0 > 0.0 && p0 < 1.0)) throw InvalidSpecError("p0 must be in (0,1)");
  if (!(u_min < u_max)) throw InvalidSpecError("U_min must be below U_max");
  if (!(g(0.0) >= 0.0)) throw InvalidSpecError("g(0) must be >= 0");
  if (!std::isfinite(alpha) || !std::isfinite(beta)) {
    throw InvalidSpecError("alpha and beta must be finite");
  }
}

std::vector<double> offloaded_flops(const Scenario& scenario,
                                    std::span<const double> data,
                                    std::span<const std::size_t> partition) {
  const Topology& topo = scenario.topology;
  std::vector<double> out(topo.num_aps(), 0.0);
  for (std::size_t j = 0; j < topo.num_aps(); ++j) {
    for (std::size_t m : topo.gateways_of_ap(j)) {
      out[j] += gateway_workload(scenario, m, data, partition).remote_flops;
    }
  }
  return out;
}

double reputation(const ReputationParams& params, double offloaded) {
  return params.g(offloaded);
}

double difficulty(const ReputationParams& params, double reputation) {
  return std::exp(-params.alpha * reputation - params.beta);
}

BlockRace block_time_with_difficulty(const ReputationParams& params,
                                     std::span<const double> block_frequency,
                                     std::span<const double> difficulties) {
  BlockRace race;
  race.rates.resize(block_frequency.size());
  for (std::size_t j = 0; j < block_frequency.size(); ++j) {
    if (block_frequency[j] < 0.0) {
      throw InfeasibleDecisionError("negative block frequency");
    }
    race.rates[j] = block_frequency[j] / difficulties[j];
    race.total_rate += race.rates[j];
  }
  if (!(race.total_rate > 0.0)) {
    throw NoMinerError("no AP mines blocks (total query rate is zero)");
  }
  race.block_time = params.quantile_factor() / race.total_rate;
  return race;
}

BlockRace block_time(const ReputationParams& params,
                     std::span<const double> block_frequency,
                     std::span<const double> reputations) {
  std::vector<double> gammas(reputations.size());
  for (std::size_t j = 0; j < reputations.size(); ++j) {
    gammas[j] = difficulty(params, reputations[j]);
  }
  return block_time_with_difficulty(params, block_frequency, gammas);
}

double sample_block_time(double total_rate, std::mt19937_64& rng) {
  if (!(total_rate > 0.0)) throw NoMinerError("block rate must be positive");
  std::exponential_distribution<double> dist(total_rate);
  return dist(rng);
}

double block_energy(double switched_capacitance, double block_time,
                    double block_frequency) {
  return switched_capacitance * block_time * block_frequency *
         block_frequency * block_frequency;
}

}  // namespace bdt
