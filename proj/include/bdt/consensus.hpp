#pragma once

#include <cstddef>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include "bdt/system_env.hpp"

namespace bdt {

/// Maps offloaded FLOPs to off-chain reputation. All variants are
/// nondecreasing with g(0) >= 0.
class ReputationFunction {
 public:
  enum class Kind { Affine, Log, Table };

  /// g(O) = O / kappa.
  static ReputationFunction affine(double kappa);
  /// g(O) = c1 * ln(1 + O / c2).
  static ReputationFunction logarithmic(double c1, double c2);
  /// Piecewise-linear through (O, U) points sorted by O, constant outside.
  static ReputationFunction table(std::vector<std::pair<double, double>> pts);

  Kind kind() const { return kind_; }
  double kappa() const { return a_; }
  double c1() const { return a_; }
  double c2() const { return b_; }
  const std::vector<std::pair<double, double>>& points() const {
    return points_;
  }

  double operator()(double offloaded_flops) const;

 private:
  Kind kind_ = Kind::Affine;
  double a_ = 1.0;
  double b_ = 1.0;
  std::vector<std::pair<double, double>> points_;
};

struct ReputationParams {
  double alpha = 5e-5;
  double beta = -29.0;
  ReputationFunction g = ReputationFunction::affine(1.0);
  double p0 = 1.0 - 1e-15;
  double u_min = 25.0;
  double u_max = 75.0;

  /// -ln(1 - p0).
  double quantile_factor() const;
  void validate() const;
};

/// O_j = sum_m sum_n b[m,j] a[n,m] D_n suffix_n(l_n).
std::vector<double> offloaded_flops(const Scenario& scenario,
                                    std::span<const double> data,
                                    std::span<const std::size_t> partition);

double reputation(const ReputationParams& params, double offloaded);

/// gamma = exp(-alpha U - beta).
double difficulty(const ReputationParams& params, double reputation);

struct BlockRace {
  std::vector<double> rates;  // theta_j
  double total_rate = 0.0;    // theta_hat
  double block_time = 0.0;    // -ln(1 - p0) / theta_hat
};

/// Poisson race with theta_j = f_j / gamma_j(U_j). Throws NoMinerError if
/// the total rate is zero.
BlockRace block_time(const ReputationParams& params,
                     std::span<const double> block_frequency,
                     std::span<const double> reputations);

/// Same race with explicit difficulties.
BlockRace block_time_with_difficulty(const ReputationParams& params,
                                     std::span<const double> block_frequency,
                                     std::span<const double> difficulties);

/// One exponential draw with rate theta_hat.
double sample_block_time(double total_rate, std::mt19937_64& rng);

/// e = v * tau * f^3.
double block_energy(double switched_capacitance, double block_time,
                    double block_frequency);

}  // namespace bdt
