#pragma once

#include <vector>

#include "mudelay/analyzer.hpp"
#include "mudelay/channel.hpp"
#include "mudelay/phy.hpp"
#include "mudelay/traffic.hpp"

namespace mudelay {

/// theta_j(s) = exp(-s N_b c_j), j = 0..M.
struct WeightSchedule {
  std::vector<double> theta;

  WeightSchedule(const AmcModeTable& table, double s);
};

/// C_p = (1 - P_0) * sum_i 1/avg_snr_i with P_0 = (K-1)/K.
double power_constant(const UserPopulation& pop);

/// Stationary thresholds of the Lagrangian for multiplier `lambda` at exponent parameter `s`.
/// Throws InfeasibleError when the points are not strictly increasing or not finite.
ThresholdSet thresholds_from_lagrange(double lambda, double s, const PowerLaw& law,
                                      const UserPopulation& pop, const AmcModeTable& table);

/// E{S}/S_bar of the full-CSI power-adaptive scheme. Requires K >= 2.
double average_power_ratio(const ThresholdSet& thresholds, const PowerLaw& law,
                           const UserPopulation& pop, const NormalizedSnrDist& dist);

struct OptimizerResult {
  ThresholdSet thresholds;
  double lambda = 0.0;
  double s_star = 0.0;
  double avg_power_ratio = 0.0;
  double exponent = 0.0;
  std::vector<double> service_probs;
};

/// Multiplier that meets the power constraint with equality at fixed s.
double solve_lagrange_multiplier(double s, const PowerLaw& law, const UserPopulation& pop,
                                 const AmcModeTable& table, const NormalizedSnrDist& dist);

/// Joint (lambda*, s*) of the power constraint and the delay-exponent equation,
/// found by nested bisection (lambda inner, s outer).
OptimizerResult optimize_full_csi(const PowerLaw& law, const UserPopulation& pop,
                                  const AmcModeTable& table, const MmppSource& src,
                                  double frame_len, const NormalizedSnrDist& dist = rayleigh());

/// Constant-power design: xi_m = d_m / min_i avg_snr_i, m = 1..M.
ThresholdSet quantized_thresholds(const PowerLaw& law, const UserPopulation& pop);

/// Analytical E{S}/S_bar of the constant-power scheme: the probability that some user
/// is above outage.
double quantized_power_ratio(const ThresholdSet& thresholds, const UserPopulation& pop,
                             const NormalizedSnrDist& dist);

}  // namespace mudelay
