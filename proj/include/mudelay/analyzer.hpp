#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "mudelay/channel.hpp"
#include "mudelay/phy.hpp"
#include "mudelay/random.hpp"
#include "mudelay/traffic.hpp"

namespace mudelay {

enum class ThresholdVariant { FullCsi, Quantized };

/// Switching points on the normalized SNR axis.
///
/// FullCsi holds xi_1 < ... < xi_{M-1}; mode m covers [xi_{m-1}, xi_m) with xi_0 = 0 and
/// xi_M = inf, so there is no outage. Quantized holds xi_1 < ... < xi_M; index m covers
/// [xi_m, xi_{m+1}) with xi_{M+1} = inf and index 0 = [0, xi_1) is outage.
class ThresholdSet {
 public:
  static ThresholdSet full_csi(std::vector<double> points);
  static ThresholdSet quantized(std::vector<double> points);

  ThresholdVariant variant() const { return variant_; }
  std::span<const double> points() const { return points_; }
  int mode_count() const;
  /// [lower, upper) of mode m. FullCsi: m in 1..M. Quantized: m in 0..M (0 = outage).
  std::pair<double, double> region(int m) const;
  /// Mode selected for normalized SNR x (FullCsi: 1..M, Quantized: 0..M).
  int mode_for(double x) const;
  ThresholdSet scaled(double factor) const;

  bool operator==(const ThresholdSet&) const = default;

 private:
  ThresholdSet(ThresholdVariant variant, std::vector<double> points);

  ThresholdVariant variant_;
  std::vector<double> points_;
};

/// Service rates c_0..c_M (packets/frame) of the tagged user and their probabilities.
struct ServiceDistribution {
  std::vector<int> rates;
  std::vector<double> probs;

  static ServiceDistribution from_table(const AmcModeTable& table, std::vector<double> probs);
  void validate() const;
  /// Mean packets per frame.
  double mean_rate() const;
};

/// P_0..P_M for full-CSI normalized-SNR scheduling with K >= 2 users.
std::vector<double> service_probs_full_csi(const NormalizedSnrDist& dist,
                                           const ThresholdSet& thresholds, int users);

/// P_0..P_M for quantized-feedback scheduling with uniform tie breaking, K >= 1.
std::vector<double> service_probs_quantized(const NormalizedSnrDist& dist,
                                            const ThresholdSet& thresholds, int users);

/// Asymptotic log-MGF of the cumulative service in bits (1/second).
double ge_limit_service(const ServiceDistribution& sd, int packet_bits, double frame_len, double s);

/// Positive root s* of arrival(s) + service(-s) = 0 by bracketed bisection.
/// Throws UnstableQueueError when no sign change is found.
double solve_delay_exponent(const std::function<double(double)>& arrival,
                            const std::function<double(double)>& service);

/// How Pr(D > 0 | C_n = c_j) is measured in the pilot queue.
enum class PositiveDelayEstimator {
  /// Fraction of packets that become eligible in a frame with rate c_j and are not sent in it.
  FirstOpportunity,
  /// Fraction of frames with rate c_j that start with a nonempty backlog.
  FrameBacklog,
};

/// Pr(D > 0) = sum_j P_j Pr(D > 0 | C_n = c_j) from a pilot queue simulation without
/// deadline dropping.
struct PositiveDelayEstimate {
  double probability = 0.0;
  std::vector<double> conditional;    // per service class
  std::vector<std::int64_t> samples;  // packets (or frames) observed per class
  std::vector<bool> fallback;         // class used the pooled estimate
  double pooled = 0.0;                // estimate ignoring the service class
};

inline constexpr std::int64_t kMinPilotFrames = 10'000;
/// Classes observed fewer times than this use the unconditional busy fraction.
inline constexpr std::int64_t kMinClassSamples = 50;

PositiveDelayEstimate prob_positive_delay(
    const ServiceDistribution& sd, const MmppSource& src, double frame_len,
    std::int64_t pilot_frames, std::uint64_t seed,
    PositiveDelayEstimator estimator = PositiveDelayEstimator::FirstOpportunity);

/// Pr(D > 0) exp(exponent d_max).
double delay_violation_prob(double prob_positive_delay, double exponent, double d_max);

struct DelayReport {
  double s_star = 0.0;
  double exponent = 0.0;  // Lambda_C(-s*), 1/second
  double prob_positive_delay = 0.0;
  std::vector<bool> fallback;
  std::vector<std::pair<double, double>> p_d;  // (d_max seconds, probability)
};

DelayReport analyze_delay(
    const ServiceDistribution& sd, const MmppSource& src, double frame_len,
    std::span<const double> d_max, std::int64_t pilot_frames, std::uint64_t seed,
    PositiveDelayEstimator estimator = PositiveDelayEstimator::FirstOpportunity);

}  // namespace mudelay
