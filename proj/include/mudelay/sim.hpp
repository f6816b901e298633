#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "mudelay/analyzer.hpp"
#include "mudelay/channel.hpp"
#include "mudelay/phy.hpp"
#include "mudelay/random.hpp"
#include "mudelay/traffic.hpp"

namespace mudelay {

enum class Scheme {
  FullCsi,    // normalized-SNR scheduling with AMC and power adaptation
  Quantized,  // quantized feedback, constant-power AMC
};

struct SimConfig {
  UserPopulation pop{std::vector<double>{1.0}};
  AmcModeTable table = AmcModeTable::standard();
  double target_per = 0.01;
  ThresholdSet thresholds = ThresholdSet::full_csi({});
  Scheme scheme = Scheme::FullCsi;
  MmppSource src;
  double frame_len = 2e-3;     // seconds
  double d_max = 60e-3;        // seconds
  std::int64_t horizon_frames = 1'000'000;
  std::int64_t warmup_frames = 10'000;
  std::uint64_t seed = 1;
  std::shared_ptr<const NormalizedSnrDist> dist;  // null means Rayleigh

  void validate() const;
};

/// Tagged-user statistics collected after warmup.
struct SimStats {
  std::int64_t frames = 0;
  std::int64_t arrived = 0;
  std::int64_t served = 0;
  std::int64_t error_lost = 0;
  std::int64_t deadline_dropped = 0;
  std::int64_t still_queued = 0;

  /// Fraction of resolved packets whose delay exceeded d_max (deadline drops).
  double measured_p_d = 0.0;
  /// Frames in which the tagged user was served in mode j (j = 0: not served), normalized.
  std::vector<double> mode_frequencies;
  std::vector<std::int64_t> mode_frames;
  /// Mean of S/S_bar over all frames (every user's transmissions).
  double avg_power_ratio = 0.0;
  /// Tagged-user packet error rate, overall and per mode (index = mode).
  double measured_per = 0.0;
  std::vector<std::int64_t> mode_packets;
  std::vector<std::int64_t> mode_errors;

  double mean_delay = 0.0;
  double delay_p50 = 0.0;
  double delay_p95 = 0.0;
  double delay_p99 = 0.0;

  /// Delays (seconds) of transmitted packets, ascending.
  std::vector<double> delays;
  double d_max = 0.0;

  /// Fraction of resolved packets with delay > d (d <= d_max); drops count as violations.
  double violation_fraction(double d) const;
};

struct ScheduleDecision {
  std::optional<std::size_t> user;  // empty: outage
  int mode = 0;
};

/// Largest normalized SNR wins (ties to the lowest index); mode from the full-CSI regions.
ScheduleDecision schedule_full_csi(std::span<const double> x, const ThresholdSet& thresholds);

/// Uniform choice among users reporting the largest index; all-zero indices mean outage.
ScheduleDecision schedule_quantized(std::span<const int> indices, RandomStream& rng);

SimStats run(const SimConfig& config);

}  // namespace mudelay
