#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mudelay/analyzer.hpp"
#include "mudelay/channel.hpp"
#include "mudelay/optimizer.hpp"
#include "mudelay/phy.hpp"
#include "mudelay/sim.hpp"
#include "mudelay/traffic.hpp"

namespace mudelay {

struct AnalysisToggles {
  bool service_probs = true;
  bool delay_exponent = true;
  bool p_d = true;
  std::int64_t pilot_frames = 200'000;
  PositiveDelayEstimator estimator = PositiveDelayEstimator::FirstOpportunity;

  bool operator==(const AnalysisToggles&) const = default;
};

enum class SweepAxis { DMaxMs, TOnFrames, RateKbps };

const char* sweep_axis_name(SweepAxis axis);

struct Sweep {
  SweepAxis axis = SweepAxis::DMaxMs;
  std::vector<double> values;

  bool operator==(const Sweep&) const = default;
};

/// A fully resolved experiment: one scenario, its system parameters and a sweep axis.
/// Times are stored in seconds and SNRs as linear ratios.
struct ExperimentSpec {
  std::string scenario;
  Scheme scheme = Scheme::FullCsi;
  UserPopulation users{std::vector<double>{1.0}};
  std::vector<AmcMode> modes = AmcModeTable::standard_modes();
  int packet_bits = 1080;
  int slots = 2;
  double target_per = 0.01;
  std::optional<std::vector<double>> thresholds;  // designed when absent
  MmppSource traffic;
  double frame_len = 2e-3;
  double d_max = 60e-3;
  std::int64_t horizon_frames = 1'000'000;
  std::int64_t warmup_frames = 10'000;
  std::uint64_t seed = 1;
  int replications = 1;
  AnalysisToggles analysis;
  std::optional<Sweep> sweep;

  AmcModeTable table() const { return AmcModeTable(modes, packet_bits, slots); }
  /// Sweep points; without a sweep section this is the single configured d_max.
  Sweep resolved_sweep() const;
  /// Copy of the spec with one sweep value applied.
  ExperimentSpec at_point(SweepAxis axis, double value) const;
  void validate() const;

  bool operator==(const ExperimentSpec&) const = default;
};

/// Parses the YAML experiment format. Unknown keys and invalid values raise SpecError
/// carrying `origin:line:column`.
ExperimentSpec parse_spec(const std::string& text, const std::string& origin = "<spec>");
ExperimentSpec load_spec(const std::filesystem::path& path);
/// Canonical YAML form (seconds, linear SNR, full precision); parse_spec inverts it exactly.
std::string serialize_spec(const ExperimentSpec& spec);

/// Thresholds used for a point: explicit ones, else the optimized or constant-power design.
struct Design {
  ThresholdSet thresholds = ThresholdSet::full_csi({});
  std::optional<double> lambda;
  std::optional<double> s_star;
  std::optional<double> exponent;
};

Design design_thresholds(const ExperimentSpec& spec);

struct RowDetails {
  std::vector<double> thresholds;
  std::vector<double> service_probs;
  std::optional<double> lambda;
  std::optional<double> prob_positive_delay;
  std::vector<double> replicate_p_d;
  std::int64_t arrived = 0;
  std::int64_t served = 0;
  std::int64_t error_lost = 0;
  std::int64_t deadline_dropped = 0;
  std::int64_t still_queued = 0;
  std::optional<double> mean_delay;
};

struct ResultRow {
  std::string scenario;
  std::string sweep_name;
  double sweep_value = 0.0;
  std::optional<double> p_d_analysis;
  std::optional<double> p_d_sim;
  std::optional<double> p_d_sim_ci95;
  std::optional<double> s_star;
  std::optional<double> exponent;
  std::optional<double> avg_power_ratio;
  std::optional<double> measured_per;
  std::vector<std::uint64_t> seeds;

  std::optional<std::string> error;  // set when a sweep point failed
  RowDetails details;

  void validate() const;
};

std::vector<ResultRow> cmd_analyze(const ExperimentSpec& spec);
std::vector<ResultRow> cmd_simulate(const ExperimentSpec& spec);
/// Analysis and simulation per point. Failures are recorded on the row; the sweep continues.
std::vector<ResultRow> cmd_sweep(const ExperimentSpec& spec);

struct OptimizeReport {
  std::string scenario;
  Scheme scheme = Scheme::FullCsi;
  Design design;
  double avg_power_ratio = 0.0;
};

OptimizeReport cmd_optimize(const ExperimentSpec& spec);

}  // namespace mudelay
