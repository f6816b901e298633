#pragma once

#include <span>
#include <vector>

namespace mudelay {

/// One AMC mode: rate in bits/symbol and the constants of the PER approximation
/// PER(snr) = 1 / (1 + (a snr)^g).
struct AmcMode {
  double rate = 0.0;
  double a = 0.0;
  double g = 0.0;

  bool operator==(const AmcMode&) const = default;
};

class AmcModeTable {
 public:
  /// `slots` is the number of packets a mode-1 frame carries. Every mode must carry
  /// an integer number of packets (slots * R_m / R_1).
  AmcModeTable(std::vector<AmcMode> modes, int packet_bits, int slots);

  /// Seven convolutionally coded modes (BPSK 1/2 .. 64-QAM 2/3) fitted for 1080-bit packets.
  static AmcModeTable standard(int slots = 2);
  static std::vector<AmcMode> standard_modes();

  int size() const { return static_cast<int>(modes_.size()); }
  /// Mode m, 1-based.
  const AmcMode& mode(int m) const;
  std::span<const AmcMode> modes() const { return modes_; }
  int packet_bits() const { return packet_bits_; }
  int slots() const { return slots_; }
  /// Packets per frame in mode j; j = 0 (no transmission) carries none.
  int packets_per_frame(int j) const;
  /// c_0 .. c_M.
  std::vector<int> service_rates() const;

  bool operator==(const AmcModeTable&) const = default;

 private:
  std::vector<AmcMode> modes_;
  std::vector<int> packets_;
  int packet_bits_;
  int slots_;
};

double per_model(const AmcMode& mode, double snr);

struct PerSample {
  double snr = 0.0;
  double per = 0.0;
};

struct PerFit {
  double a = 0.0;
  double g = 0.0;
};

/// Least-squares fit of (a, g) via the linearization log(1/PER - 1) = g log a + g log snr.
PerFit fit_per_params(std::span<const PerSample> samples);

/// SNR at which `mode` attains exactly `target_per`.
double d_constant(const AmcMode& mode, double target_per);

/// Per-mode power adaptation that pins the PER at its target.
class PowerLaw {
 public:
  PowerLaw(const AmcModeTable& table, double target_per);

  double target_per() const { return target_per_; }
  int size() const { return static_cast<int>(d_.size()); }
  /// d_m, 1-based.
  double d(int m) const;
  std::span<const double> d_constants() const { return d_; }

 private:
  double target_per_;
  std::vector<double> d_;
};

/// Transmit power relative to the average power for mode m when the scheduled user has
/// average SNR `avg_snr` and normalized SNR `x_star`.
double power_ratio(const PowerLaw& law, int m, double avg_snr, double x_star);

}  // namespace mudelay
