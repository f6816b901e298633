#include "mudelay/phy.hpp"

#include <cmath>
#include <sstream>

#include "mudelay/errors.hpp"

namespace mudelay {

AmcModeTable::AmcModeTable(std::vector<AmcMode> modes, int packet_bits, int slots)
    : modes_(std::move(modes)), packet_bits_(packet_bits), slots_(slots) {
  if (modes_.empty()) throw DomainError("mode table must contain at least one mode");
  if (packet_bits_ <= 0) throw DomainError("packet size must be positive");
  if (slots_ <= 0) throw DomainError("packets per mode-1 frame must be positive");
  packets_.push_back(0);
  for (std::size_t m = 0; m < modes_.size(); ++m) {
    const AmcMode& mode = modes_[m];
    if (!(mode.rate > 0.0) || !(mode.a > 0.0) || !(mode.g > 0.0)) {
      throw DomainError("mode rate and PER constants must be positive");
    }
    if (m > 0 && !(mode.rate > modes_[m - 1].rate)) {
      throw DomainError("mode rates must be strictly increasing");
    }
    const double c = slots_ * mode.rate / modes_.front().rate;
    const double rounded = std::round(c);
    if (std::abs(c - rounded) > 1e-9 * std::max(1.0, c)) {
      std::ostringstream msg;
      msg << "mode " << m + 1 << " carries a non-integer number of packets per frame (" << c
          << ")";
      throw DomainError(msg.str());
    }
    packets_.push_back(static_cast<int>(rounded));
  }
}

std::vector<AmcMode> AmcModeTable::standard_modes() {
  return {
      {0.5, 1.4676, 12.32},  // BPSK 1/2
      {0.75, 0.7309, 11.23}, // BPSK 3/4
      {1.0, 0.3740, 11.95},  // QPSK 1/2
      {1.5, 0.1866, 10.93},  // QPSK 3/4
      {2.0, 0.0950, 10.80},  // 16-QAM 1/2
      {3.0, 0.0405, 10.48},  // 16-QAM 3/4
      {4.0, 0.0150, 10.75},  // 64-QAM 2/3
  };
}

AmcModeTable AmcModeTable::standard(int slots) {
  return AmcModeTable(standard_modes(), 1080, slots);
}

const AmcMode& AmcModeTable::mode(int m) const {
  if (m < 1 || m > size()) throw DomainError("mode index out of range");
  return modes_[static_cast<std::size_t>(m - 1)];
}

int AmcModeTable::packets_per_frame(int j) const {
  if (j < 0 || j > size()) throw DomainError("mode index out of range");
  return packets_[static_cast<std::size_t>(j)];
}

std::vector<int> AmcModeTable::service_rates() const { return packets_; }

double per_model(const AmcMode& mode, double snr) {
  if (!(snr > 0.0)) throw DomainError("post-adaptation SNR must be positive");
  return 1.0 / (1.0 + std::pow(mode.a * snr, mode.g));
}

PerFit fit_per_params(std::span<const PerSample> samples) {
  if (samples.size() < 3) throw NumericError("PER fit needs at least 3 samples");
  double sx = 0.0, sy = 0.0;
  for (const PerSample& p : samples) {
    if (!(p.snr > 0.0)) throw NumericError("PER fit: SNR samples must be positive");
    if (!(p.per > 0.0 && p.per < 1.0)) throw NumericError("PER fit: PER samples must lie in (0,1)");
    sx += std::log(p.snr);
    sy += std::log(1.0 / p.per - 1.0);
  }
  const double n = static_cast<double>(samples.size());
  const double mx = sx / n, my = sy / n;
  double sxx = 0.0, sxy = 0.0;
  for (const PerSample& p : samples) {
    const double dx = std::log(p.snr) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(1.0 / p.per - 1.0) - my);
  }
  if (!(sxx > 1e-300)) throw NumericError("PER fit: SNR samples are degenerate");
  const double g = sxy / sxx;
  if (!(g > 0.0)) throw NumericError("PER fit: fitted slope is not positive");
  const double intercept = my - g * mx;  // g log a
  return {std::exp(intercept / g), g};
}

double d_constant(const AmcMode& mode, double target_per) {
  if (!(target_per > 0.0 && target_per < 1.0)) {
    throw DomainError("target PER must lie in (0,1)");
  }
  return std::pow(1.0 / target_per - 1.0, 1.0 / mode.g) / mode.a;
}

PowerLaw::PowerLaw(const AmcModeTable& table, double target_per) : target_per_(target_per) {
  for (const AmcMode& mode : table.modes()) d_.push_back(d_constant(mode, target_per));
  for (std::size_t m = 1; m < d_.size(); ++m) {
    if (!(d_[m] > d_[m - 1])) {
      throw DomainError("required SNRs d_m must be strictly increasing across modes");
    }
  }
}

double PowerLaw::d(int m) const {
  if (m < 1 || m > size()) throw DomainError("mode index out of range");
  return d_[static_cast<std::size_t>(m - 1)];
}

double power_ratio(const PowerLaw& law, int m, double avg_snr, double x_star) {
  if (!(x_star > 0.0)) throw DomainError("normalized SNR must be positive for power adaptation");
  if (!(avg_snr > 0.0)) throw DomainError("average SNR must be positive");
  return law.d(m) / (avg_snr * x_star);
}

}  // namespace mudelay
