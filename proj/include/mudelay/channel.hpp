#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "mudelay/random.hpp"

namespace mudelay {

double db_to_linear(double db);
double linear_to_db(double linear);

/// Average SNR of each user (linear power ratio). Index 0 is the tagged user.
class UserPopulation {
 public:
  explicit UserPopulation(std::vector<double> avg_snr_linear);
  static UserPopulation from_db(std::span<const double> avg_snr_db);

  std::size_t size() const { return avg_snr_.size(); }
  double avg_snr(std::size_t i) const { return avg_snr_.at(i); }
  std::span<const double> avg_snr() const { return avg_snr_; }
  double min_avg_snr() const;
  /// Sum over users of 1 / avg_snr.
  double inverse_snr_sum() const;
  UserPopulation scaled(double factor) const;

  bool operator==(const UserPopulation&) const = default;

 private:
  std::vector<double> avg_snr_;
};

enum class FadingFamily { Rayleigh };

/// Distribution of the normalized SNR x = gamma / avg_gamma, identical for all users.
class NormalizedSnrDist {
 public:
  virtual ~NormalizedSnrDist() = default;
  virtual FadingFamily family() const = 0;
  virtual double pdf(double x) const = 0;
  virtual double cdf(double x) const = 0;
  virtual double sample(RandomStream& rng) const = 0;
  /// Truncation point for semi-infinite integrals: cdf(upper_limit()) > 1 - 1e-12.
  virtual double upper_limit() const = 0;
};

/// Rayleigh fading: x is unit-mean exponential.
class RayleighNormalizedSnr final : public NormalizedSnrDist {
 public:
  FadingFamily family() const override { return FadingFamily::Rayleigh; }
  double pdf(double x) const override;
  double cdf(double x) const override;
  double sample(RandomStream& rng) const override;
  double upper_limit() const override;
};

const NormalizedSnrDist& rayleigh();

double pdf_x(const NormalizedSnrDist& dist, double x);
double cdf_x(const NormalizedSnrDist& dist, double x);

/// Density of the maximum of n i.i.d. normalized SNRs: n f(x) F(x)^(n-1).
double pdf_max_of(const NormalizedSnrDist& dist, int n, double x);
/// F(x)^n.
double cdf_max_of(const NormalizedSnrDist& dist, int n, double x);

/// One frame of normalized SNRs, one draw per user.
std::vector<double> sample_frame_snrs(const UserPopulation& pop, const NormalizedSnrDist& dist,
                                      RandomStream& rng);
void sample_frame_snrs(const NormalizedSnrDist& dist, RandomStream& rng, std::span<double> out);

}  // namespace mudelay
