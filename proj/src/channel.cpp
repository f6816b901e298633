#include "mudelay/channel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mudelay/errors.hpp"

namespace mudelay {

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

double linear_to_db(double linear) { return 10.0 * std::log10(linear); }

UserPopulation::UserPopulation(std::vector<double> avg_snr_linear)
    : avg_snr_(std::move(avg_snr_linear)) {
  if (avg_snr_.empty()) throw DomainError("user population must contain at least one user");
  for (double g : avg_snr_) {
    if (!(g > 0.0) || !std::isfinite(g)) {
      throw DomainError("average SNR must be positive and finite");
    }
  }
}

UserPopulation UserPopulation::from_db(std::span<const double> avg_snr_db) {
  std::vector<double> linear(avg_snr_db.size());
  std::transform(avg_snr_db.begin(), avg_snr_db.end(), linear.begin(), db_to_linear);
  return UserPopulation(std::move(linear));
}

double UserPopulation::min_avg_snr() const {
  return *std::min_element(avg_snr_.begin(), avg_snr_.end());
}

double UserPopulation::inverse_snr_sum() const {
  return std::accumulate(avg_snr_.begin(), avg_snr_.end(), 0.0,
                         [](double acc, double g) { return acc + 1.0 / g; });
}

UserPopulation UserPopulation::scaled(double factor) const {
  std::vector<double> out(avg_snr_);
  for (double& g : out) g *= factor;
  return UserPopulation(std::move(out));
}

double RayleighNormalizedSnr::pdf(double x) const { return std::exp(-x); }

double RayleighNormalizedSnr::cdf(double x) const { return -std::expm1(-x); }

double RayleighNormalizedSnr::sample(RandomStream& rng) const { return rng.exponential(1.0); }

double RayleighNormalizedSnr::upper_limit() const {
  // 1 - F(x) = e^-x < 1e-12
  return -std::log(1e-12) + 0.01;
}

const NormalizedSnrDist& rayleigh() {
  static const RayleighNormalizedSnr instance;
  return instance;
}

namespace {

void check_x(double x) {
  if (!(x >= 0.0)) throw DomainError("normalized SNR must be non-negative");
}

void check_n(int n) {
  if (n < 1) throw DomainError("order-statistic size must be at least 1");
}

}  // namespace

double pdf_x(const NormalizedSnrDist& dist, double x) {
  check_x(x);
  return dist.pdf(x);
}

double cdf_x(const NormalizedSnrDist& dist, double x) {
  check_x(x);
  return dist.cdf(x);
}

double pdf_max_of(const NormalizedSnrDist& dist, int n, double x) {
  check_n(n);
  check_x(x);
  if (n == 1) return dist.pdf(x);
  return n * dist.pdf(x) * std::pow(dist.cdf(x), n - 1);
}

double cdf_max_of(const NormalizedSnrDist& dist, int n, double x) {
  check_n(n);
  check_x(x);
  return std::pow(dist.cdf(x), n);
}

std::vector<double> sample_frame_snrs(const UserPopulation& pop, const NormalizedSnrDist& dist,
                                      RandomStream& rng) {
  std::vector<double> x(pop.size());
  sample_frame_snrs(dist, rng, x);
  return x;
}

void sample_frame_snrs(const NormalizedSnrDist& dist, RandomStream& rng, std::span<double> out) {
  for (double& x : out) x = dist.sample(rng);
}

}  // namespace mudelay
