#include "mudelay/analyzer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "mudelay/errors.hpp"
#include "mudelay/quadrature.hpp"

namespace mudelay {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_points(const std::vector<double>& points) {
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!(points[i] > 0.0) || !std::isfinite(points[i])) {
      throw DomainError("threshold points must be positive and finite");
    }
    if (i > 0 && !(points[i] > points[i - 1])) {
      throw DomainError("threshold points must be strictly increasing");
    }
  }
}

}  // namespace

ThresholdSet::ThresholdSet(ThresholdVariant variant, std::vector<double> points)
    : variant_(variant), points_(std::move(points)) {
  check_points(points_);
}

ThresholdSet ThresholdSet::full_csi(std::vector<double> points) {
  return ThresholdSet(ThresholdVariant::FullCsi, std::move(points));
}

ThresholdSet ThresholdSet::quantized(std::vector<double> points) {
  if (points.empty()) throw DomainError("quantized thresholds need at least one point");
  return ThresholdSet(ThresholdVariant::Quantized, std::move(points));
}

int ThresholdSet::mode_count() const {
  const int n = static_cast<int>(points_.size());
  return variant_ == ThresholdVariant::FullCsi ? n + 1 : n;
}

std::pair<double, double> ThresholdSet::region(int m) const {
  const int n = static_cast<int>(points_.size());
  // boundary k of the extended sequence 0, points..., inf
  auto boundary = [&](int k) {
    if (k <= 0) return 0.0;
    if (k > n) return kInf;
    return points_[static_cast<std::size_t>(k - 1)];
  };
  if (variant_ == ThresholdVariant::FullCsi) {
    if (m < 1 || m > n + 1) throw DomainError("mode index out of range");
    return {boundary(m - 1), boundary(m)};
  }
  if (m < 0 || m > n) throw DomainError("mode index out of range");
  return {boundary(m), boundary(m + 1)};
}

int ThresholdSet::mode_for(double x) const {
  const auto above = std::upper_bound(points_.begin(), points_.end(), x) - points_.begin();
  return static_cast<int>(above) + (variant_ == ThresholdVariant::FullCsi ? 1 : 0);
}

ThresholdSet ThresholdSet::scaled(double factor) const {
  std::vector<double> out(points_);
  for (double& p : out) p *= factor;
  return ThresholdSet(variant_, std::move(out));
}

ServiceDistribution ServiceDistribution::from_table(const AmcModeTable& table,
                                                    std::vector<double> probs) {
  ServiceDistribution sd{table.service_rates(), std::move(probs)};
  sd.validate();
  return sd;
}

void ServiceDistribution::validate() const {
  if (rates.empty() || rates.size() != probs.size()) {
    throw DomainError("service rates and probabilities must have equal, nonzero length");
  }
  if (rates.front() != 0) throw DomainError("service rate c_0 must be zero");
  for (std::size_t j = 2; j < rates.size(); ++j) {
    if (rates[j] <= rates[j - 1]) throw DomainError("service rates must be strictly increasing");
  }
  double total = 0.0;
  for (double p : probs) {
    if (!(p >= -1e-12 && p <= 1.0 + 1e-12)) throw DomainError("probabilities must lie in [0,1]");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    std::ostringstream msg;
    msg << "service probabilities sum to " << total << ", not 1";
    throw DomainError(msg.str());
  }
}

double ServiceDistribution::mean_rate() const {
  double mean = 0.0;
  for (std::size_t j = 0; j < rates.size(); ++j) mean += probs[j] * rates[j];
  return mean;
}

std::vector<double> service_probs_full_csi(const NormalizedSnrDist& dist,
                                           const ThresholdSet& thresholds, int users) {
  if (thresholds.variant() != ThresholdVariant::FullCsi) {
    throw DomainError("full-CSI service probabilities need full-CSI thresholds");
  }
  if (users < 2) throw DomainError("full-CSI scheduling analysis needs at least 2 users");
  const int modes = thresholds.mode_count();
  const double x_hi = dist.upper_limit();
  const int others = users - 1;
  auto f_other = [&](double x) { return pdf_max_of(dist, others, x); };
  auto cdf = [&](double x) { return std::isinf(x) ? 1.0 : dist.cdf(x); };

  std::vector<double> probs(static_cast<std::size_t>(modes) + 1);
  // tagged user loses to the best of the others
  probs[0] = integrate([&](double x) { return f_other(x) * dist.cdf(x); }, 0.0, x_hi);
  for (int j = 1; j <= modes; ++j) {
    const auto [lo, hi] = thresholds.region(j);
    const double lo_c = std::min(lo, x_hi);
    const double hi_c = std::min(hi, x_hi);
    const double f_hi = cdf(hi);
    const double others_below = integrate(f_other, 0.0, lo_c);
    const double straddle =
        integrate([&](double x) { return f_other(x) * (f_hi - dist.cdf(x)); }, lo_c, hi_c);
    probs[static_cast<std::size_t>(j)] = (f_hi - cdf(lo)) * others_below + straddle;
  }
  return probs;
}

std::vector<double> service_probs_quantized(const NormalizedSnrDist& dist,
                                            const ThresholdSet& thresholds, int users) {
  if (thresholds.variant() != ThresholdVariant::Quantized) {
    throw DomainError("quantized service probabilities need quantized thresholds");
  }
  if (users < 1) throw DomainError("at least one user is required");
  const int modes = thresholds.mode_count();
  const double k = users;
  auto cdf_max = [&](double x) { return std::isinf(x) ? 1.0 : std::pow(dist.cdf(x), users); };
  std::vector<double> probs(static_cast<std::size_t>(modes) + 1);
  for (int j = 1; j <= modes; ++j) {
    const auto [lo, hi] = thresholds.region(j);
    probs[static_cast<std::size_t>(j)] = (cdf_max(hi) - cdf_max(lo)) / k;
  }
  probs[0] = 1.0 - (1.0 - cdf_max(thresholds.points().front())) / k;
  return probs;
}

double ge_limit_service(const ServiceDistribution& sd, int packet_bits, double frame_len,
                        double s) {
  if (!(frame_len > 0.0)) throw DomainError("frame length must be positive");
  double peak = -kInf;
  for (std::size_t j = 0; j < sd.rates.size(); ++j) {
    if (sd.probs[j] > 0.0) {
      peak = std::max(peak, std::log(sd.probs[j]) + s * packet_bits * sd.rates[j]);
    }
  }
  if (!std::isfinite(peak)) return peak;
  double sum = 0.0;
  for (std::size_t j = 0; j < sd.rates.size(); ++j) {
    if (sd.probs[j] > 0.0) {
      sum += std::exp(std::log(sd.probs[j]) + s * packet_bits * sd.rates[j] - peak);
    }
  }
  return (peak + std::log(sum)) / frame_len;
}

double solve_delay_exponent(const std::function<double(double)>& arrival,
                            const std::function<double(double)>& service) {
  auto residual = [&](double s) { return arrival(s) + service(-s); };
  double lo = 1e-9;
  const double f_lo = residual(lo);
  if (std::isnan(f_lo)) throw NumericError("delay-exponent residual is NaN at the lower bracket");
  if (!(f_lo < 0.0)) {
    throw UnstableQueueError(
        "unstable or degenerate queue: mean arrival rate is not below mean service rate");
  }
  double hi = 1e-6;
  double f_hi = residual(hi);
  while (!(f_hi > 0.0)) {
    if (std::isnan(f_hi)) throw NumericError("delay-exponent residual is NaN");
    if (f_hi == 0.0) return hi;
    lo = hi;
    hi *= 2.0;
    if (hi > 1e6) throw UnstableQueueError("unstable or degenerate queue: no sign change found");
    f_hi = residual(hi);
  }
  // invariant: residual(lo) < 0 < residual(hi)
  double best = lo;
  double best_abs = kInf;
  for (int iter = 0; iter < 400; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double f_mid = residual(mid);
    if (std::isnan(f_mid)) throw NumericError("delay-exponent residual is NaN");
    if (std::abs(f_mid) < best_abs) {
      best_abs = std::abs(f_mid);
      best = mid;
    }
    if (f_mid == 0.0) break;
    (f_mid < 0.0 ? lo : hi) = mid;
  }
  const double tol = 1e-10 * std::max(1.0, std::abs(arrival(best)));
  if (!(best_abs < tol)) {
    std::ostringstream msg;
    msg << "delay-exponent bisection stalled at s = " << best << " with residual " << best_abs;
    throw NumericError(msg.str());
  }
  return best;
}

PositiveDelayEstimate prob_positive_delay(const ServiceDistribution& sd, const MmppSource& src,
                                          double frame_len, std::int64_t pilot_frames,
                                          std::uint64_t seed, PositiveDelayEstimator estimator) {
  if (pilot_frames < kMinPilotFrames) {
    throw DomainError("pilot simulation needs at least 10^4 frames");
  }
  if (!(frame_len > 0.0)) throw DomainError("frame length must be positive");
  sd.validate();
  const std::size_t classes = sd.rates.size();
  std::vector<double> cumulative(classes);
  std::partial_sum(sd.probs.begin(), sd.probs.end(), cumulative.begin());

  MmppGenerator arrivals(src, derive_seed(seed, 0));
  RandomStream rng(derive_seed(seed, 1));
  // per class: observations and how many of them saw a positive delay
  std::vector<std::int64_t> seen(classes, 0), delayed(classes, 0);
  const std::int64_t warmup = pilot_frames / 100;
  std::int64_t carried = 0;  // left over after the previous frame's service
  std::int64_t fresh = 0;    // arrived during the previous frame
  std::vector<double> times;
  for (std::int64_t n = 0; n < warmup + pilot_frames; ++n) {
    const double u = rng.uniform() * cumulative.back();
    std::size_t j = static_cast<std::size_t>(
        std::upper_bound(cumulative.begin(), cumulative.end(), u) - cumulative.begin());
    j = std::min(j, classes - 1);
    const std::int64_t backlog = carried + fresh;
    const std::int64_t capacity = sd.rates[j];
    if (n >= warmup) {
      if (estimator == PositiveDelayEstimator::FirstOpportunity) {
        seen[j] += fresh;
        delayed[j] += std::clamp<std::int64_t>(backlog - capacity, 0, fresh);
      } else {
        ++seen[j];
        if (backlog > 0) ++delayed[j];
      }
    }
    carried = std::max<std::int64_t>(0, backlog - capacity);
    times.clear();
    arrivals.advance_to(static_cast<double>(n + 1) * frame_len, times);
    fresh = static_cast<std::int64_t>(times.size());
  }

  PositiveDelayEstimate est;
  const auto total_seen = std::accumulate(seen.begin(), seen.end(), std::int64_t{0});
  const auto total_delayed = std::accumulate(delayed.begin(), delayed.end(), std::int64_t{0});
  est.pooled = total_seen > 0 ? static_cast<double>(total_delayed) / static_cast<double>(total_seen)
                              : 0.0;
  est.samples = seen;
  est.conditional.resize(classes);
  est.fallback.resize(classes);
  for (std::size_t j = 0; j < classes; ++j) {
    if (seen[j] >= kMinClassSamples) {
      est.conditional[j] = static_cast<double>(delayed[j]) / static_cast<double>(seen[j]);
    } else {
      est.conditional[j] = est.pooled;
      est.fallback[j] = true;
    }
    est.probability += sd.probs[j] * est.conditional[j];
  }
  return est;
}

double delay_violation_prob(double prob_positive_delay, double exponent, double d_max) {
  if (d_max < 0.0) throw DomainError("delay bound must be non-negative");
  if (prob_positive_delay == 0.0) return 0.0;
  return prob_positive_delay * std::exp(exponent * d_max);
}

DelayReport analyze_delay(const ServiceDistribution& sd, const MmppSource& src, double frame_len,
                          std::span<const double> d_max, std::int64_t pilot_frames,
                          std::uint64_t seed, PositiveDelayEstimator estimator) {
  sd.validate();
  src.validate();
  DelayReport report;
  const int bits = src.packet_bits;
  auto service = [&](double s) { return ge_limit_service(sd, bits, frame_len, s); };
  if (src.on_rate == 0.0) {
    // no traffic: the queue is always empty
    report.s_star = kInf;
    report.exponent = sd.probs.front() > 0.0 ? std::log(sd.probs.front()) / frame_len : -kInf;
    report.fallback.assign(sd.rates.size(), false);
  } else {
    report.s_star = solve_delay_exponent([&](double s) { return ge_limit_arrival(src, s); },
                                         service);
    report.exponent = service(-report.s_star);
    const PositiveDelayEstimate est = prob_positive_delay(sd, src, frame_len, pilot_frames, seed, estimator);
    report.prob_positive_delay = est.probability;
    report.fallback = est.fallback;
  }
  for (double d : d_max) {
    report.p_d.emplace_back(d, delay_violation_prob(report.prob_positive_delay, report.exponent, d));
  }
  return report;
}

}  // namespace mudelay
