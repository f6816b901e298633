#include "mudelay/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mudelay/errors.hpp"
#include "mudelay/quadrature.hpp"

namespace mudelay {

WeightSchedule::WeightSchedule(const AmcModeTable& table, double s) {
  for (int c : table.service_rates()) theta.push_back(std::exp(-s * table.packet_bits() * c));
}

double power_constant(const UserPopulation& pop) {
  return pop.inverse_snr_sum() / static_cast<double>(pop.size());
}

namespace {

void check_multiuser(const UserPopulation& pop) {
  if (pop.size() < 2) {
    throw DomainError("power-adaptive full-CSI design requires at least 2 users");
  }
}

/// log of xi_m / lambda for m = 1..M-1.
std::vector<double> log_threshold_slopes(double s, const PowerLaw& law, const UserPopulation& pop,
                                         const AmcModeTable& table) {
  if (!(s > 0.0)) throw DomainError("exponent parameter s must be positive");
  if (law.size() != table.size()) throw DomainError("power law and mode table disagree");
  const double scale = s * table.packet_bits();
  // K C_p = sum_i 1/avg_snr_i
  const double log_kcp = std::log(pop.inverse_snr_sum());
  std::vector<double> out;
  for (int m = 1; m < table.size(); ++m) {
    const int c = table.packets_per_frame(m);
    const int dc = table.packets_per_frame(m + 1) - c;
    // theta_m - theta_{m+1} = exp(-scale c) (1 - exp(-scale dc))
    const double log_gap = -scale * c + std::log(-std::expm1(-scale * dc));
    out.push_back(log_kcp + std::log(law.d(m + 1) - law.d(m)) - log_gap);
  }
  return out;
}

ThresholdSet thresholds_from_slopes(double log_lambda, const std::vector<double>& slopes) {
  std::vector<double> points;
  points.reserve(slopes.size());
  for (double v : slopes) points.push_back(std::exp(log_lambda + v));
  for (std::size_t i = 0; i < points.size(); ++i) {
    const bool ordered = i == 0 || points[i] > points[i - 1];
    if (!(points[i] > 0.0) || !std::isfinite(points[i]) || !ordered) {
      std::ostringstream msg;
      msg << "design infeasible at log(lambda) = " << log_lambda
          << ": Lagrangian thresholds are not strictly increasing and finite";
      throw InfeasibleError(msg.str());
    }
  }
  return ThresholdSet::full_csi(std::move(points));
}

}  // namespace

ThresholdSet thresholds_from_lagrange(double lambda, double s, const PowerLaw& law,
                                      const UserPopulation& pop, const AmcModeTable& table) {
  check_multiuser(pop);
  if (!(lambda > 0.0)) throw DomainError("Lagrange multiplier must be positive");
  return thresholds_from_slopes(std::log(lambda), log_threshold_slopes(s, law, pop, table));
}

double average_power_ratio(const ThresholdSet& thresholds, const PowerLaw& law,
                           const UserPopulation& pop, const NormalizedSnrDist& dist) {
  check_multiuser(pop);
  if (thresholds.variant() != ThresholdVariant::FullCsi) {
    throw DomainError("power adaptation is defined for full-CSI thresholds");
  }
  if (thresholds.mode_count() != law.size()) {
    throw DomainError("threshold count does not match the number of modes");
  }
  const int users = static_cast<int>(pop.size());
  const double x_hi = dist.upper_limit();
  auto integrand = [&](double x) { return pdf_max_of(dist, users, x) / x; };
  double total = 0.0;
  for (int m = 1; m <= law.size(); ++m) {
    const auto [lo, hi] = thresholds.region(m);
    const double a = std::min(lo, x_hi), b = std::min(hi, x_hi);
    if (b > a) total += law.d(m) * integrate(integrand, a, b);
  }
  return power_constant(pop) * total;
}

double solve_lagrange_multiplier(double s, const PowerLaw& law, const UserPopulation& pop,
                                 const AmcModeTable& table, const NormalizedSnrDist& dist) {
  check_multiuser(pop);
  const std::vector<double> slopes = log_threshold_slopes(s, law, pop, table);
  if (slopes.empty()) {
    throw InfeasibleError("a single-mode table leaves no threshold to meet the power constraint");
  }
  const double log_x_hi = std::log(dist.upper_limit());
  auto excess = [&](double log_lambda) {
    return average_power_ratio(thresholds_from_slopes(log_lambda, slopes), law, pop, dist) - 1.0;
  };
  // power decreases as lambda grows (thresholds move up, cheaper modes)
  double lo = -slopes.front();  // xi_1 = 1
  double hi = lo;
  while (!(excess(lo) > 0.0)) {
    if (lo + slopes.back() < std::log(1e-12)) {
      throw InfeasibleError("average power constraint cannot be met: even the top mode stays "
                            "below the power budget");
    }
    lo -= 2.0;
  }
  while (!(excess(hi) < 0.0)) {
    if (hi + slopes.front() > log_x_hi) {
      throw InfeasibleError("average power constraint cannot be met: mode 1 alone exceeds the "
                            "power budget");
    }
    hi += 2.0;
  }
  for (int iter = 0; iter < 200; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double e = excess(mid);
    if (e == 0.0) return std::exp(mid);
    (e > 0.0 ? lo : hi) = mid;
  }
  const double e_lo = std::abs(excess(lo)), e_hi = std::abs(excess(hi));
  const double best = e_lo < e_hi ? lo : hi;
  if (std::min(e_lo, e_hi) > 1e-8) {
    throw NumericError("Lagrange multiplier bisection did not meet the power tolerance");
  }
  return std::exp(best);
}

OptimizerResult optimize_full_csi(const PowerLaw& law, const UserPopulation& pop,
                                  const AmcModeTable& table, const MmppSource& src,
                                  double frame_len, const NormalizedSnrDist& dist) {
  check_multiuser(pop);
  src.validate();
  if (!(frame_len > 0.0)) throw DomainError("frame length must be positive");
  const int users = static_cast<int>(pop.size());

  auto design_at = [&](double s) {
    const double lambda = solve_lagrange_multiplier(s, law, pop, table, dist);
    ThresholdSet thr = thresholds_from_lagrange(lambda, s, law, pop, table);
    ServiceDistribution sd =
        ServiceDistribution::from_table(table, service_probs_full_csi(dist, thr, users));
    return std::make_tuple(lambda, std::move(thr), std::move(sd));
  };
  auto optimized_service = [&](double minus_s) {
    const double s = -minus_s;
    if (!(s > 0.0)) throw DomainError("optimized service log-MGF is defined for negative arguments");
    const auto [lambda, thr, sd] = design_at(s);
    (void)lambda;
    return ge_limit_service(sd, table.packet_bits(), frame_len, minus_s);
  };
  const double s_star = solve_delay_exponent(
      [&](double s) { return ge_limit_arrival(src, s); }, optimized_service);
  auto [lambda, thr, sd] = design_at(s_star);
  OptimizerResult result{thr, lambda, s_star, average_power_ratio(thr, law, pop, dist),
                         ge_limit_service(sd, table.packet_bits(), frame_len, -s_star), sd.probs};
  return result;
}

ThresholdSet quantized_thresholds(const PowerLaw& law, const UserPopulation& pop) {
  const double worst = pop.min_avg_snr();
  std::vector<double> points;
  for (double d : law.d_constants()) points.push_back(d / worst);
  return ThresholdSet::quantized(std::move(points));
}

double quantized_power_ratio(const ThresholdSet& thresholds, const UserPopulation& pop,
                             const NormalizedSnrDist& dist) {
  if (thresholds.variant() != ThresholdVariant::Quantized) {
    throw DomainError("constant-power ratio needs quantized thresholds");
  }
  return 1.0 - std::pow(dist.cdf(thresholds.points().front()), static_cast<int>(pop.size()));
}

}  // namespace mudelay
