#include <cmath>
#include <numeric>

#include "doctest.h"
#include "mudelay/analyzer.hpp"
#include "mudelay/errors.hpp"
#include "mudelay/random.hpp"

using namespace mudelay;

namespace {

const std::vector<double> kTableSized{0.045, 0.102, 0.170, 0.542, 1.608, 13.30};

double total(const std::vector<double>& p) { return std::accumulate(p.begin(), p.end(), 0.0); }

std::vector<double> random_points(RandomStream& rng, int n) {
  std::vector<double> pts;
  double x = 0.0;
  for (int i = 0; i < n; ++i) {
    x += 0.01 + 1.5 * rng.uniform();
    pts.push_back(x);
  }
  return pts;
}

MmppSource defaults() { return MmppSource::from_bit_rate(0.02, 0.2, 49100.0); }

}  // namespace

TEST_CASE("threshold sets") {
  const auto f = ThresholdSet::full_csi({0.5, 1.0});
  CHECK(f.mode_count() == 3);
  CHECK(f.mode_for(0.1) == 1);
  CHECK(f.mode_for(0.5) == 2);
  CHECK(f.mode_for(50.0) == 3);
  const auto q = ThresholdSet::quantized({0.5, 1.0});
  CHECK(q.mode_count() == 2);
  CHECK(q.mode_for(0.1) == 0);
  CHECK(q.mode_for(0.7) == 1);
  CHECK(q.mode_for(3.0) == 2);
  CHECK(q.region(0).first == 0.0);
  CHECK(std::isinf(q.region(2).second));
  CHECK(f.scaled(2.0).points()[1] == 2.0);
  CHECK_THROWS_AS(ThresholdSet::full_csi({1.0, 0.5}), DomainError);
  CHECK_THROWS_AS(ThresholdSet::full_csi({0.5, 0.5}), DomainError);
  CHECK_THROWS_AS(ThresholdSet::full_csi({-0.5, 0.5}), DomainError);
  CHECK_THROWS_AS(ThresholdSet::quantized({}), DomainError);
}

TEST_CASE("full-csi service probabilities closed forms") {
  const auto p = service_probs_full_csi(rayleigh(), ThresholdSet::full_csi(kTableSized), 5);
  CHECK(p.size() == 8);
  CHECK(std::abs(p[0] - 0.8) < 1e-8);
  CHECK(std::abs(total(p) - 1.0) < 1e-9);

  const auto single = service_probs_full_csi(rayleigh(), ThresholdSet::full_csi({}), 3);
  REQUIRE(single.size() == 2);
  CHECK(single[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-9));
  CHECK_THROWS_AS(service_probs_full_csi(rayleigh(), ThresholdSet::full_csi(kTableSized), 1),
                  DomainError);
  CHECK_THROWS_AS(service_probs_full_csi(rayleigh(), ThresholdSet::quantized(kTableSized), 3),
                  DomainError);
}

TEST_CASE("quantized service probabilities closed forms") {
  const auto p = service_probs_quantized(rayleigh(), ThresholdSet::quantized({0.5}), 2);
  const double f = 1.0 - std::exp(-0.5);
  CHECK(p[1] == doctest::Approx(0.5 * (1.0 - f * f)).epsilon(1e-12));
  CHECK(p[1] == doctest::Approx(0.42259).epsilon(1e-4));

  const std::vector<double> pts{0.2, 0.7, 1.1, 3.0};
  const auto one = service_probs_quantized(rayleigh(), ThresholdSet::quantized(pts), 1);
  CHECK(one[0] == doctest::Approx(rayleigh().cdf(0.2)).epsilon(1e-14));
  for (std::size_t j = 1; j < pts.size(); ++j) {
    CHECK(one[j] == doctest::Approx(rayleigh().cdf(pts[j]) - rayleigh().cdf(pts[j - 1])).epsilon(1e-12));
  }
  CHECK(one.back() == doctest::Approx(std::exp(-3.0)).epsilon(1e-12));
}

TEST_CASE("random threshold sets keep probabilities normalized") {
  RandomStream rng(2024);
  for (int trial = 0; trial < 100; ++trial) {
    const auto pts = random_points(rng, 6);
    const int kq = 1 + static_cast<int>(rng.index(9));
    const auto q = service_probs_quantized(rayleigh(), ThresholdSet::quantized(pts), kq);
    CHECK(std::abs(total(q) - 1.0) < 1e-9);
    const double served = total(q) - q[0];
    CHECK(served == doctest::Approx((1.0 - std::pow(rayleigh().cdf(pts[0]), kq)) / kq).epsilon(1e-12));

    const int kf = 2 + static_cast<int>(rng.index(8));
    const auto f = service_probs_full_csi(rayleigh(), ThresholdSet::full_csi(pts), kf);
    CHECK(std::abs(total(f) - 1.0) < 1e-9);
    CHECK(std::abs(f[0] - double(kf - 1) / kf) < 1e-8);
    for (double v : f) CHECK(v >= 0.0);
  }
}

TEST_CASE("full-csi service probabilities vs two-dimensional monte carlo") {
  // tagged user is the maximum and falls in mode j
  const int users = 5;
  const auto thr = ThresholdSet::full_csi({0.3, 0.9, 2.0});
  const auto p = service_probs_full_csi(rayleigh(), thr, users);
  RandomStream rng(99);
  const int n = 10'000'000;
  std::vector<double> hits(p.size(), 0.0);
  for (int i = 0; i < n; ++i) {
    const double x1 = rayleigh().sample(rng);
    // max of K-1 exponentials via inverse cdf
    const double other = -std::log1p(-std::pow(rng.uniform(), 1.0 / (users - 1)));
    if (x1 >= other) hits[thr.mode_for(x1)] += 1.0;
  }
  for (std::size_t j = 1; j < p.size(); ++j) {
    const double sigma = std::sqrt(p[j] * (1 - p[j]) / n);
    CHECK(std::abs(hits[j] / n - p[j]) < 3.0 * sigma + 1e-12);
  }
}

TEST_CASE("service log-mgf") {
  const auto table = AmcModeTable::standard();
  const auto sd = ServiceDistribution::from_table(
      table, service_probs_full_csi(rayleigh(), ThresholdSet::full_csi(kTableSized), 5));
  // the density is truncated at cdf = 1 - 1e-12, so the mass is short by about K * 1e-12
  CHECK(std::abs(ge_limit_service(sd, 1080, 2e-3, 0.0) * 2e-3) < 1e-10);
  const double h = 1e-9;
  const double slope =
      (ge_limit_service(sd, 1080, 2e-3, h) - ge_limit_service(sd, 1080, 2e-3, -h)) / (2 * h);
  const double mean = 1080 / 2e-3 * sd.mean_rate();
  CHECK(std::abs(slope - mean) / mean < 1e-6);

  ServiceDistribution det{{0, 4}, {0.0, 1.0}};
  CHECK(ge_limit_service(det, 1080, 2e-3, 1e-3) == doctest::Approx(1e-3 * 1080 * 4 / 2e-3));

  // negative and decreasing for s > 0
  double prev = 0.0;
  for (int i = 1; i <= 100; ++i) {
    const double v = ge_limit_service(sd, 1080, 2e-3, -1e-5 * i);
    CHECK(v < 0.0);
    CHECK(v < prev);
    prev = v;
  }
  // extreme arguments stay finite
  CHECK(std::isfinite(ge_limit_service(sd, 1080, 2e-3, -50.0)));
  CHECK_THROWS_AS((ServiceDistribution{{0, 2}, {0.5, 0.6}}.validate()), DomainError);
  CHECK_THROWS_AS((ServiceDistribution{{1, 2}, {0.5, 0.5}}.validate()), DomainError);
}

TEST_CASE("delay exponent root") {
  const double nu = std::log(4.0 / 3.0);
  auto arrival = [nu](double s) { return nu * std::expm1(s); };
  auto service = [](double s) { return std::log(0.5 + 0.5 * std::exp(s)); };
  const double s = solve_delay_exponent(arrival, service);
  CHECK(std::abs(s - std::log(2.0)) < 1e-8);
  CHECK(std::abs(arrival(s) + service(-s)) < 1e-10);

  // dense grid scan brackets the same root
  double grid_root = 0.0;
  const int pts = 100'000;
  const double hi = 5.0;
  for (int i = 1; i < pts; ++i) {
    const double a = hi * i / pts, b = hi * (i + 1) / pts;
    if ((arrival(a) + service(-a)) * (arrival(b) + service(-b)) <= 0.0) {
      grid_root = a;
      break;
    }
  }
  CHECK(std::abs(s - grid_root) <= hi / pts);

  auto overload = [](double s) { return 2.0 * std::expm1(s); };
  CHECK_THROWS_AS(solve_delay_exponent(overload, service), UnstableQueueError);
}

TEST_CASE("positive-delay estimate") {
  const auto table = AmcModeTable::standard();
  const auto sd = ServiceDistribution::from_table(
      table, service_probs_full_csi(rayleigh(), ThresholdSet::full_csi(kTableSized), 5));
  MmppSource silent{0.02, 0.2, 0.0, 1080};
  CHECK(prob_positive_delay(sd, silent, 2e-3, 20'000, 1).probability == 0.0);

  ServiceDistribution never{{0, 2}, {1.0, 0.0}};
  const auto always = prob_positive_delay(never, defaults(), 2e-3, 20'000, 1);
  CHECK(always.probability == doctest::Approx(1.0));

  CHECK_THROWS_AS(prob_positive_delay(sd, defaults(), 2e-3, 5000, 1), DomainError);

  std::vector<double> est;
  for (std::uint64_t seed = 1; seed <= 8; ++seed) {
    est.push_back(prob_positive_delay(sd, defaults(), 2e-3, 200'000, seed).probability);
  }
  const double mean = total(est) / est.size();
  double ss = 0.0;
  for (double e : est) ss += (e - mean) * (e - mean);
  CHECK(std::sqrt(ss / (est.size() - 1)) < 0.02);

  const auto backlog = prob_positive_delay(sd, defaults(), 2e-3, 50'000, 3,
                                           PositiveDelayEstimator::FrameBacklog);
  CHECK(backlog.probability > 0.0);
  CHECK(backlog.probability < 1.0);
}

TEST_CASE("violation probability and report") {
  CHECK(delay_violation_prob(0.3, -50.0, 0.0) == 0.3);
  const double a = delay_violation_prob(0.3, -50.0, 0.02);
  const double b = delay_violation_prob(0.3, -50.0, 0.04);
  CHECK(b / 0.3 == doctest::Approx((a / 0.3) * (a / 0.3)));
  CHECK_THROWS_AS(delay_violation_prob(0.3, -50.0, -1.0), DomainError);

  const auto table = AmcModeTable::standard();
  const auto sd = ServiceDistribution::from_table(
      table, service_probs_full_csi(rayleigh(), ThresholdSet::full_csi(kTableSized), 5));
  const std::vector<double> dmax{0.0, 0.01, 0.03, 0.06};
  const auto r = analyze_delay(sd, defaults(), 2e-3, dmax, 20'000, 5);
  CHECK(r.exponent < 0.0);
  CHECK(r.p_d.front().second == doctest::Approx(r.prob_positive_delay));
  for (std::size_t i = 1; i < r.p_d.size(); ++i) CHECK(r.p_d[i].second <= r.p_d[i - 1].second);
}
