#include <cmath>

#include "doctest.h"
#include "mudelay/errors.hpp"
#include "mudelay/optimizer.hpp"
#include "mudelay/sim.hpp"

using namespace mudelay;

namespace {

const std::vector<double> kK5Db{10, 11, 12, 13, 14};
const std::vector<double> kK9Db{8, 9, 10, 11, 12, 13, 14, 15, 16};

SimConfig config_for(const std::vector<double>& db, Scheme scheme, std::int64_t frames) {
  SimConfig c;
  c.pop = UserPopulation::from_db(db);
  c.table = AmcModeTable::standard();
  c.scheme = scheme;
  c.src = MmppSource::from_bit_rate(0.02, 0.2, 49100.0);
  const PowerLaw law(c.table, c.target_per);
  c.thresholds = scheme == Scheme::FullCsi
                     ? optimize_full_csi(law, c.pop, c.table, c.src, c.frame_len).thresholds
                     : quantized_thresholds(law, c.pop);
  c.horizon_frames = frames;
  c.warmup_frames = 10'000;
  return c;
}

bool within_3sigma(double freq, double p, double n) {
  return std::abs(freq - p) <= 3.0 * std::sqrt(p * (1.0 - p) / n) + 1e-12;
}

}  // namespace

TEST_CASE("full-CSI scheduler") {
  const auto thr = ThresholdSet::full_csi({0.5, 1.0});
  const std::vector<double> x{0.2, 1.5, 0.9};
  const auto d = schedule_full_csi(x, thr);
  CHECK(d.user == 1u);
  CHECK(d.mode == 3);
  const std::vector<double> low{0.1, 0.3};
  CHECK(schedule_full_csi(low, thr).mode == 1);
  const std::vector<double> tie{0.7, 0.7};
  CHECK(schedule_full_csi(tie, thr).user == 0u);
}

TEST_CASE("quantized scheduler") {
  RandomStream rng(1);
  const std::vector<int> outage{0, 0, 0};
  const auto d = schedule_quantized(outage, rng);
  CHECK(!d.user);
  CHECK(d.mode == 0);

  const std::vector<int> ties{3, 3, 1};
  const int n = 200'000;
  int first = 0;
  for (int i = 0; i < n; ++i) {
    const auto s = schedule_quantized(ties, rng);
    REQUIRE(s.user);
    CHECK(*s.user < 2u);
    CHECK(s.mode == 3);
    if (*s.user == 0) ++first;
  }
  CHECK(within_3sigma(double(first) / n, 0.5, n));
}

TEST_CASE("simulated service frequencies match the closed forms") {
  for (Scheme scheme : {Scheme::FullCsi, Scheme::Quantized}) {
    auto c = config_for(kK5Db, scheme, 1'000'000);
    const auto stats = run(c);
    const auto p = scheme == Scheme::FullCsi
                       ? service_probs_full_csi(rayleigh(), c.thresholds, 5)
                       : service_probs_quantized(rayleigh(), c.thresholds, 5);
    const double n = static_cast<double>(stats.frames);
    double total = 0.0;
    for (std::size_t j = 0; j < p.size(); ++j) {
      CHECK(within_3sigma(stats.mode_frequencies[j], p[j], n));
      total += stats.mode_frequencies[j];
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    if (scheme == Scheme::FullCsi) CHECK(within_3sigma(1.0 - stats.mode_frequencies[0], 0.2, n));
  }
}

TEST_CASE("conservation, PER and reproducibility") {
  for (Scheme scheme : {Scheme::FullCsi, Scheme::Quantized}) {
    auto c = config_for(kK5Db, scheme, 300'000);
    const auto a = run(c);
    const auto b = run(c);
    CHECK(a.arrived == a.served + a.error_lost + a.deadline_dropped + a.still_queued);
    CHECK(a.arrived > 0);
    CHECK(a.delays == b.delays);
    CHECK(a.measured_p_d == b.measured_p_d);
    CHECK(a.avg_power_ratio == b.avg_power_ratio);

    const double tx = static_cast<double>(a.served + a.error_lost);
    const double sigma = std::sqrt(0.01 * 0.99 / tx);
    if (scheme == Scheme::FullCsi) {
      CHECK(std::abs(a.measured_per - 0.01) < 3.0 * sigma);
    } else {
      for (std::size_t m = 1; m < a.mode_packets.size(); ++m) {
        if (a.mode_packets[m] == 0) continue;
        const double n = static_cast<double>(a.mode_packets[m]);
        const double per = static_cast<double>(a.mode_errors[m]) / n;
        CHECK(per <= 0.01 + 3.0 * std::sqrt(0.01 * 0.99 / n));
      }
    }

    double prev = 1.0;
    for (double d = 0.0; d <= c.d_max + 1e-12; d += c.frame_len) {
      const double v = a.violation_fraction(d);
      CHECK(v <= prev);
      prev = v;
    }
    c.seed = 2;
    CHECK(run(c).delays != a.delays);
  }
}

TEST_CASE("no traffic") {
  auto c = config_for(kK5Db, Scheme::FullCsi, 50'000);
  c.src.on_rate = 0.0;
  const auto s = run(c);
  CHECK(s.measured_p_d == 0.0);
  CHECK(s.arrived == 0);
  CHECK(s.served == 0);
  CHECK(s.error_lost == 0);
  CHECK(s.deadline_dropped == 0);
  CHECK(s.still_queued == 0);
}

TEST_CASE("power and user-set comparisons") {
  const auto k5 = run(config_for(kK5Db, Scheme::FullCsi, 1'000'000));
  const auto k9 = run(config_for(kK9Db, Scheme::FullCsi, 1'000'000));
  CHECK(std::abs(k5.avg_power_ratio - 1.0) < 0.02);
  CHECK(k9.measured_p_d > k5.measured_p_d);
}

TEST_CASE("config validation") {
  auto c = config_for(kK5Db, Scheme::FullCsi, 20'000);
  c.warmup_frames = c.horizon_frames;
  CHECK_THROWS_AS(run(c), DomainError);
  c = config_for(kK5Db, Scheme::FullCsi, 20'000);
  c.thresholds = ThresholdSet::quantized({1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0});
  CHECK_THROWS_AS(run(c), DomainError);
  c = config_for(kK5Db, Scheme::Quantized, 20'000);
  c.thresholds = ThresholdSet::quantized({1.0, 2.0});
  CHECK_THROWS_AS(run(c), DomainError);
}
