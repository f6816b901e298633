#include <cmath>

#include "doctest.h"
#include "mudelay/errors.hpp"
#include "mudelay/optimizer.hpp"
#include "mudelay/random.hpp"

using namespace mudelay;

namespace {

const std::vector<double> kK5Db{10, 11, 12, 13, 14};
const std::vector<double> kK9Db{8, 9, 10, 11, 12, 13, 14, 15, 16};

MmppSource defaults() { return MmppSource::from_bit_rate(0.02, 0.2, 49100.0); }

struct Fixture {
  AmcModeTable table = AmcModeTable::standard();
  PowerLaw law{table, 0.01};
  UserPopulation pop = UserPopulation::from_db(kK5Db);
};

// P_j for the tagged user under Rayleigh: (F(xi_j)^K - F(xi_{j-1})^K) / K
std::vector<double> closed_form_probs(const ThresholdSet& thr, int k) {
  const int m = thr.mode_count();
  std::vector<double> p(m + 1, 0.0);
  p[0] = double(k - 1) / k;
  for (int j = 1; j <= m; ++j) {
    const auto [lo, hi] = thr.region(j);
    const double fhi = std::isinf(hi) ? 1.0 : std::pow(-std::expm1(-hi), k);
    p[j] = (fhi - std::pow(-std::expm1(-lo), k)) / k;
  }
  return p;
}

double exponent_for(const ThresholdSet& thr, const Fixture& f, const MmppSource& src) {
  const int k = static_cast<int>(f.pop.size());
  const auto sd = ServiceDistribution::from_table(f.table, service_probs_full_csi(rayleigh(), thr, k));
  const double s = solve_delay_exponent([&](double v) { return ge_limit_arrival(src, v); },
                                        [&](double v) { return ge_limit_service(sd, 1080, 2e-3, v); });
  return ge_limit_service(sd, 1080, 2e-3, -s);
}

}  // namespace

TEST_CASE("weight schedule") {
  const WeightSchedule w(AmcModeTable::standard(), 2e-4);
  CHECK(w.theta.size() == 8);
  CHECK(w.theta[0] == 1.0);
  for (std::size_t j = 1; j < w.theta.size(); ++j) CHECK(w.theta[j] < w.theta[j - 1]);
}

TEST_CASE("power constant") {
  const Fixture f;
  double expect = 0.0;
  for (double db : kK5Db) expect += std::pow(10.0, -db / 10.0);
  expect /= 5.0;
  CHECK(power_constant(f.pop) == doctest::Approx(expect).epsilon(1e-14));
  CHECK(power_constant(f.pop) == doctest::Approx(0.06649).epsilon(1e-3));
}

TEST_CASE("thresholds are linear in lambda") {
  const Fixture f;
  const auto a = thresholds_from_lagrange(0.02, 2e-4, f.law, f.pop, f.table);
  const auto b = thresholds_from_lagrange(0.04, 2e-4, f.law, f.pop, f.table);
  REQUIRE(a.points().size() == 6);
  for (std::size_t i = 0; i < 6; ++i) CHECK(b.points()[i] == doctest::Approx(2.0 * a.points()[i]).epsilon(1e-12));
  CHECK_THROWS_AS(thresholds_from_lagrange(0.0, 2e-4, f.law, f.pop, f.table), DomainError);
  CHECK_THROWS_AS(thresholds_from_lagrange(0.02, 0.0, f.law, f.pop, f.table), DomainError);
  const UserPopulation single(std::vector<double>{10.0});
  CHECK_THROWS_AS(thresholds_from_lagrange(0.02, 2e-4, f.law, single, f.table), DomainError);
}

TEST_CASE("average power ratio") {
  const auto mode1 = AmcModeTable::standard_modes().front();
  const AmcModeTable one({mode1}, 1080, 2);
  const PowerLaw law1(one, 0.01);
  const UserPopulation two(std::vector<double>{10.0, 10.0});
  const double frullani = std::log(2.0) * 0.2 * law1.d(1);
  CHECK(std::abs(average_power_ratio(ThresholdSet::full_csi({}), law1, two, rayleigh()) - frullani) < 1e-8);
  CHECK(frullani == doctest::Approx(0.13717).epsilon(1e-4));

  // halving every a_m doubles every d_m
  const Fixture f;
  std::vector<AmcMode> halved = AmcModeTable::standard_modes();
  for (auto& m : halved) m.a /= 2.0;
  const AmcModeTable t2(halved, 1080, 2);
  const PowerLaw law2(t2, 0.01);
  const auto thr = ThresholdSet::full_csi({0.045, 0.102, 0.170, 0.542, 1.608, 13.30});
  CHECK(average_power_ratio(thr, law2, f.pop, rayleigh()) ==
        doctest::Approx(2.0 * average_power_ratio(thr, f.law, f.pop, rayleigh())).epsilon(1e-10));

  const UserPopulation single(std::vector<double>{10.0});
  CHECK_THROWS_AS(average_power_ratio(thr, f.law, single, rayleigh()), DomainError);
}

TEST_CASE("average power ratio vs sampled per-frame power") {
  const Fixture f;
  const auto thr = ThresholdSet::full_csi({0.045, 0.102, 0.170, 0.542, 1.608, 13.30});
  const double analytic = average_power_ratio(thr, f.law, f.pop, rayleigh());
  RandomStream rng(17);
  const int n = 10'000'000;
  double sum = 0.0, sq = 0.0;
  double x[5];
  for (int i = 0; i < n; ++i) {
    sample_frame_snrs(rayleigh(), rng, x);
    std::size_t best = 0;
    for (std::size_t u = 1; u < 5; ++u) if (x[u] > x[best]) best = u;
    const double p = power_ratio(f.law, thr.mode_for(x[best]), f.pop.avg_snr(best), x[best]);
    sum += p;
    sq += p * p;
  }
  const double mean = sum / n;
  const double sigma = std::sqrt((sq / n - mean * mean) / n);
  CHECK(std::abs(mean - analytic) < 3.0 * sigma);
}

TEST_CASE("optimizer self-consistency and stationarity") {
  const Fixture f;
  const auto src = defaults();
  const auto r = optimize_full_csi(f.law, f.pop, f.table, src, 2e-3);
  CHECK(std::abs(r.avg_power_ratio - 1.0) < 1e-6);
  CHECK(std::abs(average_power_ratio(r.thresholds, f.law, f.pop, rayleigh()) - 1.0) < 1e-6);
  CHECK(r.exponent < 0.0);
  CHECK(r.s_star > 0.0);
  for (std::size_t i = 1; i < r.thresholds.points().size(); ++i) {
    CHECK(r.thresholds.points()[i] > r.thresholds.points()[i - 1]);
  }
  const auto sd = ServiceDistribution::from_table(f.table, r.service_probs);
  const double la = ge_limit_arrival(src, r.s_star);
  CHECK(std::abs(la + ge_limit_service(sd, 1080, 2e-3, -r.s_star)) < 1e-10 * std::max(1.0, std::abs(la)));

  // dL/dxi_m = 0 for L = sum_j P_j theta_j + lambda * power
  const WeightSchedule w(f.table, r.s_star);
  auto lagrangian = [&](const std::vector<double>& pts) {
    const auto thr = ThresholdSet::full_csi(pts);
    const auto p = closed_form_probs(thr, 5);
    double obj = 0.0;
    for (std::size_t j = 0; j < p.size(); ++j) obj += p[j] * w.theta[j];
    return obj + r.lambda * average_power_ratio(thr, f.law, f.pop, rayleigh());
  };
  const std::vector<double> xi(r.thresholds.points().begin(), r.thresholds.points().end());
  for (std::size_t m = 0; m < xi.size(); ++m) {
    const double h = 1e-4 * xi[m];
    auto up = xi, down = xi;
    up[m] += h;
    down[m] -= h;
    const double grad = (lagrangian(up) - lagrangian(down)) / (2 * h);
    const double scale = pdf_max_of(rayleigh(), 5, xi[m]) / 5.0 * (w.theta[m + 1] - w.theta[m + 2]);
    CHECK(std::abs(grad) < 1e-6 * std::max(scale, 1e-300) + 1e-12);
  }
}

TEST_CASE("optimizer beats random feasible designs") {
  const Fixture f;
  const auto src = defaults();
  const auto best = optimize_full_csi(f.law, f.pop, f.table, src, 2e-3);
  RandomStream rng(31);
  int tried = 0;
  while (tried < 50) {
    std::vector<double> pts;
    double x = 0.0;
    for (int i = 0; i < 6; ++i) pts.push_back(x += 0.05 + rng.uniform());
    const auto base = ThresholdSet::full_csi(pts);
    // scale until the power budget is met with equality
    double lo = -10.0, hi = 10.0;
    auto power = [&](double log_scale) {
      return average_power_ratio(base.scaled(std::exp(log_scale)), f.law, f.pop, rayleigh());
    };
    if (power(lo) < 1.0 || power(hi) > 1.0) continue;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      (power(mid) > 1.0 ? lo : hi) = mid;
    }
    const auto thr = base.scaled(std::exp(0.5 * (lo + hi)));
    CHECK(best.exponent <= exponent_for(thr, f, src) + 1e-9);
    ++tried;
  }
}

TEST_CASE("more average snr never hurts") {
  const Fixture f;
  const auto src = defaults();
  const auto base = optimize_full_csi(f.law, f.pop, f.table, src, 2e-3);
  const auto better = optimize_full_csi(f.law, f.pop.scaled(2.0), f.table, src, 2e-3);
  CHECK(better.exponent <= base.exponent);
}

TEST_CASE("infeasible and unstable designs are reported") {
  const Fixture f;
  // far more traffic than any design can carry
  const auto heavy = MmppSource::from_bit_rate(0.02, 0.2, 5e6);
  CHECK_THROWS_AS(optimize_full_csi(f.law, f.pop, f.table, heavy, 2e-3), UnstableQueueError);
}

TEST_CASE("quantized design") {
  const Fixture f;
  const auto q5 = quantized_thresholds(f.law, f.pop);
  CHECK(q5.points()[0] == doctest::Approx(0.09895).epsilon(1e-3));
  const auto q9 = quantized_thresholds(f.law, UserPopulation::from_db(kK9Db));
  CHECK(q9.points()[0] == doctest::Approx(0.15683).epsilon(1e-3));
  const auto unit = quantized_thresholds(f.law, UserPopulation(std::vector<double>{1.0}));
  for (int m = 1; m <= 7; ++m) CHECK(unit.points()[m - 1] == doctest::Approx(f.law.d(m)));

  // every user meets the target at its worst in-mode SNR
  for (std::size_t i = 0; i < f.pop.size(); ++i) {
    for (int m = 1; m <= 7; ++m) {
      const double worst = f.pop.avg_snr(i) * q5.points()[m - 1];
      CHECK(per_model(f.table.mode(m), worst) <= 0.01 * (1 + 1e-12));
    }
  }
  CHECK(quantized_power_ratio(q5, f.pop, rayleigh()) ==
        doctest::Approx(1.0 - std::pow(rayleigh().cdf(q5.points()[0]), 5)));
}

TEST_CASE("power-adaptive design beats constant power analytically") {
  const Fixture f;
  const auto src = defaults();
  const auto opt = optimize_full_csi(f.law, f.pop, f.table, src, 2e-3);
  const auto q = quantized_thresholds(f.law, f.pop);
  const auto sd_full = ServiceDistribution::from_table(f.table, opt.service_probs);
  const auto sd_q = ServiceDistribution::from_table(f.table, service_probs_quantized(rayleigh(), q, 5));
  const std::vector<double> dmax{0.01, 0.02, 0.03, 0.04, 0.05, 0.06};
  const auto a = analyze_delay(sd_full, src, 2e-3, dmax, 200'000, 1);
  const auto b = analyze_delay(sd_q, src, 2e-3, dmax, 200'000, 1);
  for (std::size_t i = 0; i < dmax.size(); ++i) CHECK(a.p_d[i].second <= b.p_d[i].second);
}
