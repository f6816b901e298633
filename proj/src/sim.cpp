#include "mudelay/sim.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>

#include "mudelay/errors.hpp"

namespace mudelay {

void SimConfig::validate() const {
  if (horizon_frames <= warmup_frames || warmup_frames < 0) {
    throw DomainError("simulation horizon must exceed the warmup, which must be non-negative");
  }
  if (!(frame_len > 0.0)) throw DomainError("frame length must be positive");
  if (!(d_max >= 0.0)) throw DomainError("delay bound must be non-negative");
  if (!(target_per > 0.0 && target_per < 1.0)) throw DomainError("target PER must lie in (0,1)");
  src.validate();
  const ThresholdVariant expected =
      scheme == Scheme::FullCsi ? ThresholdVariant::FullCsi : ThresholdVariant::Quantized;
  if (thresholds.variant() != expected) {
    throw DomainError("threshold variant does not match the scheduling scheme");
  }
  if (thresholds.mode_count() != table.size()) {
    throw DomainError("threshold count does not match the number of modes");
  }
}

double SimStats::violation_fraction(double d) const {
  const std::int64_t resolved = served + error_lost + deadline_dropped;
  if (resolved == 0) return 0.0;
  const auto late = delays.end() - std::upper_bound(delays.begin(), delays.end(), d);
  return static_cast<double>(deadline_dropped + late) / static_cast<double>(resolved);
}

ScheduleDecision schedule_full_csi(std::span<const double> x, const ThresholdSet& thresholds) {
  if (x.empty()) throw DomainError("scheduling needs at least one user");
  std::size_t best = 0;
  for (std::size_t i = 1; i < x.size(); ++i) {
    if (x[i] > x[best]) best = i;
  }
  return {best, thresholds.mode_for(x[best])};
}

ScheduleDecision schedule_quantized(std::span<const int> indices, RandomStream& rng) {
  if (indices.empty()) throw DomainError("scheduling needs at least one user");
  const int top = *std::max_element(indices.begin(), indices.end());
  if (top <= 0) return {std::nullopt, 0};
  const auto ties = static_cast<std::size_t>(std::count(indices.begin(), indices.end(), top));
  std::size_t pick = ties > 1 ? rng.index(ties) : 0;
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] == top && pick-- == 0) return {i, top};
  }
  return {std::nullopt, 0};  // unreachable
}

namespace {

double percentile(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return 0.0;
  const auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(sorted.size())));
  return sorted[std::clamp<std::size_t>(rank, 1, sorted.size()) - 1];
}

}  // namespace

SimStats run(const SimConfig& config) {
  config.validate();
  const NormalizedSnrDist& dist = config.dist ? *config.dist : rayleigh();
  const std::size_t users = config.pop.size();
  const int modes = config.table.size();
  const bool full_csi = config.scheme == Scheme::FullCsi;
  const PowerLaw law(config.table, config.target_per);

  RandomStream channel(derive_seed(config.seed, 0));
  RandomStream tie_break(derive_seed(config.seed, 1));
  RandomStream errors(derive_seed(config.seed, 2));
  std::vector<MmppGenerator> sources;
  for (std::size_t i = 0; i < users; ++i) {
    sources.emplace_back(config.src, derive_seed(config.seed, 100 + i));
  }
  std::vector<std::deque<double>> queues(users);

  SimStats stats;
  stats.d_max = config.d_max;
  stats.mode_frames.assign(static_cast<std::size_t>(modes) + 1, 0);
  stats.mode_packets.assign(static_cast<std::size_t>(modes) + 1, 0);
  stats.mode_errors.assign(static_cast<std::size_t>(modes) + 1, 0);

  const double warmup_time = static_cast<double>(config.warmup_frames) * config.frame_len;
  std::vector<double> x(users);
  std::vector<int> index(users);
  std::vector<double> fresh;
  double power_sum = 0.0;

  for (std::int64_t n = 0; n < config.horizon_frames; ++n) {
    const double t = static_cast<double>(n) * config.frame_len;
    const bool counting = n >= config.warmup_frames;

    for (std::size_t i = 0; i < users; ++i) {
      auto& q = queues[i];
      while (!q.empty() && t - q.front() > config.d_max) {
        if (i == 0 && q.front() >= warmup_time) ++stats.deadline_dropped;
        q.pop_front();
      }
    }

    sample_frame_snrs(dist, channel, x);
    ScheduleDecision decision;
    double power = 0.0;
    if (full_csi) {
      decision = schedule_full_csi(x, config.thresholds);
      const std::size_t i = *decision.user;
      power = power_ratio(law, decision.mode, config.pop.avg_snr(i), x[i]);
    } else {
      for (std::size_t i = 0; i < users; ++i) index[i] = config.thresholds.mode_for(x[i]);
      decision = schedule_quantized(index, tie_break);
      power = decision.user ? 1.0 : 0.0;
    }

    const bool tagged = decision.user && *decision.user == 0;
    if (counting) {
      power_sum += power;
      ++stats.mode_frames[tagged ? static_cast<std::size_t>(decision.mode) : 0];
    }

    if (decision.user && !queues[*decision.user].empty()) {
      const std::size_t i = *decision.user;
      const int m = decision.mode;
      const AmcMode& mode = config.table.mode(m);
      // post-adaptation SNR: d_m under power control, the raw SNR under constant power
      const double snr = full_csi ? law.d(m) : config.pop.avg_snr(i) * x[i];
      const double per = per_model(mode, snr);
      auto& q = queues[i];
      for (int k = config.table.packets_per_frame(m); k > 0 && !q.empty(); --k) {
        const double arrival = q.front();
        q.pop_front();
        const bool lost = errors.bernoulli(per);
        if (i != 0 || arrival < warmup_time) continue;
        stats.delays.push_back(t - arrival);
        ++stats.mode_packets[static_cast<std::size_t>(m)];
        if (lost) {
          ++stats.error_lost;
          ++stats.mode_errors[static_cast<std::size_t>(m)];
        } else {
          ++stats.served;
        }
      }
    }

    for (std::size_t i = 0; i < users; ++i) {
      fresh.clear();
      sources[i].advance_to(t + config.frame_len, fresh);
      for (double a : fresh) {
        queues[i].push_back(a);
        if (i == 0 && a >= warmup_time) ++stats.arrived;
      }
    }
  }

  stats.frames = config.horizon_frames - config.warmup_frames;
  stats.still_queued = std::count_if(queues[0].begin(), queues[0].end(),
                                     [&](double a) { return a >= warmup_time; });
  stats.mode_frequencies.resize(stats.mode_frames.size());
  for (std::size_t j = 0; j < stats.mode_frames.size(); ++j) {
    stats.mode_frequencies[j] =
        static_cast<double>(stats.mode_frames[j]) / static_cast<double>(stats.frames);
  }
  stats.avg_power_ratio = power_sum / static_cast<double>(stats.frames);
  const std::int64_t transmitted = stats.served + stats.error_lost;
  stats.measured_per =
      transmitted > 0 ? static_cast<double>(stats.error_lost) / static_cast<double>(transmitted)
                      : 0.0;
  std::sort(stats.delays.begin(), stats.delays.end());
  stats.measured_p_d = stats.violation_fraction(config.d_max);
  if (!stats.delays.empty()) {
    stats.mean_delay = std::accumulate(stats.delays.begin(), stats.delays.end(), 0.0) /
                       static_cast<double>(stats.delays.size());
  }
  stats.delay_p50 = percentile(stats.delays, 0.50);
  stats.delay_p95 = percentile(stats.delays, 0.95);
  stats.delay_p99 = percentile(stats.delays, 0.99);
  return stats;
}

}  // namespace mudelay
