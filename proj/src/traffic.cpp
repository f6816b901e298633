#include "mudelay/traffic.hpp"

#include <cmath>
#include <limits>

#include "mudelay/errors.hpp"

namespace mudelay {

MmppSource MmppSource::from_bit_rate(double mean_on, double mean_off, double bit_rate,
                                     int packet_bits) {
  MmppSource src{mean_on, mean_off, 0.0, packet_bits};
  src.on_rate = bit_rate * (1.0 + mean_off / mean_on) / packet_bits;
  src.validate();
  return src;
}

void MmppSource::validate() const {
  if (!(mean_on > 0.0) || !(mean_off > 0.0)) {
    throw DomainError("ON and OFF mean periods must be positive");
  }
  if (!(on_rate >= 0.0) || !std::isfinite(on_rate)) {
    throw DomainError("ON-state arrival rate must be non-negative");
  }
  if (packet_bits <= 0) throw DomainError("packet size must be positive");
}

double mean_bit_rate(const MmppSource& src) {
  return src.packet_bits * src.on_rate * src.on_probability();
}

double ge_limit_arrival(const MmppSource& src, double s) {
  const double r = src.on_rate * std::expm1(s * src.packet_bits);
  if (!std::isfinite(r)) return std::numeric_limits<double>::infinity();
  const double alpha = 1.0 / src.mean_on;   // ON -> OFF
  const double beta = 1.0 / src.mean_off;   // OFF -> ON
  const double trace = r - alpha - beta;
  // discriminant trace^2 + 4 r beta, rewritten to be a sum of non-negative terms
  const double shifted = r - alpha + beta;
  const double root = std::sqrt(shifted * shifted + 4.0 * alpha * beta);
  if (trace >= 0.0) return 0.5 * (trace + root);
  return 2.0 * r * beta / (root - trace);
}

MmppGenerator::MmppGenerator(const MmppSource& src, std::uint64_t seed) : src_(src), rng_(seed) {
  src_.validate();
  on_ = rng_.uniform() < src_.on_probability();
  next_switch_ = rng_.exponential(1.0 / (on_ ? src_.mean_on : src_.mean_off));
  next_arrival_ = (on_ && src_.on_rate > 0.0) ? rng_.exponential(src_.on_rate)
                                              : std::numeric_limits<double>::infinity();
}

void MmppGenerator::advance_to(double t_end, std::vector<double>& out) {
  while (clock_ < t_end) {
    if (on_) {
      if (next_arrival_ < next_switch_ && next_arrival_ < t_end) {
        out.push_back(next_arrival_);
        next_arrival_ += rng_.exponential(src_.on_rate);
        continue;
      }
      if (next_switch_ < t_end) {
        on_time_ += next_switch_ - clock_;
        clock_ = next_switch_;
        on_ = false;
        next_switch_ = clock_ + rng_.exponential(1.0 / src_.mean_off);
        continue;
      }
      on_time_ += t_end - clock_;
      clock_ = t_end;
    } else {
      if (next_switch_ < t_end) {
        clock_ = next_switch_;
        on_ = true;
        next_switch_ = clock_ + rng_.exponential(1.0 / src_.mean_on);
        next_arrival_ = src_.on_rate > 0.0 ? clock_ + rng_.exponential(src_.on_rate)
                                           : std::numeric_limits<double>::infinity();
        continue;
      }
      clock_ = t_end;
    }
  }
}

FrameArrivals generate_frame_arrivals(const MmppSource& src, double frame_len, std::int64_t frames,
                                      std::uint64_t seed) {
  if (!(frame_len > 0.0)) throw DomainError("frame length must be positive");
  if (frames < 0) throw DomainError("frame count must be non-negative");
  MmppGenerator gen(src, seed);
  FrameArrivals out;
  out.counts.reserve(static_cast<std::size_t>(frames));
  for (std::int64_t n = 0; n < frames; ++n) {
    const std::size_t before = out.times.size();
    gen.advance_to(static_cast<double>(n + 1) * frame_len, out.times);
    out.counts.push_back(static_cast<int>(out.times.size() - before));
  }
  if (frames > 0) out.on_fraction = gen.on_time() / gen.now();
  return out;
}

}  // namespace mudelay
