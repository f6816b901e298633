#pragma once

#include <cstdint>
#include <vector>

#include "mudelay/random.hpp"

namespace mudelay {

/// Two-state ON-OFF Markov-modulated Poisson source. Sojourn times are exponential with
/// the given means; packets arrive as a Poisson process at `on_rate` while ON.
struct MmppSource {
  double mean_on = 0.0;   // seconds
  double mean_off = 0.0;  // seconds
  double on_rate = 0.0;   // packets/second
  int packet_bits = 1080;

  /// Source with the given mean bit rate; the ON rate is back-solved.
  static MmppSource from_bit_rate(double mean_on, double mean_off, double bit_rate,
                                  int packet_bits = 1080);

  double on_probability() const { return mean_on / (mean_on + mean_off); }
  void validate() const;

  bool operator==(const MmppSource&) const = default;
};

/// Long-run mean rate in bits/second.
double mean_bit_rate(const MmppSource& src);

/// Asymptotic log-MGF of the cumulative bit arrivals (1/second): the Perron root of
/// Q + diag(nu (e^(s N_b) - 1), 0). Returns +inf when e^(s N_b) overflows.
double ge_limit_arrival(const MmppSource& src, double s);

/// Streaming generator of arrival timestamps.
class MmppGenerator {
 public:
  /// Starts at time 0 in a state drawn from the stationary distribution.
  MmppGenerator(const MmppSource& src, std::uint64_t seed);

  /// Appends the arrival times in [now, t_end) to `out` and advances the clock to t_end.
  void advance_to(double t_end, std::vector<double>& out);

  double now() const { return clock_; }
  /// Time spent in the ON state so far.
  double on_time() const { return on_time_; }

 private:
  MmppSource src_;
  RandomStream rng_;
  bool on_;
  double clock_ = 0.0;
  double next_switch_;
  double next_arrival_;
  double on_time_ = 0.0;
};

struct FrameArrivals {
  std::vector<int> counts;        // packets per frame
  std::vector<double> times;      // all arrival timestamps, ascending
  double on_fraction = 0.0;       // fraction of the horizon spent ON
};

FrameArrivals generate_frame_arrivals(const MmppSource& src, double frame_len, std::int64_t frames,
                                      std::uint64_t seed);

}  // namespace mudelay
