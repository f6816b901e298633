#include "mudelay/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include <yaml-cpp/yaml.h>

#include "mudelay/errors.hpp"

namespace mudelay {

const char* sweep_axis_name(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::DMaxMs: return "d_max_ms";
    case SweepAxis::TOnFrames: return "t_on_frames";
    case SweepAxis::RateKbps: return "rate_kbps";
  }
  return "?";
}

namespace {

std::optional<SweepAxis> parse_axis(const std::string& name) {
  for (SweepAxis a : {SweepAxis::DMaxMs, SweepAxis::TOnFrames, SweepAxis::RateKbps}) {
    if (name == sweep_axis_name(a)) return a;
  }
  return std::nullopt;
}

const char* scheme_name(Scheme scheme) {
  return scheme == Scheme::FullCsi ? "full_csi" : "quantized";
}

const char* estimator_name(PositiveDelayEstimator e) {
  return e == PositiveDelayEstimator::FirstOpportunity ? "first_opportunity" : "frame_backlog";
}

// --- YAML reading ----------------------------------------------------------

class SpecReader {
 public:
  explicit SpecReader(std::string origin) : origin_(std::move(origin)) {}

  [[noreturn]] void fail(const YAML::Node& node, const std::string& msg) const {
    const YAML::Mark mark = node.Mark();
    std::ostringstream out;
    out << origin_;
    if (!mark.is_null()) out << ":" << mark.line + 1 << ":" << mark.column + 1;
    out << ": " << msg;
    throw SpecError(out.str());
  }

  void require_map(const YAML::Node& node, const std::string& section) const {
    if (!node.IsMap()) fail(node, "'" + section + "' must be a mapping");
  }

  void check_keys(const YAML::Node& map, const std::set<std::string>& allowed,
                  const std::string& section) const {
    for (const auto& kv : map) {
      const auto key = kv.first.as<std::string>();
      if (!allowed.count(key)) fail(kv.first, "unknown key '" + key + "' in " + section);
    }
  }

  /// At most one of `keys` may be present; returns it.
  std::optional<std::string> one_of(const YAML::Node& map, std::initializer_list<const char*> keys,
                                    const std::string& what) const {
    std::optional<std::string> found;
    for (const char* k : keys) {
      if (map[k]) {
        if (found) fail(map[k], "conflicting keys '" + *found + "' and '" + k + "' for " + what);
        found = k;
      }
    }
    return found;
  }

  template <class T>
  T get(const YAML::Node& node, const std::string& what) const {
    if (!node.IsScalar()) fail(node, "'" + what + "' must be a scalar");
    try {
      return node.as<T>();
    } catch (const YAML::Exception&) {
      fail(node, "invalid value for '" + what + "'");
    }
  }

  std::vector<double> get_list(const YAML::Node& node, const std::string& what) const {
    if (!node.IsSequence()) fail(node, "'" + what + "' must be a list");
    std::vector<double> out;
    for (const auto& item : node) out.push_back(get<double>(item, what));
    return out;
  }

  /// Time value given with an _s, _ms or _frames suffix.
  std::optional<double> time(const YAML::Node& map, const std::string& base, double frame_len) const {
    const auto key = one_of(map, {(base + "_s").c_str(), (base + "_ms").c_str(),
                                  (base + "_frames").c_str()},
                            base);
    if (!key) return std::nullopt;
    const double v = get<double>(map[*key], *key);
    if (!(v > 0.0) || !std::isfinite(v)) fail(map[*key], "'" + *key + "' must be positive");
    if (key->ends_with("_frames")) return v * frame_len;
    if (key->ends_with("_ms")) return v / 1000.0;
    return v;
  }

 private:
  std::string origin_;
};

// rethrows the active exception with a context prefix, keeping its category
[[noreturn]] void rethrow_with_context(const std::string& context) {
  try {
    throw;
  } catch (const UnstableQueueError& e) {
    throw UnstableQueueError(context + ": " + e.what());
  } catch (const InfeasibleError& e) {
    throw InfeasibleError(context + ": " + e.what());
  } catch (const NumericError& e) {
    throw NumericError(context + ": " + e.what());
  } catch (const DomainError& e) {
    throw DomainError(context + ": " + e.what());
  } catch (const SpecError& e) {
    throw SpecError(context + ": " + e.what());
  } catch (const std::exception& e) {
    throw std::runtime_error(context + ": " + e.what());
  }
}

std::string point_context(const ExperimentSpec& spec, SweepAxis axis, double value) {
  std::ostringstream out;
  out << "scenario '" << spec.scenario << "' at " << sweep_axis_name(axis) << " = " << value;
  return out.str();
}

/// Runs fn(0..n-1) on a worker pool; returns the exception of each failed index.
template <class Fn>
std::vector<std::exception_ptr> parallel_for(std::size_t n, Fn&& fn) {
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t workers =
      std::min<std::size_t>(n, std::max(1u, std::thread::hardware_concurrency()));
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  return errors;
}

}  // namespace

// --- spec -------------------------------------------------------------------

Sweep ExperimentSpec::resolved_sweep() const {
  if (sweep) return *sweep;
  return Sweep{SweepAxis::DMaxMs, {d_max * 1000.0}};
}

ExperimentSpec ExperimentSpec::at_point(SweepAxis axis, double value) const {
  ExperimentSpec out = *this;
  switch (axis) {
    case SweepAxis::DMaxMs:
      out.d_max = value / 1000.0;
      break;
    case SweepAxis::TOnFrames: {
      // T_OFF follows T_ON so the mean rate and the ON rate stay fixed
      const double ratio = traffic.mean_off / traffic.mean_on;
      out.traffic.mean_on = value * frame_len;
      out.traffic.mean_off = ratio * out.traffic.mean_on;
      break;
    }
    case SweepAxis::RateKbps:
      out.traffic.on_rate =
          value * 1000.0 * (1.0 + traffic.mean_off / traffic.mean_on) / traffic.packet_bits;
      break;
  }
  out.sweep.reset();
  return out;
}

void ExperimentSpec::validate() const {
  if (scenario.empty()) throw SpecError("scenario name must not be empty");
  for (char c : scenario) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.')) {
      throw SpecError("scenario name may only contain letters, digits, '_', '-' and '.'");
    }
  }
  try {
    const AmcModeTable t = table();
    const PowerLaw law(t, target_per);
    (void)law;
    if (scheme == Scheme::FullCsi && users.size() < 2) {
      throw DomainError("the full-CSI power-adaptive scheme needs at least 2 users");
    }
    if (thresholds) {
      const ThresholdSet set = scheme == Scheme::FullCsi ? ThresholdSet::full_csi(*thresholds)
                                                         : ThresholdSet::quantized(*thresholds);
      if (set.mode_count() != t.size()) {
        throw DomainError("threshold count does not match the number of modes");
      }
    }
    if (traffic.packet_bits != packet_bits) {
      throw DomainError("traffic packet size differs from the PHY packet size");
    }
    traffic.validate();
  } catch (const DomainError& e) {
    throw SpecError(e.what());
  }
  if (!(frame_len > 0.0)) throw SpecError("frame length must be positive");
  if (!(d_max >= 0.0)) throw SpecError("delay bound must be non-negative");
  if (warmup_frames < 0 || horizon_frames <= warmup_frames) {
    throw SpecError("horizon_frames must exceed warmup_frames >= 0");
  }
  if (replications < 1) throw SpecError("replications must be at least 1");
  if (analysis.delay_exponent && !analysis.service_probs) {
    throw SpecError("delay_exponent analysis requires service_probs");
  }
  if (analysis.p_d && !analysis.delay_exponent) {
    throw SpecError("p_d analysis requires delay_exponent");
  }
  if (analysis.pilot_frames < kMinPilotFrames) {
    throw SpecError("pilot_frames must be at least 10000");
  }
  if (sweep) {
    if (sweep->values.empty()) throw SpecError("sweep values must not be empty");
    for (double v : sweep->values) {
      // a zero delay bound is meaningful; zero T_ON or rate is not
      const bool ok = sweep->axis == SweepAxis::DMaxMs ? v >= 0.0 : v > 0.0;
      if (!ok || !std::isfinite(v)) throw SpecError("sweep values out of range");
    }
  }
}

ExperimentSpec parse_spec(const std::string& text, const std::string& origin) {
  SpecReader r(origin);
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    std::ostringstream msg;
    msg << origin << ":" << e.mark.line + 1 << ":" << e.mark.column + 1 << ": " << e.msg;
    throw SpecError(msg.str());
  }
  if (!root.IsMap()) r.fail(root, "experiment spec must be a mapping");
  r.check_keys(root,
               {"scenario", "scheme", "users", "phy", "thresholds", "traffic", "frame_s",
                "frame_ms", "d_max_s", "d_max_ms", "simulation", "analysis", "sweep"},
               "spec");

  ExperimentSpec spec;
  if (!root["scenario"]) r.fail(root, "missing required key 'scenario'");
  spec.scenario = r.get<std::string>(root["scenario"], "scenario");

  if (const auto node = root["scheme"]) {
    const auto name = r.get<std::string>(node, "scheme");
    if (name == "full_csi") {
      spec.scheme = Scheme::FullCsi;
    } else if (name == "quantized") {
      spec.scheme = Scheme::Quantized;
    } else {
      r.fail(node, "scheme must be 'full_csi' or 'quantized'");
    }
  }

  if (const auto key = r.one_of(root, {"frame_s", "frame_ms"}, "frame length")) {
    const double v = r.get<double>(root[*key], *key);
    if (!(v > 0.0)) r.fail(root[*key], "frame length must be positive");
    spec.frame_len = *key == "frame_ms" ? v / 1000.0 : v;
  }
  if (const auto key = r.one_of(root, {"d_max_s", "d_max_ms"}, "delay bound")) {
    const double v = r.get<double>(root[*key], *key);
    if (!(v >= 0.0)) r.fail(root[*key], "delay bound must be non-negative");
    spec.d_max = *key == "d_max_ms" ? v / 1000.0 : v;
  }

  const YAML::Node users = root["users"];
  if (!users) r.fail(root, "missing required key 'users'");
  r.require_map(users, "users");
  r.check_keys(users, {"avg_snr_db", "avg_snr"}, "users");
  const auto snr_key = r.one_of(users, {"avg_snr_db", "avg_snr"}, "user SNRs");
  if (!snr_key) r.fail(users, "users need 'avg_snr_db' or 'avg_snr'");
  const auto snr = r.get_list(users[*snr_key], *snr_key);
  try {
    spec.users = *snr_key == "avg_snr_db" ? UserPopulation::from_db(snr) : UserPopulation(snr);
  } catch (const DomainError& e) {
    r.fail(users[*snr_key], e.what());
  }

  if (const auto phy = root["phy"]) {
    r.require_map(phy, "phy");
    r.check_keys(phy, {"target_per", "slots", "packet_bits", "modes"}, "phy");
    if (phy["target_per"]) spec.target_per = r.get<double>(phy["target_per"], "target_per");
    if (phy["slots"]) spec.slots = r.get<int>(phy["slots"], "slots");
    if (phy["packet_bits"]) spec.packet_bits = r.get<int>(phy["packet_bits"], "packet_bits");
    if (const auto modes = phy["modes"]) {
      if (!modes.IsSequence() || modes.size() == 0) r.fail(modes, "'modes' must be a non-empty list");
      spec.modes.clear();
      for (const auto& m : modes) {
        r.require_map(m, "modes entry");
        r.check_keys(m, {"rate", "a", "g"}, "modes entry");
        if (!m["rate"] || !m["a"] || !m["g"]) r.fail(m, "each mode needs 'rate', 'a' and 'g'");
        spec.modes.push_back({r.get<double>(m["rate"], "rate"), r.get<double>(m["a"], "a"),
                              r.get<double>(m["g"], "g")});
      }
    }
    try {
      (void)spec.table();
    } catch (const DomainError& e) {
      r.fail(phy, e.what());
    }
  }

  if (const auto thr = root["thresholds"]) {
    spec.thresholds = r.get_list(thr, "thresholds");
    try {
      if (spec.scheme == Scheme::FullCsi) {
        (void)ThresholdSet::full_csi(*spec.thresholds);
      } else {
        (void)ThresholdSet::quantized(*spec.thresholds);
      }
    } catch (const DomainError& e) {
      r.fail(thr, e.what());
    }
  }

  spec.traffic.packet_bits = spec.packet_bits;
  spec.traffic.mean_on = 10.0 * spec.frame_len;
  spec.traffic.mean_off = 10.0 * spec.traffic.mean_on;
  double rate_kbps = 49.1;
  std::optional<double> on_rate;
  if (const auto traffic = root["traffic"]) {
    r.require_map(traffic, "traffic");
    r.check_keys(traffic,
                 {"mean_on_s", "mean_on_ms", "mean_on_frames", "mean_off_s", "mean_off_ms",
                  "mean_off_frames", "on_rate_pps", "rate_kbps"},
                 "traffic");
    if (const auto on = r.time(traffic, "mean_on", spec.frame_len)) {
      spec.traffic.mean_on = *on;
      spec.traffic.mean_off = 10.0 * *on;
    }
    if (const auto off = r.time(traffic, "mean_off", spec.frame_len)) spec.traffic.mean_off = *off;
    if (const auto key = r.one_of(traffic, {"on_rate_pps", "rate_kbps"}, "traffic rate")) {
      const double v = r.get<double>(traffic[*key], *key);
      if (!(v >= 0.0)) r.fail(traffic[*key], "traffic rate must be non-negative");
      if (*key == "on_rate_pps") {
        on_rate = v;
      } else {
        rate_kbps = v;
      }
    }
  }
  spec.traffic.on_rate = on_rate ? *on_rate
                                 : rate_kbps * 1000.0 *
                                       (1.0 + spec.traffic.mean_off / spec.traffic.mean_on) /
                                       spec.packet_bits;

  if (const auto sim = root["simulation"]) {
    r.require_map(sim, "simulation");
    r.check_keys(sim, {"horizon_frames", "warmup_frames", "replications", "seed"}, "simulation");
    if (sim["horizon_frames"]) {
      spec.horizon_frames = r.get<std::int64_t>(sim["horizon_frames"], "horizon_frames");
    }
    if (sim["warmup_frames"]) {
      spec.warmup_frames = r.get<std::int64_t>(sim["warmup_frames"], "warmup_frames");
    }
    if (sim["replications"]) spec.replications = r.get<int>(sim["replications"], "replications");
    if (sim["seed"]) spec.seed = r.get<std::uint64_t>(sim["seed"], "seed");
  }

  if (const auto an = root["analysis"]) {
    r.require_map(an, "analysis");
    r.check_keys(an,
                 {"service_probs", "delay_exponent", "p_d", "pilot_frames", "pos_delay_estimator"},
                 "analysis");
    if (an["service_probs"]) spec.analysis.service_probs = r.get<bool>(an["service_probs"], "service_probs");
    if (an["delay_exponent"]) spec.analysis.delay_exponent = r.get<bool>(an["delay_exponent"], "delay_exponent");
    if (an["p_d"]) spec.analysis.p_d = r.get<bool>(an["p_d"], "p_d");
    if (an["pilot_frames"]) spec.analysis.pilot_frames = r.get<std::int64_t>(an["pilot_frames"], "pilot_frames");
    if (const auto est = an["pos_delay_estimator"]) {
      const auto name = r.get<std::string>(est, "pos_delay_estimator");
      if (name == "first_opportunity") {
        spec.analysis.estimator = PositiveDelayEstimator::FirstOpportunity;
      } else if (name == "frame_backlog") {
        spec.analysis.estimator = PositiveDelayEstimator::FrameBacklog;
      } else {
        r.fail(est, "pos_delay_estimator must be 'first_opportunity' or 'frame_backlog'");
      }
    }
  }

  if (const auto sw = root["sweep"]) {
    r.require_map(sw, "sweep");
    r.check_keys(sw, {"name", "values"}, "sweep");
    if (!sw["name"] || !sw["values"]) r.fail(sw, "sweep needs 'name' and 'values'");
    const auto axis = parse_axis(r.get<std::string>(sw["name"], "name"));
    if (!axis) r.fail(sw["name"], "sweep name must be d_max_ms, t_on_frames or rate_kbps");
    Sweep sweep{*axis, r.get_list(sw["values"], "values")};
    if (sweep.values.empty()) r.fail(sw["values"], "sweep values must not be empty");
    spec.sweep = std::move(sweep);
  }

  try {
    spec.validate();
  } catch (const SpecError& e) {
    throw SpecError(origin + ": " + e.what());
  }
  return spec;
}

ExperimentSpec load_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SpecError(path.string() + ": cannot open spec file");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_spec(text.str(), path.string());
}

std::string serialize_spec(const ExperimentSpec& spec) {
  YAML::Emitter out;
  out.SetDoublePrecision(17);
  out << YAML::BeginMap;
  out << YAML::Key << "scenario" << YAML::Value << spec.scenario;
  out << YAML::Key << "scheme" << YAML::Value << scheme_name(spec.scheme);
  out << YAML::Key << "users" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "avg_snr" << YAML::Value << YAML::Flow << YAML::BeginSeq;
  for (double g : spec.users.avg_snr()) out << g;
  out << YAML::EndSeq << YAML::EndMap;
  out << YAML::Key << "phy" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "target_per" << YAML::Value << spec.target_per;
  out << YAML::Key << "slots" << YAML::Value << spec.slots;
  out << YAML::Key << "packet_bits" << YAML::Value << spec.packet_bits;
  out << YAML::Key << "modes" << YAML::Value << YAML::BeginSeq;
  for (const AmcMode& m : spec.modes) {
    out << YAML::Flow << YAML::BeginMap << YAML::Key << "rate" << YAML::Value << m.rate
        << YAML::Key << "a" << YAML::Value << m.a << YAML::Key << "g" << YAML::Value << m.g
        << YAML::EndMap;
  }
  out << YAML::EndSeq << YAML::EndMap;
  if (spec.thresholds) {
    out << YAML::Key << "thresholds" << YAML::Value << YAML::Flow << YAML::BeginSeq;
    for (double p : *spec.thresholds) out << p;
    out << YAML::EndSeq;
  }
  out << YAML::Key << "traffic" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "mean_on_s" << YAML::Value << spec.traffic.mean_on;
  out << YAML::Key << "mean_off_s" << YAML::Value << spec.traffic.mean_off;
  out << YAML::Key << "on_rate_pps" << YAML::Value << spec.traffic.on_rate;
  out << YAML::EndMap;
  out << YAML::Key << "frame_s" << YAML::Value << spec.frame_len;
  out << YAML::Key << "d_max_s" << YAML::Value << spec.d_max;
  out << YAML::Key << "simulation" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "horizon_frames" << YAML::Value << spec.horizon_frames;
  out << YAML::Key << "warmup_frames" << YAML::Value << spec.warmup_frames;
  out << YAML::Key << "replications" << YAML::Value << spec.replications;
  out << YAML::Key << "seed" << YAML::Value << spec.seed;
  out << YAML::EndMap;
  out << YAML::Key << "analysis" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "service_probs" << YAML::Value << spec.analysis.service_probs;
  out << YAML::Key << "delay_exponent" << YAML::Value << spec.analysis.delay_exponent;
  out << YAML::Key << "p_d" << YAML::Value << spec.analysis.p_d;
  out << YAML::Key << "pilot_frames" << YAML::Value << spec.analysis.pilot_frames;
  out << YAML::Key << "pos_delay_estimator" << YAML::Value
      << estimator_name(spec.analysis.estimator);
  out << YAML::EndMap;
  if (spec.sweep) {
    out << YAML::Key << "sweep" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "name" << YAML::Value << sweep_axis_name(spec.sweep->axis);
    out << YAML::Key << "values" << YAML::Value << YAML::Flow << YAML::BeginSeq;
    for (double v : spec.sweep->values) out << v;
    out << YAML::EndSeq << YAML::EndMap;
  }
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

// --- commands ---------------------------------------------------------------

Design design_thresholds(const ExperimentSpec& spec) {
  const AmcModeTable table = spec.table();
  const PowerLaw law(table, spec.target_per);
  Design design;
  if (spec.thresholds) {
    design.thresholds = spec.scheme == Scheme::FullCsi ? ThresholdSet::full_csi(*spec.thresholds)
                                                       : ThresholdSet::quantized(*spec.thresholds);
    return design;
  }
  if (spec.scheme == Scheme::Quantized) {
    design.thresholds = quantized_thresholds(law, spec.users);
    return design;
  }
  const OptimizerResult opt =
      optimize_full_csi(law, spec.users, table, spec.traffic, spec.frame_len);
  design.thresholds = opt.thresholds;
  design.lambda = opt.lambda;
  design.s_star = opt.s_star;
  design.exponent = opt.exponent;
  return design;
}

namespace {

struct Point {
  ExperimentSpec spec;
  double value;
};

std::vector<Point> sweep_points(const ExperimentSpec& spec, SweepAxis& axis) {
  const Sweep sweep = spec.resolved_sweep();
  if (sweep.values.empty()) throw SpecError("sweep values must not be empty");
  axis = sweep.axis;
  std::vector<Point> points;
  for (double v : sweep.values) points.push_back({spec.at_point(sweep.axis, v), v});
  return points;
}

ResultRow empty_row(const ExperimentSpec& spec, SweepAxis axis, double value) {
  ResultRow row;
  row.scenario = spec.scenario;
  row.sweep_name = sweep_axis_name(axis);
  row.sweep_value = value;
  return row;
}

/// Designs per point; the d_max axis does not change the design, so it is shared.
std::vector<Design> point_designs(const std::vector<Point>& points, SweepAxis axis,
                                  std::vector<std::exception_ptr>& errors) {
  std::vector<Design> designs(points.size());
  errors.assign(points.size(), nullptr);
  if (axis == SweepAxis::DMaxMs && !points.empty()) {
    try {
      const Design shared = design_thresholds(points.front().spec);
      std::fill(designs.begin(), designs.end(), shared);
    } catch (...) {
      std::fill(errors.begin(), errors.end(), std::current_exception());
    }
    return designs;
  }
  errors = parallel_for(points.size(),
                        [&](std::size_t i) { designs[i] = design_thresholds(points[i].spec); });
  return designs;
}

void analyze_into(ResultRow& row, const ExperimentSpec& spec, const Design& design) {
  const AmcModeTable table = spec.table();
  const int users = static_cast<int>(spec.users.size());
  row.details.thresholds.assign(design.thresholds.points().begin(),
                                design.thresholds.points().end());
  row.details.lambda = design.lambda;
  if (spec.scheme == Scheme::FullCsi) {
    row.avg_power_ratio = average_power_ratio(design.thresholds, PowerLaw(table, spec.target_per),
                                              spec.users, rayleigh());
  } else {
    row.avg_power_ratio = quantized_power_ratio(design.thresholds, spec.users, rayleigh());
  }
  if (!spec.analysis.service_probs) return;
  std::vector<double> probs = spec.scheme == Scheme::FullCsi
                                  ? service_probs_full_csi(rayleigh(), design.thresholds, users)
                                  : service_probs_quantized(rayleigh(), design.thresholds, users);
  row.details.service_probs = probs;
  const ServiceDistribution sd = ServiceDistribution::from_table(table, std::move(probs));
  if (!spec.analysis.delay_exponent) return;
  if (spec.analysis.p_d) {
    const double d_max[] = {spec.d_max};
    const DelayReport report = analyze_delay(sd, spec.traffic, spec.frame_len, d_max,
                                             spec.analysis.pilot_frames, spec.seed,
                                             spec.analysis.estimator);
    if (std::isfinite(report.s_star)) row.s_star = report.s_star;
    row.exponent = report.exponent;
    row.details.prob_positive_delay = report.prob_positive_delay;
    row.p_d_analysis = report.p_d.front().second;
    row.seeds.push_back(spec.seed);
  } else {
    auto service = [&](double s) {
      return ge_limit_service(sd, spec.packet_bits, spec.frame_len, s);
    };
    row.s_star = solve_delay_exponent(
        [&](double s) { return ge_limit_arrival(spec.traffic, s); }, service);
    row.exponent = service(-*row.s_star);
  }
}

SimConfig sim_config(const ExperimentSpec& spec, const Design& design, std::uint64_t seed) {
  SimConfig config;
  config.pop = spec.users;
  config.table = spec.table();
  config.target_per = spec.target_per;
  config.thresholds = design.thresholds;
  config.scheme = spec.scheme;
  config.src = spec.traffic;
  config.frame_len = spec.frame_len;
  config.d_max = spec.d_max;
  config.horizon_frames = spec.horizon_frames;
  config.warmup_frames = spec.warmup_frames;
  config.seed = seed;
  return config;
}

void aggregate_into(ResultRow& row, const std::vector<SimStats>& reps,
                    const std::vector<std::uint64_t>& seeds) {
  const double n = static_cast<double>(reps.size());
  double sum = 0.0, power = 0.0, delay = 0.0;
  std::int64_t errors = 0, transmitted = 0;
  RowDetails& d = row.details;
  d.replicate_p_d.clear();
  for (const SimStats& s : reps) {
    sum += s.measured_p_d;
    power += s.avg_power_ratio;
    delay += s.mean_delay;
    errors += s.error_lost;
    transmitted += s.served + s.error_lost;
    d.replicate_p_d.push_back(s.measured_p_d);
    d.arrived += s.arrived;
    d.served += s.served;
    d.error_lost += s.error_lost;
    d.deadline_dropped += s.deadline_dropped;
    d.still_queued += s.still_queued;
  }
  const double mean = sum / n;
  row.p_d_sim = mean;
  if (reps.size() >= 2) {
    double ss = 0.0;
    for (const SimStats& s : reps) ss += (s.measured_p_d - mean) * (s.measured_p_d - mean);
    row.p_d_sim_ci95 = 1.96 * std::sqrt(ss / (n - 1.0) / n);
  }
  row.avg_power_ratio = power / n;
  row.measured_per =
      transmitted > 0 ? static_cast<double>(errors) / static_cast<double>(transmitted) : 0.0;
  d.mean_delay = delay / n;
  row.seeds.insert(row.seeds.end(), seeds.begin(), seeds.end());
}

/// Runs every (point, replication) pair on the worker pool.
std::vector<std::exception_ptr> simulate_points(const std::vector<Point>& points,
                                                const std::vector<Design>& designs,
                                                const std::vector<std::exception_ptr>& design_errors,
                                                std::vector<ResultRow>& rows) {
  const std::size_t reps = static_cast<std::size_t>(points.front().spec.replications);
  std::vector<std::vector<SimStats>> stats(points.size(), std::vector<SimStats>(reps));
  std::vector<std::uint64_t> seeds;
  for (std::size_t r = 0; r < reps; ++r) seeds.push_back(points.front().spec.seed + r);
  auto task_errors = parallel_for(points.size() * reps, [&](std::size_t k) {
    const std::size_t i = k / reps, r = k % reps;
    if (design_errors[i]) return;
    stats[i][r] = run(sim_config(points[i].spec, designs[i], seeds[r]));
  });
  std::vector<std::exception_ptr> errors(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    errors[i] = design_errors[i];
    for (std::size_t r = 0; r < reps && !errors[i]; ++r) errors[i] = task_errors[i * reps + r];
    if (!errors[i]) {
      aggregate_into(rows[i], stats[i], seeds);
      rows[i].details.thresholds.assign(designs[i].thresholds.points().begin(),
                                        designs[i].thresholds.points().end());
      rows[i].details.lambda = designs[i].lambda;
    }
  }
  return errors;
}

std::string describe(const std::exception_ptr& error) {
  try {
    std::rethrow_exception(error);
  } catch (const std::exception& e) {
    return e.what();
  } catch (...) {
    return "unknown error";
  }
}

[[noreturn]] void raise_for_point(const std::exception_ptr& error, const ExperimentSpec& spec,
                                  SweepAxis axis, double value) {
  try {
    std::rethrow_exception(error);
  } catch (...) {
    rethrow_with_context(point_context(spec, axis, value));
  }
}

}  // namespace

std::vector<ResultRow> cmd_analyze(const ExperimentSpec& spec) {
  spec.validate();
  SweepAxis axis;
  const auto points = sweep_points(spec, axis);
  std::vector<std::exception_ptr> design_errors;
  const auto designs = point_designs(points, axis, design_errors);
  std::vector<ResultRow> rows;
  for (std::size_t i = 0; i < points.size(); ++i) rows.push_back(empty_row(spec, axis, points[i].value));
  auto errors = parallel_for(points.size(), [&](std::size_t i) {
    if (design_errors[i]) std::rethrow_exception(design_errors[i]);
    analyze_into(rows[i], points[i].spec, designs[i]);
  });
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (errors[i]) raise_for_point(errors[i], spec, axis, points[i].value);
  }
  return rows;
}

std::vector<ResultRow> cmd_simulate(const ExperimentSpec& spec) {
  spec.validate();
  SweepAxis axis;
  const auto points = sweep_points(spec, axis);
  std::vector<std::exception_ptr> design_errors;
  const auto designs = point_designs(points, axis, design_errors);
  std::vector<ResultRow> rows;
  for (std::size_t i = 0; i < points.size(); ++i) rows.push_back(empty_row(spec, axis, points[i].value));
  const auto errors = simulate_points(points, designs, design_errors, rows);
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (errors[i]) raise_for_point(errors[i], spec, axis, points[i].value);
  }
  return rows;
}

std::vector<ResultRow> cmd_sweep(const ExperimentSpec& spec) {
  spec.validate();
  if (!spec.sweep || spec.sweep->values.empty()) {
    throw SpecError("scenario '" + spec.scenario + "': sweep requires a non-empty sweep axis");
  }
  SweepAxis axis;
  const auto points = sweep_points(spec, axis);
  std::vector<std::exception_ptr> design_errors;
  const auto designs = point_designs(points, axis, design_errors);
  std::vector<ResultRow> rows;
  for (std::size_t i = 0; i < points.size(); ++i) rows.push_back(empty_row(spec, axis, points[i].value));

  std::vector<ResultRow> analysis = rows;
  const auto analysis_errors = parallel_for(points.size(), [&](std::size_t i) {
    if (design_errors[i]) return;
    analyze_into(analysis[i], points[i].spec, designs[i]);
  });
  const auto sim_errors = simulate_points(points, designs, design_errors, rows);
  for (std::size_t i = 0; i < points.size(); ++i) {
    ResultRow& row = rows[i];
    const ResultRow& an = analysis[i];
    if (!analysis_errors[i] && !design_errors[i]) {
      row.p_d_analysis = an.p_d_analysis;
      row.s_star = an.s_star;
      row.exponent = an.exponent;
      row.details.service_probs = an.details.service_probs;
      row.details.prob_positive_delay = an.details.prob_positive_delay;
      if (!row.avg_power_ratio) row.avg_power_ratio = an.avg_power_ratio;
      for (std::uint64_t s : an.seeds) {
        if (std::find(row.seeds.begin(), row.seeds.end(), s) == row.seeds.end()) row.seeds.push_back(s);
      }
    }
    std::vector<std::string> messages;
    if (design_errors[i]) {
      messages.push_back("design: " + describe(design_errors[i]));
    } else {
      if (analysis_errors[i]) messages.push_back("analysis: " + describe(analysis_errors[i]));
      if (sim_errors[i]) messages.push_back("simulation: " + describe(sim_errors[i]));
    }
    if (!messages.empty()) {
      std::string joined = point_context(spec, axis, points[i].value);
      for (const auto& m : messages) joined += "; " + m;
      row.error = joined;
    }
  }
  return rows;
}

OptimizeReport cmd_optimize(const ExperimentSpec& spec) {
  spec.validate();
  OptimizeReport report;
  report.scenario = spec.scenario;
  report.scheme = spec.scheme;
  try {
    report.design = design_thresholds(spec);
    if (spec.scheme == Scheme::FullCsi) {
      report.avg_power_ratio = average_power_ratio(
          report.design.thresholds, PowerLaw(spec.table(), spec.target_per), spec.users, rayleigh());
    } else {
      report.avg_power_ratio = quantized_power_ratio(report.design.thresholds, spec.users, rayleigh());
    }
  } catch (...) {
    rethrow_with_context("scenario '" + spec.scenario + "'");
  }
  return report;
}

void ResultRow::validate() const {
  if (scenario.empty()) throw SpecError("result row without scenario");
  if (!parse_axis(sweep_name)) throw SpecError("result row with unknown sweep name");
  auto prob = [](const std::optional<double>& v, const char* what) {
    if (v && !(*v >= 0.0 && *v <= 1.0)) throw SpecError(std::string(what) + " outside [0,1]");
  };
  prob(p_d_analysis, "p_d_analysis");
  prob(p_d_sim, "p_d_sim");
  prob(measured_per, "measured_per");
  if (p_d_sim_ci95 && !(*p_d_sim_ci95 >= 0.0)) throw SpecError("negative confidence half-width");
  if (exponent && !(*exponent < 0.0)) throw SpecError("delay exponent must be negative");
  if (s_star && !(*s_star > 0.0)) throw SpecError("s* must be positive");
  if (avg_power_ratio && !(*avg_power_ratio >= 0.0)) throw SpecError("negative power ratio");
}

}  // namespace mudelay
