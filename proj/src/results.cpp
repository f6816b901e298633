#include "mudelay/results.hpp"

#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include "json.hpp"

#include "mudelay/errors.hpp"

namespace mudelay {

using nlohmann::ordered_json;

const std::vector<std::string>& csv_columns() {
  static const std::vector<std::string> columns = {
      "scenario", "sweep_name", "sweep_value", "p_d_analysis", "p_d_sim", "p_d_sim_ci95",
      "s_star",   "exponent",   "avg_power_ratio", "measured_per", "seeds"};
  return columns;
}

std::string format_number(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", value);
  return buf;
}

namespace {

std::string cell(const std::optional<double>& v) { return v ? format_number(*v) : "null"; }

std::optional<double> parse_cell(const std::string& text, std::size_t line) {
  if (text == "null") return std::nullopt;
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw SpecError("csv line " + std::to_string(line) + ": bad number '" + text + "'");
  }
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(line);
  while (std::getline(in, item, sep)) out.push_back(item);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

ordered_json opt(const std::optional<double>& v) {
  return v ? ordered_json(*v) : ordered_json(nullptr);
}

ordered_json spec_json(const ExperimentSpec& spec) {
  ordered_json j;
  j["scenario"] = spec.scenario;
  j["scheme"] = spec.scheme == Scheme::FullCsi ? "full_csi" : "quantized";
  j["avg_snr"] = std::vector<double>(spec.users.avg_snr().begin(), spec.users.avg_snr().end());
  ordered_json modes = ordered_json::array();
  for (const AmcMode& m : spec.modes) modes.push_back({{"rate", m.rate}, {"a", m.a}, {"g", m.g}});
  j["modes"] = modes;
  j["packet_bits"] = spec.packet_bits;
  j["slots"] = spec.slots;
  j["target_per"] = spec.target_per;
  j["thresholds"] = spec.thresholds ? ordered_json(*spec.thresholds) : ordered_json(nullptr);
  j["traffic"] = {{"mean_on_s", spec.traffic.mean_on},
                  {"mean_off_s", spec.traffic.mean_off},
                  {"on_rate_pps", spec.traffic.on_rate},
                  {"mean_rate_bps", mean_bit_rate(spec.traffic)}};
  j["frame_s"] = spec.frame_len;
  j["d_max_s"] = spec.d_max;
  j["horizon_frames"] = spec.horizon_frames;
  j["warmup_frames"] = spec.warmup_frames;
  j["seed"] = spec.seed;
  j["replications"] = spec.replications;
  j["analysis"] = {{"service_probs", spec.analysis.service_probs},
                   {"delay_exponent", spec.analysis.delay_exponent},
                   {"p_d", spec.analysis.p_d},
                   {"pilot_frames", spec.analysis.pilot_frames},
                   {"pos_delay_estimator",
                    spec.analysis.estimator == PositiveDelayEstimator::FirstOpportunity
                        ? "first_opportunity"
                        : "frame_backlog"}};
  if (spec.sweep) {
    j["sweep"] = {{"name", sweep_axis_name(spec.sweep->axis)}, {"values", spec.sweep->values}};
  } else {
    j["sweep"] = nullptr;
  }
  return j;
}

ordered_json row_json(const ResultRow& row) {
  ordered_json j;
  j["scenario"] = row.scenario;
  j["sweep_name"] = row.sweep_name;
  j["sweep_value"] = row.sweep_value;
  j["p_d_analysis"] = opt(row.p_d_analysis);
  j["p_d_sim"] = opt(row.p_d_sim);
  j["p_d_sim_ci95"] = opt(row.p_d_sim_ci95);
  j["s_star"] = opt(row.s_star);
  j["exponent"] = opt(row.exponent);
  j["avg_power_ratio"] = opt(row.avg_power_ratio);
  j["measured_per"] = opt(row.measured_per);
  j["seeds"] = row.seeds;
  j["error"] = row.error ? ordered_json(*row.error) : ordered_json(nullptr);
  const RowDetails& d = row.details;
  j["details"] = {{"thresholds", d.thresholds},
                  {"service_probs", d.service_probs},
                  {"lambda", opt(d.lambda)},
                  {"prob_positive_delay", opt(d.prob_positive_delay)},
                  {"replicate_p_d", d.replicate_p_d},
                  {"arrived", d.arrived},
                  {"served", d.served},
                  {"error_lost", d.error_lost},
                  {"deadline_dropped", d.deadline_dropped},
                  {"still_queued", d.still_queued},
                  {"mean_delay_s", opt(d.mean_delay)}};
  return j;
}

}  // namespace

void write_csv(std::ostream& out, const std::vector<ResultRow>& rows) {
  const auto& cols = csv_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  out << '\n';
  for (const ResultRow& r : rows) {
    out << r.scenario << ',' << r.sweep_name << ',' << format_number(r.sweep_value) << ','
        << cell(r.p_d_analysis) << ',' << cell(r.p_d_sim) << ',' << cell(r.p_d_sim_ci95) << ','
        << cell(r.s_star) << ',' << cell(r.exponent) << ',' << cell(r.avg_power_ratio) << ','
        << cell(r.measured_per) << ',';
    for (std::size_t i = 0; i < r.seeds.size(); ++i) out << (i ? ";" : "") << r.seeds[i];
    out << '\n';
  }
}

std::vector<ResultRow> parse_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw SpecError("csv: missing header");
  if (split(line, ',') != csv_columns()) throw SpecError("csv: unexpected header '" + line + "'");
  std::vector<ResultRow> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != csv_columns().size()) {
      throw SpecError("csv line " + std::to_string(lineno) + ": wrong number of fields");
    }
    ResultRow r;
    r.scenario = f[0];
    r.sweep_name = f[1];
    const auto value = parse_cell(f[2], lineno);
    if (!value) throw SpecError("csv line " + std::to_string(lineno) + ": sweep_value is null");
    r.sweep_value = *value;
    r.p_d_analysis = parse_cell(f[3], lineno);
    r.p_d_sim = parse_cell(f[4], lineno);
    r.p_d_sim_ci95 = parse_cell(f[5], lineno);
    r.s_star = parse_cell(f[6], lineno);
    r.exponent = parse_cell(f[7], lineno);
    r.avg_power_ratio = parse_cell(f[8], lineno);
    r.measured_per = parse_cell(f[9], lineno);
    for (const auto& s : split(f[10], ';')) {
      try {
        r.seeds.push_back(std::stoull(s));
      } catch (const std::exception&) {
        throw SpecError("csv line " + std::to_string(lineno) + ": bad seed '" + s + "'");
      }
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

std::string sidecar_json(const std::string& command, const ExperimentSpec& spec,
                         const std::vector<ResultRow>& rows) {
  ordered_json j;
  j["schema"] = kResultSchema;
  j["command"] = command;
  j["scenario"] = spec.scenario;
  j["spec"] = spec_json(spec);
  ordered_json list = ordered_json::array();
  for (const ResultRow& r : rows) list.push_back(row_json(r));
  j["rows"] = list;
  return j.dump(2) + "\n";
}

std::string optimize_json(const OptimizeReport& report) {
  ordered_json j;
  j["schema"] = kResultSchema;
  j["command"] = "optimize";
  j["scenario"] = report.scenario;
  j["scheme"] = report.scheme == Scheme::FullCsi ? "full_csi" : "quantized";
  const auto pts = report.design.thresholds.points();
  j["thresholds"] = std::vector<double>(pts.begin(), pts.end());
  j["lambda"] = opt(report.design.lambda);
  j["s_star"] = opt(report.design.s_star);
  j["exponent"] = opt(report.design.exponent);
  j["avg_power_ratio"] = report.avg_power_ratio;
  return j.dump(2) + "\n";
}

}  // namespace mudelay
