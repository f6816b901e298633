#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "mudelay/analyzer.hpp"
#include "mudelay/channel.hpp"
#include "mudelay/errors.hpp"
#include "mudelay/experiment.hpp"
#include "mudelay/optimizer.hpp"
#include "mudelay/phy.hpp"
#include "mudelay/results.hpp"
#include "mudelay/traffic.hpp"

namespace py = pybind11;
using namespace mudelay;

namespace {

py::object opt(const std::optional<double>& v) { return v ? py::cast(*v) : py::none(); }

py::dict row_dict(const ResultRow& r) {
  py::dict d;
  d["scenario"] = r.scenario;
  d["sweep_name"] = r.sweep_name;
  d["sweep_value"] = r.sweep_value;
  d["p_d_analysis"] = opt(r.p_d_analysis);
  d["p_d_sim"] = opt(r.p_d_sim);
  d["p_d_sim_ci95"] = opt(r.p_d_sim_ci95);
  d["s_star"] = opt(r.s_star);
  d["exponent"] = opt(r.exponent);
  d["avg_power_ratio"] = opt(r.avg_power_ratio);
  d["measured_per"] = opt(r.measured_per);
  d["seeds"] = r.seeds;
  d["error"] = r.error ? py::cast(*r.error) : py::none();
  d["thresholds"] = r.details.thresholds;
  d["service_probs"] = r.details.service_probs;
  return d;
}

template <class Cmd>
py::list run_rows(const std::string& text, Cmd cmd) {
  const ExperimentSpec spec = parse_spec(text, "<string>");
  std::vector<ResultRow> rows;
  {
    py::gil_scoped_release release;
    rows = cmd(spec);
  }
  py::list out;
  for (const auto& r : rows) out.append(row_dict(r));
  return out;
}

ThresholdSet make_thresholds(const std::string& scheme, std::vector<double> points) {
  if (scheme == "full_csi") return ThresholdSet::full_csi(std::move(points));
  if (scheme == "quantized") return ThresholdSet::quantized(std::move(points));
  throw DomainError("scheme must be 'full_csi' or 'quantized'");
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Delay-violation analysis, threshold design and simulation for multiuser AMC";

  static py::exception<SpecError> spec_error(m, "SpecError", PyExc_ValueError);
  static py::exception<NumericError> numeric_error(m, "NumericError", PyExc_ArithmeticError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const SpecError& e) {
      py::set_error(spec_error, e.what());
    } catch (const NumericError& e) {
      py::set_error(numeric_error, e.what());
    } catch (const DomainError& e) {
      PyErr_SetString(PyExc_ValueError, e.what());
    }
  });

  m.def("db_to_linear", &db_to_linear);
  m.def("linear_to_db", &linear_to_db);

  py::class_<AmcMode>(m, "AmcMode")
      .def(py::init<double, double, double>(), py::arg("rate"), py::arg("a"), py::arg("g"))
      .def_readwrite("rate", &AmcMode::rate)
      .def_readwrite("a", &AmcMode::a)
      .def_readwrite("g", &AmcMode::g)
      .def("__repr__", [](const AmcMode& md) {
        std::ostringstream s;
        s << "AmcMode(rate=" << md.rate << ", a=" << md.a << ", g=" << md.g << ")";
        return s.str();
      });
  m.def("standard_modes", &AmcModeTable::standard_modes);
  m.def("per_model", &per_model, py::arg("mode"), py::arg("snr"));
  m.def("d_constant", &d_constant, py::arg("mode"), py::arg("target_per"));
  m.def(
      "fit_per_params",
      [](const std::vector<double>& snr, const std::vector<double>& per) {
        if (snr.size() != per.size()) throw DomainError("snr and per must have equal length");
        std::vector<PerSample> samples;
        for (std::size_t i = 0; i < snr.size(); ++i) samples.push_back({snr[i], per[i]});
        const PerFit fit = fit_per_params(samples);
        return py::make_tuple(fit.a, fit.g);
      },
      py::arg("snr"), py::arg("per"), "Least-squares (a, g) from PER samples.");

  py::class_<MmppSource>(m, "MmppSource")
      .def(py::init([](double mean_on, double mean_off, double on_rate, int packet_bits) {
             MmppSource s{mean_on, mean_off, on_rate, packet_bits};
             s.validate();
             return s;
           }),
           py::arg("mean_on"), py::arg("mean_off"), py::arg("on_rate"),
           py::arg("packet_bits") = 1080)
      .def_static("from_bit_rate", &MmppSource::from_bit_rate, py::arg("mean_on"),
                  py::arg("mean_off"), py::arg("bit_rate"), py::arg("packet_bits") = 1080)
      .def_readonly("mean_on", &MmppSource::mean_on)
      .def_readonly("mean_off", &MmppSource::mean_off)
      .def_readonly("on_rate", &MmppSource::on_rate)
      .def_property_readonly("mean_bit_rate", [](const MmppSource& s) { return mean_bit_rate(s); });
  m.def("ge_limit_arrival", &ge_limit_arrival, py::arg("source"), py::arg("s"));

  m.def(
      "service_probs",
      [](const std::string& scheme, std::vector<double> thresholds, int users) {
        const ThresholdSet set = make_thresholds(scheme, std::move(thresholds));
        return scheme == "full_csi" ? service_probs_full_csi(rayleigh(), set, users)
                                    : service_probs_quantized(rayleigh(), set, users);
      },
      py::arg("scheme"), py::arg("thresholds"), py::arg("users"),
      "Probability that the tagged user is served in each mode (index 0: not served).");
  m.def(
      "delay_exponent",
      [](std::vector<double> probs, const MmppSource& src, double frame_len, int slots) {
        const AmcModeTable table = AmcModeTable::standard(slots);
        const ServiceDistribution sd = ServiceDistribution::from_table(table, std::move(probs));
        const double s = solve_delay_exponent(
            [&](double v) { return ge_limit_arrival(src, v); },
            [&](double v) { return ge_limit_service(sd, src.packet_bits, frame_len, v); });
        return py::make_tuple(s, ge_limit_service(sd, src.packet_bits, frame_len, -s));
      },
      py::arg("service_probs"), py::arg("source"), py::arg("frame_len") = 2e-3,
      py::arg("slots") = 2, "(s*, exponent) for the standard mode table.");
  m.def(
      "optimize_full_csi",
      [](const std::vector<double>& avg_snr, const MmppSource& src, double target_per,
         double frame_len, int slots) {
        const AmcModeTable table = AmcModeTable::standard(slots);
        const PowerLaw law(table, target_per);
        const UserPopulation pop(avg_snr);
        const OptimizerResult r = [&] {
          py::gil_scoped_release release;
          return optimize_full_csi(law, pop, table, src, frame_len);
        }();
        py::dict d;
        d["thresholds"] = std::vector<double>(r.thresholds.points().begin(), r.thresholds.points().end());
        d["lambda"] = r.lambda;
        d["s_star"] = r.s_star;
        d["exponent"] = r.exponent;
        d["avg_power_ratio"] = r.avg_power_ratio;
        d["service_probs"] = r.service_probs;
        return d;
      },
      py::arg("avg_snr"), py::arg("source"), py::arg("target_per") = 0.01,
      py::arg("frame_len") = 2e-3, py::arg("slots") = 2,
      "Optimized full-CSI thresholds for linear average SNRs.");

  m.def("normalize_spec",
        [](const std::string& text) { return serialize_spec(parse_spec(text, "<string>")); },
        py::arg("text"), "Parse a YAML experiment spec and return its canonical form.");
  m.def("analyze", [](const std::string& text) { return run_rows(text, cmd_analyze); },
        py::arg("spec"));
  m.def("simulate", [](const std::string& text) { return run_rows(text, cmd_simulate); },
        py::arg("spec"));
  m.def("sweep", [](const std::string& text) { return run_rows(text, cmd_sweep); },
        py::arg("spec"));
  m.def(
      "optimize",
      [](const std::string& text) {
        const ExperimentSpec spec = parse_spec(text, "<string>");
        const OptimizeReport report = [&] {
          py::gil_scoped_release release;
          return cmd_optimize(spec);
        }();
        return optimize_json(report);
      },
      py::arg("spec"), "Threshold design for a spec, as JSON text.");
  m.def(
      "to_csv",
      [](const std::string& text, const std::string& command) {
        const ExperimentSpec spec = parse_spec(text, "<string>");
        std::vector<ResultRow> rows;
        {
          py::gil_scoped_release release;
          if (command == "analyze") {
            rows = cmd_analyze(spec);
          } else if (command == "simulate") {
            rows = cmd_simulate(spec);
          } else if (command == "sweep") {
            rows = cmd_sweep(spec);
          } else {
            throw DomainError("command must be analyze, simulate or sweep");
          }
        }
        std::ostringstream out;
        write_csv(out, rows);
        return out.str();
      },
      py::arg("spec"), py::arg("command"));
}
