// Command-line harness: analyze, simulate, optimize and sweep experiment specs.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "mudelay/errors.hpp"
#include "mudelay/experiment.hpp"
#include "mudelay/results.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitSpec = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitPartial = 4;

struct Options {
  std::string spec_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<int> replications;
};

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

int run_command(const std::string& command, const Options& opts) {
  mudelay::ExperimentSpec spec = mudelay::load_spec(opts.spec_path);
  if (opts.seed) spec.seed = *opts.seed;
  if (opts.replications) spec.replications = *opts.replications;
  spec.validate();

  std::optional<std::filesystem::path> dir;
  if (opts.out_dir) {
    dir = *opts.out_dir;
    std::filesystem::create_directories(*dir);
  }
  const std::string stem = spec.scenario + "_" + command;

  if (command == "optimize") {
    const std::string json = mudelay::optimize_json(mudelay::cmd_optimize(spec));
    if (dir) write_file(*dir / (stem + ".json"), json);
    std::cout << json;
    return kExitOk;
  }

  std::vector<mudelay::ResultRow> rows;
  if (command == "analyze") {
    rows = mudelay::cmd_analyze(spec);
  } else if (command == "simulate") {
    rows = mudelay::cmd_simulate(spec);
  } else {
    rows = mudelay::cmd_sweep(spec);
  }

  std::ostringstream csv;
  mudelay::write_csv(csv, rows);
  if (dir) {
    write_file(*dir / (stem + ".csv"), csv.str());
    write_file(*dir / (stem + ".json"), mudelay::sidecar_json(command, spec, rows));
  } else {
    std::cout << csv.str();
  }

  int code = kExitOk;
  for (const auto& row : rows) {
    if (row.error) {
      std::cerr << "mudelay: " << *row.error << "\n";
      code = kExitPartial;
    }
  }
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Delay-violation analysis and simulation for multiuser AMC scheduling"};
  app.require_subcommand(1);
  Options opts;
  std::string command;

  for (const char* name : {"analyze", "simulate", "optimize", "sweep"}) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--spec", opts.spec_path, "experiment spec (YAML)")->required();
    sub->add_option("--seed", opts.seed, "override the base seed");
    sub->add_option("--out", opts.out_dir, "write <scenario>_<command>.csv/.json here");
    sub->add_option("--replications", opts.replications, "override the replication count")
        ->check(CLI::PositiveNumber);
    sub->callback([&command, name] { command = name; });
  }
  app.get_subcommand("analyze")->description("analytical delay-violation probability");
  app.get_subcommand("simulate")->description("Monte Carlo simulation");
  app.get_subcommand("optimize")->description("threshold design only (thresholds, lambda, s*)");
  app.get_subcommand("sweep")->description("analysis and simulation over the sweep axis");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitSpec;
  }

  try {
    return run_command(command, opts);
  } catch (const mudelay::SpecError& e) {
    std::cerr << "mudelay: spec error: " << e.what() << "\n";
    return kExitSpec;
  } catch (const mudelay::NumericError& e) {
    std::cerr << "mudelay: numeric error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const mudelay::DomainError& e) {
    std::cerr << "mudelay: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "mudelay: " << e.what() << "\n";
    return 1;
  }
}
