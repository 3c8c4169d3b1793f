#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "kuhnwire/experiments.hpp"

namespace {

enum Exit { ok = 0, config_error = 1, construction_error = 2, io_error = 3 };

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw kuhnwire::IoError(fmt::format("cannot read config '{}'", path));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Discrete interface energies of heterostructured nanowires"};
  app.set_version_flag("--version", kuhnwire::version());
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
  std::optional<int> threads, max_iters, restarts;
  std::optional<double> tol;
  app.add_option("--config", config_path, "YAML configuration file");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--seed", seed, "random seed");
  app.add_option("--threads", threads, "worker threads");
  app.add_option("--tol", tol, "optimizer gradient tolerance");
  app.add_option("--max-iters", max_iters, "optimizer iteration cap");
  app.add_option("--restarts", restarts, "perturbed starts (or inversion-cost restarts)");

  const std::vector<std::pair<std::string, std::string>> commands{
      {"gamma", "gamma-table"},
      {"scaling", "scaling"},
      {"g2", "g2"},
      {"inversion-cost", "inversion-cost"},
      {"rigidity-probe", "rigidity-probe"},
      {"forces-demo", "forces-demo"},
      {"boundary-gamma", "boundary-gamma"},
      {"export-lattice", "export-lattice"},
  };
  for (const auto& [name, experiment] : commands) app.add_subcommand(name, "run experiment " + experiment)->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? ok : config_error;
  }

  std::string experiment;
  for (const auto& [name, exp] : commands)
    if (app.got_subcommand(name)) experiment = exp;

  try {
    std::string text = config_path.empty() ? "experiment: " + experiment + "\n" : read_file(config_path);
    // A config without an experiment key takes the subcommand's.
    if (!config_path.empty() && text.find("experiment:") == std::string::npos) text += "\nexperiment: " + experiment + "\n";
    kuhnwire::ExperimentConfig config = kuhnwire::parse_config(text);
    if (config.experiment != experiment)
      throw kuhnwire::ConfigError(
          fmt::format("key 'experiment': config says '{}' but the subcommand runs '{}'", config.experiment, experiment));
    if (seed) config.seed = *seed;
    if (threads) config.threads = *threads;
    if (tol) config.tol = *tol;
    if (max_iters) config.max_iters = *max_iters;
    if (restarts) config.restarts = *restarts;
    kuhnwire::validate(config);

    for (const auto& path : kuhnwire::run_experiment(config, out_dir)) std::cout << path.string() << "\n";
    return ok;
  } catch (const kuhnwire::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return config_error;
  } catch (const kuhnwire::ConstructionError& e) {
    std::cerr << "construction error: " << e.what() << "\n";
    return construction_error;
  } catch (const kuhnwire::IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return io_error;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return config_error;
  }
}
