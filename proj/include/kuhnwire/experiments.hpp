#pragma once

#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "kuhnwire/config.hpp"
#include "kuhnwire/transitions.hpp"

namespace kuhnwire {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

const char* version();

GammaRunOptions run_options(const ExperimentConfig& config);

/// Comment block that opens every output file.
std::string output_header(const ExperimentConfig& config, bool estimates);

/// File name -> contents, headers included. Throws ConfigError for settings
/// the experiment cannot use and ConstructionError for lattice failures.
std::map<std::string, std::string> render_experiment(const ExperimentConfig& config);

/// Writes render_experiment into `out_dir` (created if needed); returns the paths.
std::vector<std::filesystem::path> run_experiment(const ExperimentConfig& config, const std::filesystem::path& out_dir);

}  // namespace kuhnwire
