#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "kuhnwire/energy.hpp"
#include "kuhnwire/optimize.hpp"

namespace kuhnwire {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Flat YAML mapping; every key is optional except `experiment`.
struct ExperimentConfig {
  std::string experiment;
  std::string lattice = "strip";  // kuhn-box, strip, hexagonal, fcc, bcc, dislocated
  int dim = 2;
  int k = 2;
  int length = 8;
  double lambda = 1.0;
  std::optional<double> rho;  // dislocated spacing, defaults to lambda
  double p = 2.0;
  double c1 = 1.0;
  double c2 = 1.0;
  double tol = 1e-8;
  int max_iters = 10000;
  int restarts = 3;
  std::uint64_t seed = 0;
  int threads = 1;
  std::vector<int> m_schedule{4, 8, 16};
  std::vector<int> k_list{2, 4, 8};
  std::vector<int> t_list{4, 8, 16};
  std::vector<double> nu;  // empty means e1
  std::string pair = "I,lI";
  double f1 = 1.0;
  double a = 0.5;
  int samples = 10000;
  std::vector<double> perturbations{0.2, 0.1, 0.05};

  bool operator==(const ExperimentConfig&) const = default;

  double effective_rho() const { return rho ? *rho : lambda; }
  Vector normal() const;
  StructureMatrix structure() const;
  EnergyModel model() const;
};

const std::vector<std::string>& experiment_names();

/// Throws ConfigError with a line number for syntax errors and the key name
/// for semantic ones.
ExperimentConfig parse_config(const std::string& text);

/// Checks ranges and cross-field constraints.
void validate(const ExperimentConfig& config);

/// All keys, defaults included, in a fixed order.
std::string serialize(const ExperimentConfig& config);

}  // namespace kuhnwire
