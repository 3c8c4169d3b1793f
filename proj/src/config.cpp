#include "kuhnwire/config.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <set>

#include <fmt/format.h>
#include <fmt/ranges.h>
#include <yaml-cpp/yaml.h>

#include "kuhnwire/transitions.hpp"

namespace kuhnwire {

namespace {

const std::vector<std::string> kLattices{"kuhn-box", "strip", "hexagonal", "fcc", "bcc", "dislocated"};
const std::vector<std::string> kPairs{"I,J", "lI,lJ", "I,lI", "I,lJ", "I,I"};

bool one_of(const std::string& s, const std::vector<std::string>& options) {
  return std::find(options.begin(), options.end(), s) != options.end();
}

[[noreturn]] void fail(const std::string& key, const std::string& what) {
  throw ConfigError(fmt::format("key '{}': {}", key, what));
}

template <class T>
T scalar(const YAML::Node& node, const std::string& key, const char* type) {
  if (!node.IsScalar()) fail(key, fmt::format("expected {}", type));
  try {
    return node.as<T>();
  } catch (const YAML::BadConversion&) {
    fail(key, fmt::format("expected {}, got '{}'", type, node.Scalar()));
  }
}

template <class T>
std::vector<T> sequence(const YAML::Node& node, const std::string& key, const char* type) {
  if (!node.IsSequence()) fail(key, fmt::format("expected a list of {}", type));
  std::vector<T> out;
  for (const auto& item : node) out.push_back(scalar<T>(item, key, type));
  return out;
}

template <class T>
void require_increasing(const std::vector<T>& v, const std::string& key) {
  if (v.empty()) fail(key, "must not be empty");
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!(v[i] > 0)) fail(key, "entries must be positive");
    if (i > 0 && !(v[i] > v[i - 1])) fail(key, "entries must be increasing");
  }
}

std::string number(double v) { return fmt::format("{:.17g}", v); }

template <class T>
std::string list(const std::vector<T>& v) {
  std::vector<std::string> parts;
  for (const auto& x : v) {
    if constexpr (std::is_floating_point_v<T>) parts.push_back(number(x));
    else parts.push_back(std::to_string(x));
  }
  return fmt::format("[{}]", fmt::join(parts, ", "));
}

}  // namespace

const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names{"gamma-table", "scaling",       "g2",           "inversion-cost",
                                              "rigidity-probe", "forces-demo", "boundary-gamma", "export-lattice"};
  return names;
}

Vector ExperimentConfig::normal() const {
  if (nu.empty()) {
    Vector e = Vector::Zero(dim);
    e[0] = 1.0;
    return e;
  }
  Vector v = Eigen::Map<const Vector>(nu.data(), static_cast<Eigen::Index>(nu.size()));
  return v / v.norm();
}

StructureMatrix ExperimentConfig::structure() const {
  if (lattice == "hexagonal" || lattice == "dislocated") return StructureMatrix::hexagonal();
  if (lattice == "fcc") return StructureMatrix::fcc();
  if (lattice == "bcc") return StructureMatrix::bcc();
  return StructureMatrix::identity(dim);
}

EnergyModel ExperimentConfig::model() const {
  EnergyModel m;
  m.p = p;
  m.c1 = c1;
  m.c2 = c2;
  m.lambda = lambda;
  m.h = structure();
  return m;
}

void validate(const ExperimentConfig& c) {
  if (c.experiment.empty()) fail("experiment", "missing");
  if (!one_of(c.experiment, experiment_names())) fail("experiment", fmt::format("unknown experiment '{}'", c.experiment));
  if (!one_of(c.lattice, kLattices)) fail("lattice", fmt::format("unknown lattice '{}'", c.lattice));
  if (c.dim != 2 && c.dim != 3) fail("N", "must be 2 or 3");
  if (c.lattice == "hexagonal" && c.dim != 2) fail("lattice", "hexagonal needs N = 2");
  if ((c.lattice == "fcc" || c.lattice == "bcc") && c.dim != 3) fail("lattice", c.lattice + " needs N = 3");
  if (c.lattice == "dislocated" && c.dim != 2) fail("lattice", "dislocated needs N = 2");
  if (c.k < 1) fail("k", "must be at least 1");
  if (c.length < 1) fail("L", "must be at least 1");
  if (!(c.lambda > 0.0 && c.lambda <= 1.0)) fail("lambda", "must lie in (0, 1]");
  if (c.rho && !(*c.rho > 0.0 && *c.rho <= 1.0)) fail("rho", "must lie in (0, 1]");
  if (!(c.p > 1.0)) fail("p", "must exceed 1");
  if (!(c.c1 > 0.0)) fail("c1", "must be positive");
  if (!(c.c2 > 0.0)) fail("c2", "must be positive");
  if (!(c.tol > 0.0)) fail("tol", "must be positive");
  if (c.max_iters < 1) fail("max_iters", "must be positive");
  if (c.restarts < 0) fail("restarts", "must be nonnegative");
  if (c.threads < 1) fail("threads", "must be at least 1");
  require_increasing(c.m_schedule, "M_schedule");
  require_increasing(c.k_list, "k_list");
  require_increasing(c.t_list, "T_list");
  if (!c.nu.empty()) {
    if (static_cast<int>(c.nu.size()) != c.dim) fail("nu", "length must equal N");
    double n2 = 0.0;
    for (double x : c.nu) n2 += x * x;
    if (!(n2 > 1e-24)) fail("nu", "must be nonzero");
  }
  if (!one_of(c.pair, kPairs)) fail("pair", fmt::format("unknown well pair '{}'", c.pair));
  if (c.experiment == "scaling" && c.pair != "I,lI" && c.pair != "I,lJ") fail("pair", "scaling needs I,lI or I,lJ");
  if (!(c.f1 > 0.0)) fail("f1", "must be positive");
  if (!(std::abs(c.a) < c.length)) fail("a", "must lie in (-L, L)");
  if (c.samples < 100) fail("samples", "must be at least 100");
  if (c.perturbations.empty()) fail("perturbations", "must not be empty");
  for (double t : c.perturbations)
    if (!(t > 0.0)) fail("perturbations", "entries must be positive");
}

ExperimentConfig parse_config(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError(fmt::format("line {}: {}", e.mark.line + 1, e.msg));
  }
  if (!root.IsMap()) throw ConfigError("line 1: configuration must be a mapping of keys to values");

  ExperimentConfig c;
  using Setter = std::function<void(const YAML::Node&, const std::string&)>;
  const std::map<std::string, Setter> setters{
      {"experiment", [&](auto& n, auto& k) { c.experiment = scalar<std::string>(n, k, "string"); }},
      {"lattice", [&](auto& n, auto& k) { c.lattice = scalar<std::string>(n, k, "string"); }},
      {"N", [&](auto& n, auto& k) { c.dim = scalar<int>(n, k, "integer"); }},
      {"k", [&](auto& n, auto& k) { c.k = scalar<int>(n, k, "integer"); }},
      {"L", [&](auto& n, auto& k) { c.length = scalar<int>(n, k, "integer"); }},
      {"lambda", [&](auto& n, auto& k) { c.lambda = scalar<double>(n, k, "number"); }},
      {"rho", [&](auto& n, auto& k) { c.rho = scalar<double>(n, k, "number"); }},
      {"p", [&](auto& n, auto& k) { c.p = scalar<double>(n, k, "number"); }},
      {"c1", [&](auto& n, auto& k) { c.c1 = scalar<double>(n, k, "number"); }},
      {"c2", [&](auto& n, auto& k) { c.c2 = scalar<double>(n, k, "number"); }},
      {"tol", [&](auto& n, auto& k) { c.tol = scalar<double>(n, k, "number"); }},
      {"max_iters", [&](auto& n, auto& k) { c.max_iters = scalar<int>(n, k, "integer"); }},
      {"restarts", [&](auto& n, auto& k) { c.restarts = scalar<int>(n, k, "integer"); }},
      {"seed", [&](auto& n, auto& k) { c.seed = scalar<std::uint64_t>(n, k, "nonnegative integer"); }},
      {"threads", [&](auto& n, auto& k) { c.threads = scalar<int>(n, k, "integer"); }},
      {"M_schedule", [&](auto& n, auto& k) { c.m_schedule = sequence<int>(n, k, "integers"); }},
      {"k_list", [&](auto& n, auto& k) { c.k_list = sequence<int>(n, k, "integers"); }},
      {"T_list", [&](auto& n, auto& k) { c.t_list = sequence<int>(n, k, "integers"); }},
      {"nu", [&](auto& n, auto& k) { c.nu = sequence<double>(n, k, "numbers"); }},
      {"pair", [&](auto& n, auto& k) { c.pair = scalar<std::string>(n, k, "string"); }},
      {"f1", [&](auto& n, auto& k) { c.f1 = scalar<double>(n, k, "number"); }},
      {"a", [&](auto& n, auto& k) { c.a = scalar<double>(n, k, "number"); }},
      {"samples", [&](auto& n, auto& k) { c.samples = scalar<int>(n, k, "integer"); }},
      {"perturbations", [&](auto& n, auto& k) { c.perturbations = sequence<double>(n, k, "numbers"); }},
  };

  std::set<std::string> seen;
  for (const auto& item : root) {
    const auto key = item.first.as<std::string>();
    const int line = item.first.Mark().line + 1;
    const auto it = setters.find(key);
    if (it == setters.end()) throw ConfigError(fmt::format("line {}: unknown key '{}'", line, key));
    if (!seen.insert(key).second) throw ConfigError(fmt::format("line {}: duplicate key '{}'", line, key));
    try {
      it->second(item.second, key);
    } catch (const ConfigError& e) {
      throw ConfigError(fmt::format("line {}: {}", line, e.what()));
    }
  }
  validate(c);
  if (!c.rho) c.rho = c.lambda;
  if (c.nu.empty()) {
    c.nu.assign(static_cast<std::size_t>(c.dim), 0.0);
    c.nu[0] = 1.0;
  }
  return c;
}

std::string serialize(const ExperimentConfig& c) {
  std::string out;
  out += fmt::format("experiment: {}\n", c.experiment);
  out += fmt::format("lattice: {}\n", c.lattice);
  out += fmt::format("N: {}\n", c.dim);
  out += fmt::format("k: {}\n", c.k);
  out += fmt::format("L: {}\n", c.length);
  out += fmt::format("lambda: {}\n", number(c.lambda));
  if (c.rho) out += fmt::format("rho: {}\n", number(*c.rho));
  out += fmt::format("p: {}\n", number(c.p));
  out += fmt::format("c1: {}\n", number(c.c1));
  out += fmt::format("c2: {}\n", number(c.c2));
  out += fmt::format("tol: {}\n", number(c.tol));
  out += fmt::format("max_iters: {}\n", c.max_iters);
  out += fmt::format("restarts: {}\n", c.restarts);
  out += fmt::format("seed: {}\n", c.seed);
  out += fmt::format("threads: {}\n", c.threads);
  out += fmt::format("M_schedule: {}\n", list(c.m_schedule));
  out += fmt::format("k_list: {}\n", list(c.k_list));
  out += fmt::format("T_list: {}\n", list(c.t_list));
  if (!c.nu.empty()) out += fmt::format("nu: {}\n", list(c.nu));
  out += fmt::format("pair: \"{}\"\n", c.pair);
  out += fmt::format("f1: {}\n", number(c.f1));
  out += fmt::format("a: {}\n", number(c.a));
  out += fmt::format("samples: {}\n", c.samples);
  out += fmt::format("perturbations: {}\n", list(c.perturbations));
  return out;
}

}  // namespace kuhnwire
