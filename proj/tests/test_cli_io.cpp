#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "kuhnwire/config.hpp"
#include "kuhnwire/experiments.hpp"

using namespace kuhnwire;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(KUHNWIRE_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("kuhnwire_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_SUITE("cli_io") {

TEST_CASE("defaults are applied") {
  const auto c = parse_config("experiment: gamma-table\nN: 2\nk: 2\nlambda: 0.7\n");
  CHECK(c.p == 2.0);
  CHECK(c.c1 == 1.0);
  CHECK(c.c2 == 1.0);
  CHECK(c.seed == 0);
  CHECK(c.lambda == 0.7);
  CHECK(c.effective_rho() == 0.7);
  CHECK(c.m_schedule == std::vector<int>{4, 8, 16});
  CHECK(c.nu == std::vector<double>{1.0, 0.0});
}

TEST_CASE("semantic errors name the key") {
  auto message = [](const std::string& text) {
    try {
      parse_config(text);
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  CHECK(message("experiment: gamma-table\nlambda: 1.5\n").find("lambda") != std::string::npos);
  CHECK(message("experiment: gamma-table\nlamda: 0.5\n").find("unknown key 'lamda'") != std::string::npos);
  CHECK(message("experiment: nope\n").find("experiment") != std::string::npos);
  CHECK(message("experiment: g2\nk: two\n").find("'k'") != std::string::npos);
  CHECK(message("experiment: g2\nM_schedule: [8, 4]\n").find("M_schedule") != std::string::npos);
  CHECK(message("experiment: g2\nN: 3\nlattice: hexagonal\n").find("lattice") != std::string::npos);
  CHECK(message("lambda: 0.5\n").find("experiment") != std::string::npos);
  CHECK(message("experiment: g2\nk: 1\nk: 2\n").find("duplicate") != std::string::npos);
}

TEST_CASE("syntax errors carry a line number") {
  try {
    parse_config("experiment: g2\nk: 2\nnu: [1, 0\n");
    FAIL("expected a syntax error");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("line ") == 0);
  }
}

TEST_CASE("serialize round-trips") {
  auto c = parse_config(
      "experiment: scaling\nlattice: dislocated\nlambda: 0.7\nrho: 0.8\nk_list: [1, 3]\nseed: 17\ntol: 1e-9\n"
      "perturbations: [0.3, 0.1]\npair: I,lJ\n");
  CHECK(parse_config(serialize(c)) == c);
  const auto d = parse_config("experiment: g2\nnu: [0.6, 0.8]\np: 4\n");
  CHECK(parse_config(serialize(d)) == d);
}

TEST_CASE("headers echo the effective config and version") {
  const auto c = parse_config("experiment: export-lattice\nk: 1\nL: 2\n");
  const auto files = render_experiment(c);
  REQUIRE(files.count("lattice.txt") == 1);
  const std::string& text = files.at("lattice.txt");
  CHECK(text.rfind(std::string("# kuhnwire ") + version(), 0) == 0);
  CHECK(text.find("# experiment: export-lattice\n") != std::string::npos);
  CHECK(text.find("# p: 2\n") != std::string::npos);
  const auto g = render_experiment(parse_config("experiment: inversion-cost\nrestarts: 1\n"));
  CHECK(g.at("inversion-cost.csv").find("estimates (upper bounds)") != std::string::npos);
}

TEST_CASE("gamma table at lambda = 1 has a vanishing I,lI row") {
  const auto c = parse_config("experiment: gamma-table\nk: 1\nM_schedule: [4, 6]\nrestarts: 1\n");
  const auto files = render_experiment(c);
  std::istringstream rows(files.at("gamma-table.csv"));
  int seen = 0;
  for (std::string line; std::getline(rows, line);) {
    if (line.rfind("\"I,lI\"", 0) != 0) continue;
    ++seen;
    std::stringstream ss(line.substr(7));
    std::string k, m, value;
    std::getline(ss, k, ',');
    std::getline(ss, m, ',');
    std::getline(ss, value, ',');
    CHECK(std::stod(value) <= 1e-10);
  }
  CHECK(seen == 2);
  CHECK(files.count("profile-IJ.csv") == 1);
}

TEST_CASE("render is deterministic") {
  const auto c = parse_config("experiment: rigidity-probe\nsamples: 300\nseed: 9\n");
  CHECK(render_experiment(c) == render_experiment(c));
}

TEST_CASE("cli exit codes") {
  const fs::path dir = scratch("cli");
  CHECK(run_cli("export-lattice --out " + (dir / "ok").string()) == 0);
  CHECK(fs::exists(dir / "ok" / "lattice.txt"));

  std::ofstream(dir / "bad.yaml") << "experiment: export-lattice\nlambda: 1.5\n";
  CHECK(run_cli("export-lattice --config " + (dir / "bad.yaml").string()) == 1);
  CHECK(run_cli("export-lattice --max-iters 0") == 1);
  CHECK(run_cli("frobnicate") == 1);

  std::ofstream(dir / "box.yaml") << "experiment: export-lattice\nlattice: kuhn-box\nk: 1\nL: 1\n";
  CHECK(run_cli("export-lattice --config " + (dir / "box.yaml").string() + " --out " + dir.string()) == 2);

  std::ofstream(dir / "blocker") << "x";
  CHECK(run_cli("export-lattice --out " + (dir / "blocker" / "sub").string()) == 3);
  CHECK(run_cli("export-lattice --config " + (dir / "missing.yaml").string()) == 3);
}

TEST_CASE("cli output is byte-identical across runs") {
  const fs::path dir = scratch("det");
  std::ofstream(dir / "c.yaml") << "experiment: inversion-cost\nrestarts: 2\nseed: 4\n";
  REQUIRE(run_cli("inversion-cost --config " + (dir / "c.yaml").string() + " --out " + (dir / "a").string()) == 0);
  REQUIRE(run_cli("inversion-cost --config " + (dir / "c.yaml").string() + " --out " + (dir / "b").string()) == 0);
  CHECK(slurp(dir / "a" / "inversion-cost.csv") == slurp(dir / "b" / "inversion-cost.csv"));
  CHECK(!slurp(dir / "a" / "inversion-cost.csv").empty());
}

}
