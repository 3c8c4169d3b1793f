#include "kuhnwire/experiments.hpp"

#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "kuhnwire/analysis.hpp"

namespace kuhnwire {

namespace {

std::string g(double v) { return fmt::format("{:.12g}", v); }

std::string matrix_field(const Matrix& m) {
  std::string out;
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) out += (out.empty() ? "" : " ") + g(m(i, j));
  return "\"" + out + "\"";
}

void require_homogeneous_strip(const ExperimentConfig& c) {
  if (c.lattice == "dislocated" || c.lattice == "kuhn-box")
    throw ConfigError(fmt::format("key 'lattice': {} runs on strips (strip, hexagonal, fcc, bcc)", c.experiment));
}

GammaEstimate gamma_ij(const ExperimentConfig& c) {
  const EnergyModel model = c.model();
  const auto [p1, p2] = canonical_pair("I,J", c.dim, c.lambda);
  const GammaRunOptions run = run_options(c);
  TransitionSpec spec = transition_spec(p1, p2, c.k, model);
  spec.m_schedule = run.m_schedule;
  spec.opts = run.opts;
  spec.perturbations = run.perturbations;
  spec.seed = run.seed;
  return gamma_estimate(spec);
}

}  // namespace

const char* version() { return KUHNWIRE_VERSION; }

GammaRunOptions run_options(const ExperimentConfig& c) {
  GammaRunOptions run;
  run.m_schedule = c.m_schedule;
  run.opts.tol = c.tol;
  run.opts.max_iters = c.max_iters;
  run.opts.threads = c.threads;
  run.perturbations = c.restarts;
  run.seed = c.seed;
  return run;
}

std::string output_header(const ExperimentConfig& config, bool estimates) {
  std::string out = fmt::format("# kuhnwire {}\n", version());
  std::istringstream lines(serialize(config));
  for (std::string line; std::getline(lines, line);) out += "# " + line + "\n";
  if (estimates) out += "# values are estimates (upper bounds): best local minima over a multi-start search\n";
  return out;
}

std::map<std::string, std::string> render_experiment(const ExperimentConfig& c) {
  validate(c);
  const EnergyModel model = c.model();
  const GammaRunOptions run = run_options(c);
  std::map<std::string, std::string> files;
  const std::string& e = c.experiment;

  if (e == "gamma-table") {
    require_homogeneous_strip(c);
    const GammaTable table = gamma_table(c.k, model, run);
    files["gamma-table.csv"] = output_header(c, true) + table.csv();
    const auto& ij = table.entries.front();
    const auto [p1, p2] = canonical_pair("I,J", c.dim, c.lambda);
    const TransitionSpec spec = transition_spec(p1, p2, c.k, model);
    files["profile-IJ.csv"] =
        output_header(c, true) + orientation_profile(*ij.estimate.lattice, ij.estimate.u, spec.model).csv();
  } else if (e == "scaling") {
    if (c.lattice == "kuhn-box") throw ConfigError("key 'lattice': scaling runs on strips or the dislocated lattice");
    const bool dislocated = c.lattice == "dislocated";
    const ScalingStudy study = scaling_study(c.k_list, model, c.pair, run,
                                             dislocated ? LatticeKind::dislocated : LatticeKind::strip, c.effective_rho());
    files["scaling.csv"] = output_header(c, true) + study.csv();
  } else if (e == "g2") {
    if (c.lambda != 1.0) throw ConfigError("key 'lambda': g2 needs lambda = 1");
    if (c.lattice == "dislocated") throw ConfigError("key 'lattice': g2 runs on homogeneous lattices");
    files["g2.csv"] = output_header(c, true) + g2_estimate(c.normal(), c.t_list, model, run).csv();
  } else if (e == "inversion-cost") {
    if (c.restarts < 1) throw ConfigError("key 'restarts': inversion-cost needs at least one restart");
    const InversionCost cost = inversion_cost(c.structure(), c.p, c.restarts, c.seed);
    files["inversion-cost.csv"] =
        output_header(c, true) + "value,pair,feasible,attempts,seed,positions\n" +
        fmt::format("{},{},{},{},{},{}\n", g(cost.value), cost.pair, cost.feasible ? 1 : 0, cost.attempts, cost.seed,
                    matrix_field(cost.positions));
  } else if (e == "rigidity-probe") {
    const RigidityProbe probe = rigidity_probe(c.structure(), c.p, c.samples, c.seed);
    files["rigidity-probe.csv"] = output_header(c, false) + "ratio,samples,skipped,argmax\n" +
                                  fmt::format("{},{},{},{}\n", g(probe.ratio), probe.samples, probe.skipped,
                                              matrix_field(probe.argmax));
  } else if (e == "forces-demo") {
    require_homogeneous_strip(c);
    if (c.dim != 2) throw ConfigError("key 'N': forces-demo needs N = 2");
    const GammaEstimate ij = gamma_ij(c);
    const ForcesDemo demo = forces_demo(ij.value, c.k, c.length, c.f1, c.a);
    std::string rows = "amplitude,folded_total,unfolded_total,folded_wins\n";
    for (const auto& s : demo.samples)
      rows += fmt::format("{},{},{},{}\n", g(s.amplitude), g(s.folded_total), g(s.unfolded_total),
                          s.folded_total < s.unfolded_total ? 1 : 0);
    files["forces-demo.csv"] = output_header(c, true) + rows;
    files["forces-bracket.csv"] = output_header(c, true) + "gamma_IJ,below,above,crossing,bracketed\n" +
                                  fmt::format("{},{},{},{},{}\n", g(demo.gamma_ij), g(demo.below), g(demo.above),
                                              g(demo.crossing), demo.bracketed ? 1 : 0);
  } else if (e == "boundary-gamma") {
    require_homogeneous_strip(c);
    const GammaEstimate ij = gamma_ij(c);
    const Matrix s = random_symmetric(c.dim, c.seed);
    const Matrix h = model.h.matrix();
    const Matrix id = Matrix::Identity(c.dim, c.dim);
    std::string rows = "perturbation,value,two_sided,gamma_IJ,converged\n";
    for (double t : c.perturbations) {
      const GammaEstimate b = boundary_gamma(h + t * s, id, c.k, model, run);
      rows += fmt::format("{},{},{},{},{}\n", g(t), g(b.value), g(2.0 * b.value), g(ij.value), b.converged ? 1 : 0);
    }
    files["boundary-gamma.csv"] = output_header(c, true) + rows;
  } else if (e == "export-lattice") {
    Lattice lattice = [&] {
      if (c.lattice == "dislocated") return build_dislocated_lattice(c.effective_rho(), c.k, c.length, c.lambda);
      if (c.lattice == "kuhn-box") {
        std::vector<int> sides(static_cast<std::size_t>(c.dim), 2 * c.k);
        sides[0] = 2 * c.length;
        return build_box_lattice(c.dim, sides, bond_sets(c.dim).max_length());
      }
      return build_strip_lattice(c.dim, c.k, c.length, c.lambda);
    }();
    files["lattice.txt"] = output_header(c, false) + export_lattice(lattice);
  } else {
    throw ConfigError(fmt::format("key 'experiment': unknown experiment '{}'", e));
  }
  return files;
}

std::vector<std::filesystem::path> run_experiment(const ExperimentConfig& config, const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError(fmt::format("cannot create output directory '{}': {}", out_dir.string(), ec.message()));
  const auto files = render_experiment(config);
  std::vector<std::filesystem::path> written;
  for (const auto& [name, text] : files) {
    const auto path = out_dir / name;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError(fmt::format("cannot open '{}' for writing", path.string()));
    out << text;
    out.close();
    if (!out) throw IoError(fmt::format("failed writing '{}'", path.string()));
    written.push_back(path);
  }
  return written;
}

}  // namespace kuhnwire
