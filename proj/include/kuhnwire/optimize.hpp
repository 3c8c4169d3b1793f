#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "kuhnwire/energy.hpp"

namespace kuhnwire {

/// Nodes selected by `contains` are held at `position(node)`.
struct ClampRegion {
  std::string name;
  std::function<bool(const Node&)> contains;
  std::function<Vector(const Node&)> position;
};

/// Region whose nodes are placed at A g + b, g the node's integer grid
/// coordinates (its own sublattice grid on a dislocated plus side).
ClampRegion affine_region(std::string name, std::function<bool(const Node&)> contains, Matrix a, Vector b);

class BoundaryCondition {
 public:
  BoundaryCondition() = default;

  void add(ClampRegion region) { regions_.push_back(std::move(region)); }
  const std::vector<ClampRegion>& regions() const { return regions_; }

  /// Region index per node, -1 for free nodes. Throws if regions overlap.
  std::vector<int> assign(const Lattice& lattice) const;
  /// Overwrites clamped columns of u.
  void apply(const Lattice& lattice, Deformation& u) const;

  /// Clamps x1 <= left_edge to A_left g and x1 >= right_edge to A_right g.
  static BoundaryCondition end_slabs(double left_edge, const Matrix& a_left, double right_edge, const Matrix& a_right);

 private:
  std::vector<ClampRegion> regions_;
};

struct MinimizeOptions {
  double tol = 1e-8;
  int max_iters = 10000;
  int memory = 10;
  int threads = 1;
};

struct MinimizeResult {
  Deformation u;
  double energy = 0.0;
  double gradient_inf_norm = 0.0;
  int iterations = 0;
  bool converged = false;
  int restarts_used = 0;
  std::string label;
};

struct LbfgsReport {
  double value = 0.0;
  double gradient_inf_norm = 0.0;
  int iterations = 0;
  bool converged = false;
  int restarts = 0;
};

/// f(x, grad) returns the objective and writes its gradient.
using Objective = std::function<double(const Vector&, Vector&)>;

/// Limited-memory BFGS with Armijo backtracking (c = 1e-4, shrink 0.5, unit
/// first trial), restarting from steepest descent on curvature breakdown. Stops
/// when |grad|_inf <= tol * max(1, |f|). Updates x in place.
LbfgsReport lbfgs(const Objective& f, Vector& x, const MinimizeOptions& opts);

/// L-BFGS on the free nodes with Armijo backtracking. Minimizes the pair
/// energy, or energy minus load_value when loads are given.
MinimizeResult minimize(const EnergyFunctional& energy, const BoundaryCondition& bc, Deformation init,
                        const MinimizeOptions& opts = {}, const LoadSpec* loads = nullptr);

enum class InitKind { sharp, linear_blend, folded, random_perturb };

InitKind parse_init_kind(const std::string& name);
const char* to_string(InitKind kind);

struct InitOptions {
  InitKind kind = InitKind::sharp;
  Matrix p1;
  Matrix p2;
  double width = 2.0;
  std::uint64_t seed = 0;
  double amplitude = 0.1;
  InitKind base = InitKind::sharp;  // random_perturb only
};

/// Starting deformation built from P1 H g on x1 < 0 and P2 H g on x1 >= 0.
Deformation make_initializer(const Lattice& lattice, const StructureMatrix& h, const InitOptions& opts);

struct NamedInit {
  std::string label;
  Deformation u;
};

/// Default starts: sharp, linear-blend, folded, and `perturbations` noisy
/// copies of each.
std::vector<NamedInit> default_initializers(const Lattice& lattice, const StructureMatrix& h, const Matrix& p1,
                                            const Matrix& p2, double width, std::uint64_t seed,
                                            int perturbations = 3, double amplitude = 0.1);

struct MultiStartResult {
  MinimizeResult best;
  std::vector<MinimizeResult> runs;
};

/// Runs every start (up to opts.threads at once) and keeps the lowest energy;
/// ties go to the earliest start.
MultiStartResult multi_start(const EnergyFunctional& energy, const BoundaryCondition& bc,
                             const std::vector<NamedInit>& inits, const MinimizeOptions& opts = {},
                             const LoadSpec* loads = nullptr);

/// Worst componentwise gap between the analytic gradient and central
/// differences, relative to max(|grad|_inf, 1e-8).
double fd_check(const EnergyFunctional& energy, const Deformation& u, double step);

}  // namespace kuhnwire
