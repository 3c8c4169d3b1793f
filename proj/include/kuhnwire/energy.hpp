#pragma once

#include <functional>
#include <vector>

#include "kuhnwire/lattice.hpp"

namespace kuhnwire {

struct EnergyModel {
  double p = 2.0;
  double c1 = 1.0;
  double c2 = 1.0;
  double lambda = 1.0;
  // Equilibrium factor for minus-species bonds. 1 except for problems posed
  // entirely in the lambda-scaled well.
  double minus_scale = 1.0;
  StructureMatrix h = StructureMatrix::identity(2);
  double surface_prefactor = 1.0;

  void validate() const;
  double coefficient(BondClass c) const { return c == BondClass::nearest ? c1 : c2; }
  double scale(Species s) const { return s == Species::plus ? lambda : minus_scale; }
};

/// Deformed positions, one column per lattice node.
using Deformation = Matrix;

/// Sum over vertex pairs of T of | |F d| - scale |H d| |^p.
double cell_energy(const Matrix& f, const Simplex& t, const EnergyModel& model, double scale = 1.0);

/// Pair energy with per-bond coefficients and equilibria resolved once.
class EnergyFunctional {
 public:
  EnergyFunctional(const Lattice& lattice, const EnergyModel& model);

  const Lattice& lattice() const { return *lattice_; }
  const EnergyModel& model() const { return model_; }

  double value(const Deformation& u) const;
  /// Returns the energy and writes its gradient into grad (resized as needed).
  double value_and_gradient(const Deformation& u, Matrix& grad) const;
  /// Energy restricted to bonds attributed to one species.
  double species_value(const Deformation& u, Species s) const;
  /// Energy of the bonds touching one node.
  double incident_value(const Deformation& u, int node) const;
  double bond_value(const Deformation& u, int bond) const;

  /// Evaluate bonds on this many threads. Per-bond terms are still reduced in
  /// bond order, so results do not depend on the thread count.
  void set_threads(int threads) { threads_ = threads < 1 ? 1 : threads; }

 private:
  struct Term {
    int i;
    int j;
    double coef;
    double eq;
  };

  void check(const Deformation& u) const;
  double term_value(const Term& t, const Deformation& u) const;
  template <class Fn>
  void for_chunks(Fn&& fn) const;

  const Lattice* lattice_;
  EnergyModel model_;
  std::vector<Term> terms_;
  std::vector<std::vector<int>> incident_;
  int threads_ = 1;
};

double total_energy(const Lattice& lattice, const Deformation& u, const EnergyModel& model);
Matrix energy_gradient(const Lattice& lattice, const Deformation& u, const EnergyModel& model);

/// u(x) = A ref(x) + b for every node.
Deformation affine_deformation(const Lattice& lattice, const Matrix& a, const Vector& b);

/// Tangential load F1 on the end cross-sections and radial loads F_i(x1),
/// i = 2..N, on the lateral faces of a strip.
struct LoadSpec {
  Vector tangential;
  std::vector<std::function<Vector(double)>> radial;

  bool empty() const;
};

double load_value(const Lattice& lattice, const Deformation& u, const LoadSpec& loads);
/// Gradient of load_value with respect to u (independent of u).
Matrix load_gradient(const Lattice& lattice, const LoadSpec& loads);

}  // namespace kuhnwire
