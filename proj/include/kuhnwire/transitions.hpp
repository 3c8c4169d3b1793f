#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "kuhnwire/analysis.hpp"
#include "kuhnwire/optimize.hpp"

namespace kuhnwire {

/// Equilibrium factors (minus side, plus side) implied by a pair of wells:
/// (1,1) for two O(N) wells, (lambda,lambda) for two lambda O(N) wells and
/// (1,lambda) for the heterogeneous case. Throws for any other combination.
std::pair<double, double> species_scales(const Matrix& p1, const Matrix& p2, double lambda);

/// Strip problem with affine clamps on both ends. Clamp maps act on grid
/// coordinates, so on a dislocated plus side they already carry 1/rho.
struct TransitionSpec {
  int dim = 2;
  int k = 1;
  Matrix left;
  Matrix right;
  EnergyModel model;  // minus_scale and lambda hold the two equilibrium factors
  LatticeKind kind = LatticeKind::strip;
  double rho = 1.0;
  std::vector<int> m_schedule{4, 8, 16};
  MinimizeOptions opts;
  int perturbations = 3;
  std::uint64_t seed = 0;
  double blend_width = 0.0;  // 0 means 2k
  /// Extra starting points, evaluated on the lattice of the last M.
  std::vector<std::function<Deformation(const Lattice&)>> extra_inits;
};

/// Spec for gamma(P1, P2; k): clamps P1 H on the left and P2 H on the right.
TransitionSpec transition_spec(const Matrix& p1, const Matrix& p2, int k, const EnergyModel& model,
                               LatticeKind kind = LatticeKind::strip, double rho = 1.0);

struct GammaStep {
  int m = 0;
  double value = 0.0;
  bool converged = false;
  int restarts = 0;
  std::string best_start;
};

struct GammaEstimate {
  double value = 0.0;  // estimate (upper bound) at the largest M
  bool converged = false;
  bool stabilized = false;
  std::vector<GammaStep> steps;
  std::shared_ptr<const Lattice> lattice;  // lattice of the largest M
  Deformation u;                           // minimizer on it
};

Lattice transition_lattice(const TransitionSpec& spec, int m);
BoundaryCondition transition_clamps(const TransitionSpec& spec, int m);

GammaEstimate gamma_estimate(const TransitionSpec& spec);

struct GammaEntry {
  std::string pair;
  GammaEstimate estimate;
};

/// The four constants of the interface-counting functional.
struct GammaValues {
  double ij = 0.0;
  double lilj = 0.0;
  double ili = 0.0;
  double ilj = 0.0;
};

struct GammaTable {
  int k = 1;
  EnergyModel model;
  std::vector<GammaEntry> entries;  // "I,J", "lI,lJ", "I,lI", "I,lJ"

  GammaValues values() const;
  /// Rows "pair,k,M,value,converged,restarts".
  std::string csv() const;
};

/// Canonical well pair by name: "I,J", "lI,lJ", "I,lI", "I,lJ", "I,I".
std::pair<Matrix, Matrix> canonical_pair(const std::string& name, int dim, double lambda);

struct GammaRunOptions {
  std::vector<int> m_schedule{4, 8, 16};
  MinimizeOptions opts;
  int perturbations = 3;
  std::uint64_t seed = 0;
};

GammaTable gamma_table(int k, const EnergyModel& model, const GammaRunOptions& run = {});

struct ScalingRow {
  int k = 0;
  double value = 0.0;
  double per_k_nm1 = 0.0;
  double per_k_n = 0.0;
  std::optional<double> folding_bound;
  bool converged = false;
};

struct ScalingStudy {
  int dim = 2;
  std::vector<ScalingRow> rows;
  std::optional<GammaEstimate> seed;  // k = 1 solution behind the folding bounds

  /// Rows "k,value,value_per_k^{N-1},value_per_k^N".
  std::string csv() const;
};

/// gamma estimates for each k with M schedule k * base. On strips the k = 1
/// minimizer (M = base.back()) is rescaled as u(x) = k v(x/k) and used both as
/// an explicit competitor and as an extra starting point.
ScalingStudy scaling_study(const std::vector<int>& k_list, const EnergyModel& model, const std::string& pair,
                           const GammaRunOptions& run = {}, LatticeKind kind = LatticeKind::strip, double rho = 1.0);

/// k v(x/k) sampled on the given strip via piecewise affine interpolation over
/// the Kuhn triangulation of the seed strip.
Deformation rescale_seed(const Lattice& seed_lattice, const Deformation& v, const Lattice& target, int k);

/// Energy of the rescaled k = 1 quasi-minimizer on the k strip with M = k * M1.
double folding_upper_bound(const GammaEstimate& seed, const TransitionSpec& spec_k);

struct G2Row {
  int t = 0;
  double estimate = 0.0;
  double test_value = 0.0;  // energy of u_0 itself, per T^{N-1}
  int free_nodes = 0;
  bool converged = false;
};

struct G2Study {
  Vector nu;
  std::vector<G2Row> rows;

  /// Rows "nu,T,estimate".
  std::string csv() const;
};

/// Interface energy per area with the r-layer of a cube of side T aligned
/// with nu clamped to the jump datum u_0.
G2Study g2_estimate(const Vector& nu, const std::vector<int>& t_list, const EnergyModel& model,
                    const GammaRunOptions& run = {});

/// Finite union of open intervals of (-L, L).
class OrientationSet {
 public:
  OrientationSet(double length, std::vector<std::pair<double, double>> intervals);

  double length() const { return length_; }
  const std::vector<std::pair<double, double>>& intervals() const { return intervals_; }
  int boundary_left() const;   // points of dU in (-L, 0)
  int boundary_right() const;  // points of dU in (0, L)
  bool zero_in_boundary() const;

 private:
  double length_;
  std::vector<std::pair<double, double>> intervals_;
};

double j_eval(const OrientationSet& u, const GammaValues& g);

struct ProfileInterval {
  double start = 0.0;
  double end = 0.0;
  WellLabel label = WellLabel::either;
};

struct JMin {
  double value = 0.0;
  OrientationSet u{1.0, {}};
};

/// Minimum of j_eval over sets U containing every rot interval and missing
/// every refl interval; "either" intervals are free.
JMin j_min(const std::vector<ProfileInterval>& profile, const GammaValues& g);

/// Profile intervals from an orientation profile.
std::vector<ProfileInterval> profile_intervals(const OrientationProfile& profile);

/// gamma with clamps B g on the left and P H g on the right of a homogeneous strip.
GammaEstimate boundary_gamma(const Matrix& b, const Matrix& p, int k, const EnergyModel& model,
                             const GammaRunOptions& run = {});

/// Seeded random symmetric matrix with unit Frobenius norm.
Matrix random_symmetric(int dim, std::uint64_t seed);

struct ForcesPoint {
  double amplitude = 0.0;
  double folded_total = 0.0;
  double unfolded_total = 0.0;
};

struct ForcesDemo {
  double gamma_ij = 0.0;
  double crossing = 0.0;  // midpoint of the final bracket
  double below = 0.0;     // folding does not pay
  double above = 0.0;     // folding pays
  bool bracketed = false;
  std::vector<ForcesPoint> samples;
};

/// Folded versus unfolded competitors for f1 > 0 constant and f2 = +A on
/// (-L, a), -A on (a, L), N = 2; the amplitude where the fold starts to win
/// is bracketed by bisection to 1% relative width.
ForcesDemo forces_demo(double gamma_ij, int k, double length, double f1, double a);

/// Limit-functional totals at one amplitude.
ForcesPoint forces_competitors(double gamma_ij, int k, double length, double f1, double a, double amplitude);

}  // namespace kuhnwire
