#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "kuhnwire/energy.hpp"

namespace kuhnwire {

struct WellProjection {
  Matrix nearest;
  double distance = 0.0;
  int orientation = 0;  // sign of det F, 0 when |det F| < 1e-12
};

/// Nearest point of the well with matching orientation, scale * SO(N) H for
/// det F >= 0 and scale * (O(N)\SO(N)) H otherwise. A singular F goes to
/// whichever is closer.
WellProjection polar_project(const Matrix& f, const StructureMatrix& h, double scale = 1.0);

/// Frobenius distance from F to scale * SO(N) H (sign > 0) or to its reflected
/// component (sign < 0).
double well_distance(const Matrix& f, const StructureMatrix& h, double scale, int sign);

/// Gradient of the affine interpolant of u on a simplex given by node indices.
Matrix simplex_gradient(const Lattice& lattice, const Deformation& u, const std::vector<int>& simplex);

enum class WellLabel { rot, refl, either };

const char* to_string(WellLabel label);

struct SlabLabel {
  double start = 0.0;
  double end = 0.0;
  WellLabel label = WellLabel::either;
  double mean_dist_rot = 0.0;
  double mean_dist_refl = 0.0;
};

struct OrientationProfile {
  std::vector<SlabLabel> slabs;

  /// Changes between rot and refl along x1, skipping "either" slabs.
  int label_changes() const;
  /// Maximal runs of equal labels.
  std::vector<SlabLabel> intervals() const;
  /// Rows "slab_start,slab_end,label,mean_dist_rot,mean_dist_refl".
  std::string csv() const;
};

constexpr double kEitherTolerance = 0.3;

/// Labels each unit slab (a, a+1) of a strip by the orientation of its simplices.
OrientationProfile orientation_profile(const Lattice& lattice, const Deformation& u, const EnergyModel& model);

/// Two simplices T = [x0, x1..xN] and S = [y0, x1..xN] sharing a facet.
struct SimplexPair {
  std::vector<IVector> points;  // x0, x1..xN, y0
  bool same_cube = false;
};

/// Facet-sharing Kuhn simplex pairs, one per translation class.
std::vector<SimplexPair> facet_pairs(int dim);

/// Energy over all pairs among the N+2 points of S and T.
double pair_cell_energy(const SimplexPair& pair, const Matrix& positions, const StructureMatrix& h, double p);

/// det(grad u|T) * det(grad u|S) for vertex positions in the order of pair.points.
double orientation_product(const SimplexPair& pair, const Matrix& positions);

struct InversionCost {
  double value = 0.0;
  int pair = -1;
  Matrix positions;
  bool feasible = false;
  int attempts = 0;
  std::uint64_t seed = 0;
};

/// Smallest two-simplex energy with opposite orientations, found by penalty
/// continuation from `restarts` seeded starts per facet pair.
InversionCost inversion_cost(const StructureMatrix& h, double p, int restarts, std::uint64_t seed);

/// dist^p(F, well of F) / cell_energy(F, T); nullopt for 0/0.
std::optional<double> rigidity_ratio(const Matrix& f, const Simplex& t, const EnergyModel& model);

struct RigidityProbe {
  double ratio = 0.0;
  Matrix argmax;
  int samples = 0;
  int skipped = 0;
};

/// Largest rigidity ratio over random F (near the wells, far field, and
/// uniform) and the Kuhn simplices.
RigidityProbe rigidity_probe(const StructureMatrix& h, double p, int sample_count, std::uint64_t seed);

}  // namespace kuhnwire
