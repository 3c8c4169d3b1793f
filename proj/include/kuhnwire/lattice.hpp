#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace kuhnwire {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using IVector = Eigen::VectorXi;

/// Raised when a lattice cannot be built from the requested geometry.
class ConstructionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Affine map H in GL+(N) carrying Z^N onto the modelled Bravais lattice.
class StructureMatrix {
 public:
  explicit StructureMatrix(Matrix h);

  static StructureMatrix identity(int dim);
  /// Triangular lattice, He1 = (1,0), H(e1+e2) = (1/2, sqrt(3)/2).
  static StructureMatrix hexagonal();
  static StructureMatrix fcc();
  static StructureMatrix bcc();

  const Matrix& matrix() const { return h_; }
  const Matrix& inverse() const { return h_inv_; }
  int dim() const { return static_cast<int>(h_.rows()); }

 private:
  Matrix h_;
  Matrix h_inv_;
};

/// N-simplex of the Kuhn triangulation, vertices in unit-spacing integer coordinates.
struct Simplex {
  std::vector<IVector> vertices;

  int dim() const { return static_cast<int>(vertices.size()) - 1; }
  double volume() const;
};

/// The N! simplices {0, e_i1, e_i1+e_i2, ...} of the unit cube, permutations in
/// lexicographic order.
std::vector<Simplex> kuhn_simplices(int dim);

enum class BondClass { nearest, next_nearest };

const char* to_string(BondClass c);

/// Nearest (B1) and next-to-nearest (B2) offsets of the periodic Kuhn triangulation.
struct BondSets {
  std::vector<IVector> nearest;
  std::vector<IVector> next_nearest;

  /// r = max |xi| over B1 and B2.
  double max_length() const;
  /// Largest |xi_1| over B1 and B2, used as clamp width along the wire axis.
  int max_axial_extent() const;
};

BondSets bond_sets(int dim);

enum class Species { minus, plus };

enum class LatticeKind { box, strip, dislocated };

const char* to_string(LatticeKind k);

struct Node {
  IVector grid;    // integer index; reference = grid (or rho * grid on the dislocated plus side)
  Vector ref;      // reference coordinates, unit spacing
  Species species = Species::minus;
  bool boundary_layer = false;
};

struct Bond {
  int i = 0;
  int j = 0;
  BondClass cls = BondClass::nearest;
  Vector offset;                      // ref(j) - ref(i)
  Species species = Species::minus;   // species whose equilibrium the bond uses
  std::optional<double> fixed_length; // set on dislocated lattices; otherwise |H offset|
};

struct Geometry {
  int dim = 2;
  int k = 0;
  int length = 0;
  double lambda = 1.0;
  double rho = 1.0;
  LatticeKind kind = LatticeKind::strip;
  std::vector<int> sides;  // box lattices only
  double clamp_layer = 0;  // box lattices only
};

/// Immutable finite lattice: nodes in row-major order of their integer
/// coordinates (first coordinate slowest), undirected bonds, realized simplices.
class Lattice {
 public:
  Lattice(Geometry geometry, std::vector<Node> nodes, std::vector<Bond> bonds,
          std::vector<std::vector<int>> simplices);

  const Geometry& geometry() const { return geometry_; }
  int dim() const { return geometry_.dim; }
  int size() const { return static_cast<int>(nodes_.size()); }
  const std::vector<Node>& nodes() const { return nodes_; }
  const Node& node(int i) const { return nodes_[static_cast<std::size_t>(i)]; }
  const std::vector<Bond>& bonds() const { return bonds_; }
  /// Node-index tuples of the simplices fully contained in the domain.
  const std::vector<std::vector<int>>& simplices() const { return simplices_; }

  /// Reference coordinates as an N x n matrix.
  Matrix reference() const;
  /// Node with the given integer grid index (plus side of a dislocated lattice
  /// uses its own grid).
  std::optional<int> find(const IVector& grid, Species side = Species::minus) const;
  /// 1 for minus bonds, lambda for plus bonds.
  double equilibrium_factor(const Bond& b) const;
  /// Largest number of bonds incident to one node.
  int max_degree(std::optional<BondClass> cls = std::nullopt) const;
  /// Largest bond length measured through H.
  double max_bond_length(const StructureMatrix& h) const;

 private:
  Geometry geometry_;
  std::vector<Node> nodes_;
  std::vector<Bond> bonds_;
  std::vector<std::vector<int>> simplices_;
  std::map<std::pair<int, std::vector<int>>, int> index_;
};

/// Z^N in [-L,L] x [-k,k]^(N-1); plus species iff x1 >= 0.
Lattice build_strip_lattice(int dim, int k, int length, double lambda);

/// Centred box with the given numbers of nodes per axis; nodes closer than r
/// to the box faces (in lattice units) are flagged as boundary layer.
Lattice build_box_lattice(int dim, const std::vector<int>& sides, double boundary_layer);

/// Box of half-width T/2 in the orthonormal frame whose last axis is nu;
/// coincides with build_box_lattice when nu is a coordinate axis.
Lattice build_oriented_cube(int dim, int side, const Vector& nu, double boundary_layer);

/// Two-dimensional wire with unit spacing for x1 < 0 and spacing rho for
/// x1 >= 0. Bonds within two reference units of the interface come from a
/// Delaunay triangulation of the hexagonal image of those nodes.
Lattice build_dislocated_lattice(double rho, int k, int length, double lambda);

/// Reflection R = QH with H - R = a (x) nu.
struct InterfaceNormal {
  Vector normal;
  Matrix reflection;
  Vector a;

  /// Piecewise affine jump datum: Hx on <x,nu> >= 0, R x otherwise.
  Vector jump_datum(const Matrix& h, const Vector& x) const;
};

InterfaceNormal rank_one_reflection(const StructureMatrix& h, const Vector& nu);

/// The reflection J: e1 -> -e1.
Matrix reflection_j(int dim);

/// Plain-text export: header "N k L lambda rho kind", node lines, bond lines.
std::string export_lattice(const Lattice& lattice);

}  // namespace kuhnwire
