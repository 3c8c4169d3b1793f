#include "kuhnwire/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include <fmt/format.h>

#include "delaunay.hpp"

namespace kuhnwire {

namespace {

std::vector<int> to_std(const IVector& v) { return {v.data(), v.data() + v.size()}; }

bool lex_less(const IVector& a, const IVector& b) {
  return std::lexicographical_compare(a.data(), a.data() + a.size(), b.data(), b.data() + b.size());
}

bool lex_positive(const IVector& v) { return lex_less(IVector::Zero(v.size()), v); }

// All integer points of the box [lo, hi], first coordinate slowest.
std::vector<IVector> grid_points(const IVector& lo, const IVector& hi) {
  std::vector<IVector> out;
  const auto n = lo.size();
  for (Eigen::Index d = 0; d < n; ++d)
    if (hi[d] < lo[d]) return out;
  IVector x = lo;
  while (true) {
    out.push_back(x);
    Eigen::Index d = n - 1;
    while (d >= 0 && x[d] == hi[d]) {
      x[d] = lo[d];
      --d;
    }
    if (d < 0) break;
    ++x[d];
  }
  return out;
}

long factorial(int n) {
  long f = 1;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

int side_of(LatticeKind kind, Species s) {
  return kind == LatticeKind::dislocated && s == Species::plus ? 1 : 0;
}

// Bonds and Kuhn simplices of a unit-spacing node set (all nodes share one grid).
Lattice assemble_unit_lattice(Geometry geometry, std::vector<Node> nodes) {
  const int dim = geometry.dim;
  std::map<std::vector<int>, int> index;
  for (std::size_t i = 0; i < nodes.size(); ++i) index.emplace(to_std(nodes[i].grid), static_cast<int>(i));
  auto lookup = [&](const IVector& g) -> int {
    auto it = index.find(to_std(g));
    return it == index.end() ? -1 : it->second;
  };

  const BondSets sets = bond_sets(dim);
  std::vector<std::pair<IVector, BondClass>> offsets;
  for (const auto& xi : sets.nearest)
    if (lex_positive(xi)) offsets.emplace_back(xi, BondClass::nearest);
  for (const auto& xi : sets.next_nearest)
    if (lex_positive(xi)) offsets.emplace_back(xi, BondClass::next_nearest);

  std::vector<Bond> bonds;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    for (const auto& [xi, cls] : offsets) {
      const int j = lookup(nodes[i].grid + xi);
      if (j < 0) continue;
      Bond b;
      b.i = static_cast<int>(i);
      b.j = j;
      b.cls = cls;
      b.offset = xi.cast<double>();
      b.species = nodes[i].species;
      bonds.push_back(std::move(b));
    }
  }

  const auto kuhn = kuhn_simplices(dim);
  std::vector<std::vector<int>> simplices;
  for (const auto& node : nodes) {
    for (const auto& t : kuhn) {
      std::vector<int> ids;
      for (const auto& v : t.vertices) {
        const int id = lookup(node.grid + v);
        if (id < 0) break;
        ids.push_back(id);
      }
      if (static_cast<int>(ids.size()) == dim + 1) simplices.push_back(std::move(ids));
    }
  }
  return Lattice(std::move(geometry), std::move(nodes), std::move(bonds), std::move(simplices));
}

}  // namespace

StructureMatrix::StructureMatrix(Matrix h) : h_(std::move(h)) {
  if (h_.rows() != h_.cols()) throw std::invalid_argument("structure matrix must be square");
  if (h_.rows() < 2) throw std::invalid_argument("structure matrix dimension must be at least 2");
  if (!(h_.determinant() > 0.0)) throw std::invalid_argument("structure matrix must have det H > 0");
  h_inv_ = h_.inverse();
}

StructureMatrix StructureMatrix::identity(int dim) { return StructureMatrix(Matrix::Identity(dim, dim)); }

StructureMatrix StructureMatrix::hexagonal() {
  Matrix h(2, 2);
  h << 1.0, -0.5, 0.0, std::sqrt(3.0) / 2.0;
  return StructureMatrix(h);
}

StructureMatrix StructureMatrix::fcc() {
  Matrix h(3, 3);
  h << 0, 1, 0, 1, -1, 1, 1, 0, -1;
  return StructureMatrix(0.5 * h);
}

StructureMatrix StructureMatrix::bcc() {
  Matrix h(3, 3);
  h << -1, 1, 1, 1, -1, 1, 1, 1, -1;
  return StructureMatrix(0.5 * h);
}

double Simplex::volume() const {
  const int n = dim();
  Matrix edges(n, n);
  for (int c = 0; c < n; ++c) edges.col(c) = (vertices[static_cast<std::size_t>(c + 1)] - vertices[0]).cast<double>();
  return std::abs(edges.determinant()) / static_cast<double>(factorial(n));
}

std::vector<Simplex> kuhn_simplices(int dim) {
  if (dim < 2) throw std::invalid_argument("kuhn_simplices: dimension must be at least 2");
  std::vector<int> perm(static_cast<std::size_t>(dim));
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<Simplex> out;
  do {
    Simplex s;
    IVector v = IVector::Zero(dim);
    s.vertices.push_back(v);
    for (int axis : perm) {
      v[axis] += 1;
      s.vertices.push_back(v);
    }
    out.push_back(std::move(s));
  } while (std::next_permutation(perm.begin(), perm.end()));
  return out;
}

const char* to_string(BondClass c) { return c == BondClass::nearest ? "B1" : "B2"; }

const char* to_string(LatticeKind k) {
  switch (k) {
    case LatticeKind::box: return "box";
    case LatticeKind::strip: return "strip";
    case LatticeKind::dislocated: return "dislocated";
  }
  return "unknown";
}

double BondSets::max_length() const {
  double r = 0.0;
  for (const auto* set : {&nearest, &next_nearest})
    for (const auto& xi : *set) r = std::max(r, xi.cast<double>().norm());
  return r;
}

int BondSets::max_axial_extent() const {
  int r = 0;
  for (const auto* set : {&nearest, &next_nearest})
    for (const auto& xi : *set) r = std::max(r, std::abs(xi[0]));
  return r;
}

BondSets bond_sets(int dim) {
  const auto kuhn = kuhn_simplices(dim);

  std::set<std::vector<int>> b1;
  for (const auto& t : kuhn)
    for (const auto& a : t.vertices)
      for (const auto& b : t.vertices)
        if (a != b) b1.insert(to_std(b - a));

  // Facet-sharing pairs over the 3^N patch of cubes around the origin.
  std::map<std::vector<int>, std::vector<IVector>> opposite;
  for (const auto& c : grid_points(IVector::Constant(dim, -1), IVector::Constant(dim, 1))) {
    for (const auto& t : kuhn) {
      for (std::size_t skip = 0; skip < t.vertices.size(); ++skip) {
        std::vector<std::vector<int>> facet;
        for (std::size_t v = 0; v < t.vertices.size(); ++v)
          if (v != skip) facet.push_back(to_std(c + t.vertices[v]));
        std::sort(facet.begin(), facet.end());
        std::vector<int> key;
        for (const auto& f : facet) key.insert(key.end(), f.begin(), f.end());
        opposite[key].push_back(c + t.vertices[skip]);
      }
    }
  }
  std::set<std::vector<int>> b2;
  for (const auto& [facet, opp] : opposite) {
    if (opp.size() != 2) continue;
    const IVector d = opp[1] - opp[0];
    for (const IVector& xi : {d, IVector(-d)}) {
      auto key = to_std(xi);
      if (!b1.count(key)) b2.insert(key);
    }
  }

  auto to_vectors = [](const std::set<std::vector<int>>& s) {
    std::vector<IVector> out;
    for (const auto& v : s) out.push_back(Eigen::Map<const IVector>(v.data(), static_cast<Eigen::Index>(v.size())));
    return out;
  };
  return {to_vectors(b1), to_vectors(b2)};
}

Lattice::Lattice(Geometry geometry, std::vector<Node> nodes, std::vector<Bond> bonds,
                 std::vector<std::vector<int>> simplices)
    : geometry_(std::move(geometry)),
      nodes_(std::move(nodes)),
      bonds_(std::move(bonds)),
      simplices_(std::move(simplices)) {
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    auto [it, fresh] = index_.emplace(std::make_pair(side_of(geometry_.kind, nodes_[i].species), to_std(nodes_[i].grid)),
                                      static_cast<int>(i));
    if (!fresh) throw ConstructionError("lattice: duplicate node");
  }
  const int n = size();
  std::set<std::pair<int, int>> seen;
  for (const auto& b : bonds_) {
    if (b.i < 0 || b.j < 0 || b.i >= n || b.j >= n || b.i == b.j) throw ConstructionError("lattice: bond endpoint missing");
    if (!seen.emplace(std::min(b.i, b.j), std::max(b.i, b.j)).second)
      throw ConstructionError("lattice: duplicate bond");
  }
  for (const auto& s : simplices_)
    for (int v : s)
      if (v < 0 || v >= n) throw ConstructionError("lattice: simplex vertex missing");
}

Matrix Lattice::reference() const {
  Matrix x(dim(), size());
  for (int i = 0; i < size(); ++i) x.col(i) = nodes_[static_cast<std::size_t>(i)].ref;
  return x;
}

std::optional<int> Lattice::find(const IVector& grid, Species side) const {
  auto it = index_.find({side_of(geometry_.kind, side), to_std(grid)});
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

double Lattice::equilibrium_factor(const Bond& b) const {
  return b.species == Species::plus ? geometry_.lambda : 1.0;
}

int Lattice::max_degree(std::optional<BondClass> cls) const {
  std::vector<int> degree(static_cast<std::size_t>(size()), 0);
  for (const auto& b : bonds_) {
    if (cls && b.cls != *cls) continue;
    ++degree[static_cast<std::size_t>(b.i)];
    ++degree[static_cast<std::size_t>(b.j)];
  }
  return degree.empty() ? 0 : *std::max_element(degree.begin(), degree.end());
}

double Lattice::max_bond_length(const StructureMatrix& h) const {
  double r = 0.0;
  for (const auto& b : bonds_) r = std::max(r, (h.matrix() * b.offset).norm());
  return r;
}

Lattice build_strip_lattice(int dim, int k, int length, double lambda) {
  if (dim < 2) throw ConstructionError("strip lattice: dimension must be at least 2");
  if (k < 1) throw ConstructionError("strip lattice: thickness k must be at least 1");
  if (length < 1) throw ConstructionError("strip lattice: half-length L must be at least 1");
  if (!(lambda > 0.0 && lambda <= 1.0)) throw ConstructionError("strip lattice: lambda must lie in (0,1]");

  IVector lo = IVector::Constant(dim, -k), hi = IVector::Constant(dim, k);
  lo[0] = -length;
  hi[0] = length;
  std::vector<Node> nodes;
  for (const auto& g : grid_points(lo, hi)) {
    Node n;
    n.grid = g;
    n.ref = g.cast<double>();
    n.species = g[0] < 0 ? Species::minus : Species::plus;
    nodes.push_back(std::move(n));
  }
  Geometry geo;
  geo.dim = dim;
  geo.k = k;
  geo.length = length;
  geo.lambda = lambda;
  geo.kind = LatticeKind::strip;
  return assemble_unit_lattice(std::move(geo), std::move(nodes));
}

Lattice build_box_lattice(int dim, const std::vector<int>& sides, double boundary_layer) {
  if (dim < 2 || static_cast<int>(sides.size()) != dim) throw ConstructionError("box lattice: need one side per dimension");
  for (int s : sides)
    if (s < 2.0 * boundary_layer + 1.0)
      throw ConstructionError(fmt::format("box lattice: side {} too small for clamp layer {}", s, boundary_layer));

  IVector lo(dim), hi(dim);
  for (int d = 0; d < dim; ++d) {
    lo[d] = -(sides[static_cast<std::size_t>(d)] / 2);
    hi[d] = lo[d] + sides[static_cast<std::size_t>(d)] - 1;
  }
  std::vector<Node> nodes;
  for (const auto& g : grid_points(lo, hi)) {
    Node n;
    n.grid = g;
    n.ref = g.cast<double>();
    int depth = std::numeric_limits<int>::max();
    for (int d = 0; d < dim; ++d) depth = std::min({depth, g[d] - lo[d], hi[d] - g[d]});
    n.boundary_layer = depth < boundary_layer;
    nodes.push_back(std::move(n));
  }
  Geometry geo;
  geo.dim = dim;
  geo.kind = LatticeKind::box;
  geo.sides = sides;
  geo.clamp_layer = boundary_layer;
  return assemble_unit_lattice(std::move(geo), std::move(nodes));
}

Lattice build_oriented_cube(int dim, int side, const Vector& nu, double boundary_layer) {
  if (dim < 2 || nu.size() != dim) throw ConstructionError("oriented cube: normal has wrong dimension");
  if (std::abs(nu.norm() - 1.0) > 1e-12) throw ConstructionError("oriented cube: normal must be a unit vector");
  if (side < 1) throw ConstructionError("oriented cube: side must be at least 1");

  // Orthonormal frame with nu last; remaining axes by Gram-Schmidt over e_1, e_2, ...
  std::vector<Vector> frame{nu};
  for (int d = 0; d < dim && static_cast<int>(frame.size()) < dim; ++d) {
    Vector e = Vector::Unit(dim, d);
    for (const auto& b : frame) e -= e.dot(b) * b;
    if (e.norm() > 1e-8) frame.push_back(e.normalized());
  }
  const double half = 0.5 * side;
  const int reach = static_cast<int>(std::ceil(half * std::sqrt(static_cast<double>(dim)))) + 1;
  std::vector<Node> nodes;
  for (const auto& g : grid_points(IVector::Constant(dim, -reach), IVector::Constant(dim, reach))) {
    const Vector x = g.cast<double>();
    double depth = std::numeric_limits<double>::max();
    bool inside = true;
    for (const auto& b : frame) {
      const double c = std::abs(x.dot(b));
      if (c > half + 1e-9) {
        inside = false;
        break;
      }
      depth = std::min(depth, half - c);
    }
    if (!inside) continue;
    Node n;
    n.grid = g;
    n.ref = x;
    n.boundary_layer = depth < boundary_layer - 1e-9;
    nodes.push_back(std::move(n));
  }
  Geometry geo;
  geo.dim = dim;
  geo.kind = LatticeKind::box;
  geo.sides.assign(static_cast<std::size_t>(dim), side + 1);
  geo.clamp_layer = boundary_layer;
  return assemble_unit_lattice(std::move(geo), std::move(nodes));
}

Lattice build_dislocated_lattice(double rho, int k, int length, double lambda) {
  if (!(rho > 0.0 && rho <= 1.0)) throw ConstructionError("dislocated lattice: rho must lie in (0,1]");
  if (k < 1 || length < 1) throw ConstructionError("dislocated lattice: k and L must be at least 1");
  if (!(lambda > 0.0 && lambda <= 1.0)) throw ConstructionError("dislocated lattice: lambda must lie in (0,1]");

  constexpr double kWindow = 2.0;
  constexpr double kMaxCircumradius = 1.0;
  constexpr double kEps = 1e-9;
  const StructureMatrix hex = StructureMatrix::hexagonal();

  std::vector<Node> nodes;
  for (int i = -length; i <= -1; ++i)
    for (int j = -k; j <= k; ++j) {
      Node n;
      n.grid = IVector{{i, j}};
      n.ref = n.grid.cast<double>();
      n.species = Species::minus;
      nodes.push_back(std::move(n));
    }
  const int imax = static_cast<int>(std::floor(length / rho + kEps));
  const int jmax = static_cast<int>(std::floor(k / rho + kEps));
  for (int i = 0; i <= imax; ++i)
    for (int j = -jmax; j <= jmax; ++j) {
      Node n;
      n.grid = IVector{{i, j}};
      n.ref = rho * n.grid.cast<double>();
      n.species = Species::plus;
      nodes.push_back(std::move(n));
    }

  auto in_window = [&](const Node& n) {
    return n.species == Species::minus ? n.ref[0] >= -kWindow - kEps : n.ref[0] < kWindow - kEps;
  };

  std::map<std::pair<int, std::vector<int>>, int> index;
  for (std::size_t i = 0; i < nodes.size(); ++i)
    index.emplace(std::make_pair(nodes[i].species == Species::plus ? 1 : 0, to_std(nodes[i].grid)), static_cast<int>(i));
  auto lookup = [&](Species s, const IVector& g) {
    auto it = index.find({s == Species::plus ? 1 : 0, to_std(g)});
    return it == index.end() ? -1 : it->second;
  };

  const double root3 = std::sqrt(3.0);
  std::map<std::pair<int, int>, BondClass> pairs;

  // Regular bonds on each sublattice, unless both ends fall in the interface window.
  const BondSets sets = bond_sets(2);
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    for (const auto* set : {&sets.nearest, &sets.next_nearest}) {
      const BondClass cls = set == &sets.nearest ? BondClass::nearest : BondClass::next_nearest;
      for (const auto& xi : *set) {
        if (!lex_positive(xi)) continue;
        const int j = lookup(nodes[i].species, nodes[i].grid + xi);
        if (j < 0) continue;
        if (in_window(nodes[i]) && in_window(nodes[static_cast<std::size_t>(j)])) continue;
        pairs.emplace(std::make_pair(static_cast<int>(i), j), cls);
      }
    }
  }

  // Interface window: Delaunay triangulation of the hexagonal image.
  std::vector<int> window;
  std::vector<Eigen::Vector2d> points;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (!in_window(nodes[i])) continue;
    window.push_back(static_cast<int>(i));
    points.emplace_back(hex.matrix() * nodes[i].ref);
  }
  const auto triangles = detail::delaunay(points);
  std::map<std::pair<int, int>, std::vector<int>> edge_opposite;
  std::vector<std::vector<int>> simplices;
  for (const auto& t : triangles) {
    // Drop the long slivers Delaunay leaves along the top and bottom of the hull,
    // where the two sublattices end at different heights.
    const Eigen::Vector2d& pa = points[static_cast<std::size_t>(t[0])];
    const Eigen::Vector2d& pb = points[static_cast<std::size_t>(t[1])];
    const Eigen::Vector2d& pc = points[static_cast<std::size_t>(t[2])];
    const double area2 = std::abs((pb - pa).x() * (pc - pa).y() - (pb - pa).y() * (pc - pa).x());
    if ((pb - pa).norm() * (pc - pb).norm() * (pa - pc).norm() > kMaxCircumradius * 2.0 * area2) continue;
    std::vector<int> ids{window[static_cast<std::size_t>(t[0])], window[static_cast<std::size_t>(t[1])],
                         window[static_cast<std::size_t>(t[2])]};
    for (int e = 0; e < 3; ++e) {
      const int a = ids[static_cast<std::size_t>(e)], b = ids[static_cast<std::size_t>((e + 1) % 3)];
      edge_opposite[{std::min(a, b), std::max(a, b)}].push_back(ids[static_cast<std::size_t>((e + 2) % 3)]);
    }
    simplices.push_back(std::move(ids));
  }
  for (const auto& [edge, opp] : edge_opposite) pairs[edge] = BondClass::nearest;
  for (const auto& [edge, opp] : edge_opposite) {
    if (opp.size() != 2) continue;
    // Across the interface keep only pairs at the regular next-nearest distance.
    const Node& n0 = nodes[static_cast<std::size_t>(opp[0])];
    const Node& n1 = nodes[static_cast<std::size_t>(opp[1])];
    if (n0.species != n1.species && std::abs((hex.matrix() * (n1.ref - n0.ref)).norm() - root3) > 1e-9) continue;
    const std::pair<int, int> key{std::min(opp[0], opp[1]), std::max(opp[0], opp[1])};
    pairs.emplace(key, BondClass::next_nearest);
  }

  std::vector<Bond> bonds;
  for (const auto& [key, cls] : pairs) {
    Bond b;
    b.i = key.first;
    b.j = key.second;
    b.cls = cls;
    b.offset = nodes[static_cast<std::size_t>(b.j)].ref - nodes[static_cast<std::size_t>(b.i)].ref;
    b.species = nodes[static_cast<std::size_t>(b.i)].species;
    b.fixed_length = cls == BondClass::nearest ? 1.0 : root3;
    bonds.push_back(std::move(b));
  }

  // Kuhn triangles away from the window.
  const auto kuhn = kuhn_simplices(2);
  for (const auto& node : nodes) {
    for (const auto& t : kuhn) {
      std::vector<int> ids;
      bool all_window = true;
      for (const auto& v : t.vertices) {
        const int id = lookup(node.species, node.grid + v);
        if (id < 0) break;
        all_window = all_window && in_window(nodes[static_cast<std::size_t>(id)]);
        ids.push_back(id);
      }
      if (ids.size() == 3 && !all_window) simplices.push_back(std::move(ids));
    }
  }

  Geometry geo;
  geo.dim = 2;
  geo.k = k;
  geo.length = length;
  geo.lambda = lambda;
  geo.rho = rho;
  geo.kind = LatticeKind::dislocated;
  return Lattice(std::move(geo), std::move(nodes), std::move(bonds), std::move(simplices));
}

Vector InterfaceNormal::jump_datum(const Matrix& h, const Vector& x) const {
  return x.dot(normal) >= 0.0 ? Vector(h * x) : Vector(reflection * x);
}

InterfaceNormal rank_one_reflection(const StructureMatrix& h, const Vector& nu) {
  if (nu.size() != h.dim()) throw std::invalid_argument("rank_one_reflection: dimension mismatch");
  if (std::abs(nu.norm() - 1.0) > 1e-12) throw std::invalid_argument("rank_one_reflection: nu must be a unit vector");
  const Vector m = h.inverse().transpose() * nu;
  const double scale = m.norm();
  const Vector n = m / scale;
  const Matrix q = Matrix::Identity(h.dim(), h.dim()) - 2.0 * n * n.transpose();
  return {nu, q * h.matrix(), 2.0 * n / scale};
}

Matrix reflection_j(int dim) {
  Matrix j = Matrix::Identity(dim, dim);
  j(0, 0) = -1.0;
  return j;
}

std::string export_lattice(const Lattice& lattice) {
  const auto& g = lattice.geometry();
  std::string out = fmt::format("{} {} {} {:.17g} {:.17g} {}\n", g.dim, g.k, g.length, g.lambda, g.rho, to_string(g.kind));
  for (int i = 0; i < lattice.size(); ++i) {
    const auto& n = lattice.node(i);
    out += fmt::format("{}", i);
    for (Eigen::Index d = 0; d < n.ref.size(); ++d) out += fmt::format(" {:.17g}", n.ref[d]);
    out += n.species == Species::minus ? " minus\n" : " plus\n";
  }
  for (const auto& b : lattice.bonds()) out += fmt::format("{} {} {}\n", b.i, b.j, to_string(b.cls));
  return out;
}

}  // namespace kuhnwire
