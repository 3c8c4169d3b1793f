#include "kuhnwire/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>

#include <fmt/format.h>

#include "kuhnwire/optimize.hpp"

namespace kuhnwire {

namespace {

constexpr double kDetZero = 1e-12;

int sign_of(double d) { return d > kDetZero ? 1 : (d < -kDetZero ? -1 : 0); }

Matrix nearest_orthogonal(const Matrix& f, const StructureMatrix& h, int sign) {
  Eigen::JacobiSVD<Matrix> svd(f * h.matrix().transpose(), Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Matrix& u = svd.matrixU();
  const Matrix& v = svd.matrixV();
  const double d = (u * v.transpose()).determinant() > 0 ? 1.0 : -1.0;
  Vector diag = Vector::Ones(f.rows());
  diag[f.rows() - 1] = sign > 0 ? d : -d;
  return u * diag.asDiagonal() * v.transpose();
}

// Cofactor matrix: d det(A) / dA.
Matrix cofactor(const Matrix& a) {
  Matrix c(a.rows(), a.cols());
  if (a.rows() == 2) {
    c << a(1, 1), -a(1, 0), -a(0, 1), a(0, 0);
    return c;
  }
  if (a.rows() == 3) {
    const Eigen::Vector3d c0 = a.col(0), c1 = a.col(1), c2 = a.col(2);
    c.col(0) = c1.cross(c2);
    c.col(1) = c2.cross(c0);
    c.col(2) = c0.cross(c1);
    return c;
  }
  throw std::invalid_argument("cofactor: only N = 2, 3 supported");
}

std::vector<int> key_of(const IVector& v) { return {v.data(), v.data() + v.size()}; }

Matrix random_rotation(int dim, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss;
  Matrix g(dim, dim);
  for (Eigen::Index i = 0; i < g.size(); ++i) g.data()[i] = gauss(rng);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ();
  if (q.determinant() < 0) q.col(0) *= -1.0;
  return q;
}

}  // namespace

double well_distance(const Matrix& f, const StructureMatrix& h, double scale, int sign) {
  return (f - scale * nearest_orthogonal(f, h, sign) * h.matrix()).norm();
}

WellProjection polar_project(const Matrix& f, const StructureMatrix& h, double scale) {
  if (f.rows() != h.dim() || f.cols() != h.dim()) throw std::invalid_argument("polar_project: shape mismatch");
  WellProjection out;
  out.orientation = sign_of(f.determinant());
  int sign = out.orientation;
  if (sign == 0) sign = well_distance(f, h, scale, 1) <= well_distance(f, h, scale, -1) ? 1 : -1;
  out.nearest = scale * nearest_orthogonal(f, h, sign) * h.matrix();
  out.distance = (f - out.nearest).norm();
  return out;
}

Matrix simplex_gradient(const Lattice& lattice, const Deformation& u, const std::vector<int>& simplex) {
  const int dim = lattice.dim();
  Matrix dx(dim, dim), du(dim, dim);
  const int base = simplex.at(0);
  for (int c = 0; c < dim; ++c) {
    const int v = simplex.at(static_cast<std::size_t>(c + 1));
    dx.col(c) = lattice.node(v).ref - lattice.node(base).ref;
    du.col(c) = u.col(v) - u.col(base);
  }
  return du * dx.inverse();
}

const char* to_string(WellLabel label) {
  switch (label) {
    case WellLabel::rot: return "rot";
    case WellLabel::refl: return "refl";
    case WellLabel::either: return "either";
  }
  return "unknown";
}

int OrientationProfile::label_changes() const {
  int changes = 0;
  std::optional<WellLabel> last;
  for (const auto& s : slabs) {
    if (s.label == WellLabel::either) continue;
    if (last && *last != s.label) ++changes;
    last = s.label;
  }
  return changes;
}

std::vector<SlabLabel> OrientationProfile::intervals() const {
  std::vector<SlabLabel> out;
  std::vector<int> counts;
  for (const auto& s : slabs) {
    if (!out.empty() && out.back().label == s.label && out.back().end == s.start) {
      out.back().end = s.end;
      out.back().mean_dist_rot += s.mean_dist_rot;
      out.back().mean_dist_refl += s.mean_dist_refl;
      ++counts.back();
    } else {
      out.push_back(s);
      counts.push_back(1);
    }
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i].mean_dist_rot /= counts[i];
    out[i].mean_dist_refl /= counts[i];
  }
  return out;
}

std::string OrientationProfile::csv() const {
  std::string out = "slab_start,slab_end,label,mean_dist_rot,mean_dist_refl\n";
  for (const auto& s : slabs)
    out += fmt::format("{:.12g},{:.12g},{},{:.12g},{:.12g}\n", s.start, s.end, to_string(s.label), s.mean_dist_rot,
                       s.mean_dist_refl);
  return out;
}

OrientationProfile orientation_profile(const Lattice& lattice, const Deformation& u, const EnergyModel& model) {
  const auto& geo = lattice.geometry();
  if (geo.kind == LatticeKind::box) throw std::invalid_argument("orientation_profile: needs a strip lattice");
  if (u.rows() != lattice.dim() || u.cols() != lattice.size())
    throw std::invalid_argument("orientation_profile: deformation does not cover the lattice");

  struct Acc {
    int pos = 0, neg = 0, zero = 0, count = 0;
    double rot = 0.0, refl = 0.0;
  };
  std::map<int, Acc> acc;
  for (const auto& s : lattice.simplices()) {
    double lo = lattice.node(s[0]).ref[0];
    for (int v : s) lo = std::min(lo, lattice.node(v).ref[0]);
    const int slab = static_cast<int>(std::floor(lo + 1e-9));
    const bool plus = slab >= 0;
    double scale = model.scale(plus ? Species::plus : Species::minus);
    if (plus && geo.kind == LatticeKind::dislocated) scale /= geo.rho;
    const Matrix g = simplex_gradient(lattice, u, s);
    Acc& a = acc[slab];
    switch (sign_of(g.determinant())) {
      case 1: ++a.pos; break;
      case -1: ++a.neg; break;
      default: ++a.zero; break;
    }
    a.rot += well_distance(g, model.h, scale, 1);
    a.refl += well_distance(g, model.h, scale, -1);
    ++a.count;
  }

  OrientationProfile out;
  for (const auto& [slab, a] : acc) {
    SlabLabel l;
    l.start = slab;
    l.end = slab + 1;
    l.mean_dist_rot = a.rot / a.count;
    l.mean_dist_refl = a.refl / a.count;
    if ((a.pos > 0 && a.neg > 0) || (a.pos == 0 && a.neg == 0))
      l.label = WellLabel::either;
    else
      l.label = a.neg == 0 ? WellLabel::rot : WellLabel::refl;
    if (l.mean_dist_rot < kEitherTolerance && l.mean_dist_refl < kEitherTolerance) l.label = WellLabel::either;
    out.slabs.push_back(l);
  }
  return out;
}

std::vector<SimplexPair> facet_pairs(int dim) {
  if (dim < 2) throw std::invalid_argument("facet_pairs: dimension must be at least 2");
  const auto kuhn = kuhn_simplices(dim);
  // facet (sorted vertex keys) -> (cube offset, apex) of every simplex carrying it
  std::map<std::vector<std::vector<int>>, std::vector<std::pair<IVector, IVector>>> carriers;
  IVector lo = IVector::Constant(dim, -1);
  IVector c = lo;
  while (true) {
    for (const auto& t : kuhn)
      for (std::size_t skip = 0; skip < t.vertices.size(); ++skip) {
        std::vector<std::vector<int>> facet;
        for (std::size_t v = 0; v < t.vertices.size(); ++v)
          if (v != skip) facet.push_back(key_of(c + t.vertices[v]));
        std::sort(facet.begin(), facet.end());
        carriers[facet].emplace_back(c, c + t.vertices[skip]);
      }
    int d = dim - 1;
    while (d >= 0 && c[d] == 1) c[d--] = -1;
    if (d < 0) break;
    ++c[d];
  }

  std::vector<SimplexPair> out;
  std::set<std::vector<std::vector<int>>> seen;
  for (const auto& t : kuhn)
    for (std::size_t skip = 0; skip < t.vertices.size(); ++skip) {
      std::vector<IVector> facet;
      std::vector<std::vector<int>> facet_keys;
      for (std::size_t v = 0; v < t.vertices.size(); ++v)
        if (v != skip) {
          facet.push_back(t.vertices[v]);
          facet_keys.push_back(key_of(t.vertices[v]));
        }
      std::sort(facet_keys.begin(), facet_keys.end());
      const IVector& x0 = t.vertices[skip];
      const auto& list = carriers.at(facet_keys);
      for (const auto& [cube, apex] : list) {
        if (apex == x0) continue;
        // Translation class: all points shifted so the lexicographic minimum is 0,
        // facet and apex pair kept as separate sorted groups.
        std::vector<IVector> all = facet;
        all.push_back(x0);
        all.push_back(apex);
        IVector origin = *std::min_element(all.begin(), all.end(), [](const IVector& a, const IVector& b) {
          return std::lexicographical_compare(a.data(), a.data() + a.size(), b.data(), b.data() + b.size());
        });
        std::vector<std::vector<int>> fk, ak;
        for (const auto& f : facet) fk.push_back(key_of(f - origin));
        ak.push_back(key_of(x0 - origin));
        ak.push_back(key_of(apex - origin));
        std::sort(fk.begin(), fk.end());
        std::sort(ak.begin(), ak.end());
        fk.insert(fk.end(), ak.begin(), ak.end());
        if (!seen.insert(fk).second) continue;
        SimplexPair p;
        p.points.push_back(x0);
        p.points.insert(p.points.end(), facet.begin(), facet.end());
        p.points.push_back(apex);
        p.same_cube = cube.isZero();
        out.push_back(std::move(p));
      }
    }
  return out;
}

double pair_cell_energy(const SimplexPair& pair, const Matrix& positions, const StructureMatrix& h, double p) {
  double e = 0.0;
  const std::size_t n = pair.points.size();
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a + 1; b < n; ++b) {
      const double ref = (h.matrix() * (pair.points[b] - pair.points[a]).cast<double>()).norm();
      const double cur = (positions.col(static_cast<Eigen::Index>(b)) - positions.col(static_cast<Eigen::Index>(a))).norm();
      e += std::pow(std::abs(cur - ref), p);
    }
  return e;
}

namespace {

// Oriented determinants of T and S and their gradients with respect to positions.
struct Orientation {
  double dt = 0.0, ds = 0.0;
  Matrix grad_t, grad_s;
};

Orientation orientation(const SimplexPair& pair, const Matrix& pos) {
  const int dim = static_cast<int>(pair.points.front().size());
  const Eigen::Index apex = dim + 1;
  Matrix et(dim, dim), es(dim, dim), rt(dim, dim), rs(dim, dim);
  for (int c = 0; c < dim; ++c) {
    et.col(c) = pos.col(c + 1) - pos.col(0);
    es.col(c) = pos.col(c + 1) - pos.col(apex);
    rt.col(c) = (pair.points[static_cast<std::size_t>(c + 1)] - pair.points[0]).cast<double>();
    rs.col(c) = (pair.points[static_cast<std::size_t>(c + 1)] - pair.points.back()).cast<double>();
  }
  const double st = rt.determinant() > 0 ? 1.0 : -1.0;
  const double ss = rs.determinant() > 0 ? 1.0 : -1.0;
  Orientation o;
  o.dt = st * et.determinant();
  o.ds = ss * es.determinant();
  const Matrix ct = st * cofactor(et), cs = ss * cofactor(es);
  o.grad_t = Matrix::Zero(dim, dim + 2);
  o.grad_s = Matrix::Zero(dim, dim + 2);
  for (int c = 0; c < dim; ++c) {
    o.grad_t.col(c + 1) += ct.col(c);
    o.grad_t.col(0) -= ct.col(c);
    o.grad_s.col(c + 1) += cs.col(c);
    o.grad_s.col(apex) -= cs.col(c);
  }
  return o;
}

}  // namespace

double orientation_product(const SimplexPair& pair, const Matrix& positions) {
  const auto o = orientation(pair, positions);
  return o.dt * o.ds;
}

InversionCost inversion_cost(const StructureMatrix& h, double p, int restarts, std::uint64_t seed) {
  const int dim = h.dim();
  if (dim != 2 && dim != 3) throw std::invalid_argument("inversion_cost: N must be 2 or 3");
  if (!(p > 1.0)) throw std::invalid_argument("inversion_cost: p must exceed 1");
  if (restarts < 1) throw std::invalid_argument("inversion_cost: need at least one restart");

  const auto pairs = facet_pairs(dim);
  const Eigen::Index npts = dim + 2;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);

  InversionCost best;
  best.value = std::numeric_limits<double>::infinity();
  best.seed = seed;

  for (std::size_t pi = 0; pi < pairs.size(); ++pi) {
    const auto& pair = pairs[pi];
    Matrix ref(dim, npts);
    for (Eigen::Index a = 0; a < npts; ++a) ref.col(a) = h.matrix() * pair.points[static_cast<std::size_t>(a)].cast<double>();

    for (int r = 0; r < restarts; ++r) {
      Matrix start = ref;
      const int kind = r % 3;
      if (kind == 0) {
        // Apex of S reflected across the shared facet.
        Matrix span(dim, dim - 1);
        for (int c = 0; c + 1 < dim; ++c) span.col(c) = ref.col(c + 2) - ref.col(1);
        Eigen::JacobiSVD<Matrix> svd(span, Eigen::ComputeFullU);
        const Vector n = svd.matrixU().col(dim - 1);
        const Vector off = ref.col(npts - 1) - ref.col(1);
        start.col(npts - 1) = ref.col(npts - 1) - 2.0 * off.dot(n) * n;
        for (Eigen::Index i = 0; i < start.size(); ++i) start.data()[i] += 0.05 * unit(rng);
      } else if (kind == 1) {
        // Apex collapsed onto the facet centroid.
        Vector centroid = Vector::Zero(dim);
        for (int c = 1; c <= dim; ++c) centroid += ref.col(c);
        start.col(npts - 1) = centroid / dim;
        for (Eigen::Index i = 0; i < start.size(); ++i) start.data()[i] += 0.05 * unit(rng);
      } else {
        for (Eigen::Index i = 0; i < start.size(); ++i) start.data()[i] += 0.7 * unit(rng);
      }

      Vector x = Eigen::Map<const Vector>(start.data(), start.size());
      double mu = 1e4;
      MinimizeOptions opts;
      opts.tol = 1e-11;
      opts.max_iters = 400;
      auto run_stage = [&](double weight) {
        const Objective obj = [&](const Vector& v, Vector& g) {
          const Matrix pos = Eigen::Map<const Matrix>(v.data(), dim, npts);
          Matrix grad = Matrix::Zero(dim, npts);
          double e = 0.0;
          for (Eigen::Index a = 0; a < npts; ++a)
            for (Eigen::Index b = a + 1; b < npts; ++b) {
              const double len = (ref.col(b) - ref.col(a)).norm();
              const Vector d = pos.col(b) - pos.col(a);
              const double cur = d.norm();
              const double z = cur - len;
              e += std::pow(std::abs(z), p);
              if (cur > 0.0) {
                const double slope = z == 0.0 ? 0.0 : p * std::pow(std::abs(z), p - 1.0) * (z > 0 ? 1.0 : -1.0);
                grad.col(b) += slope / cur * d;
                grad.col(a) -= slope / cur * d;
              }
            }
          const auto o = orientation(pair, pos);
          const double q = o.dt * o.ds;
          if (q > 0.0) {
            e += weight * q * q;
            grad += 2.0 * weight * q * (o.ds * o.grad_t + o.dt * o.grad_s);
          }
          g = Eigen::Map<const Vector>(grad.data(), grad.size());
          return e;
        };
        lbfgs(obj, x, opts);
      };
      int stage = 0;
      for (; stage < 5; ++stage, mu *= 10.0) run_stage(mu);
      Matrix pos = Eigen::Map<const Matrix>(x.data(), dim, npts);
      while (orientation_product(pair, pos) > 1e-8 && stage < 10) {
        run_stage(mu);
        mu *= 10.0;
        ++stage;
        pos = Eigen::Map<const Matrix>(x.data(), dim, npts);
      }
      ++best.attempts;
      if (orientation_product(pair, pos) > 1e-8) continue;
      // Score against the integer lattice reference.
      const double e = pair_cell_energy(pair, pos, h, p);
      if (e < best.value) {
        best.value = e;
        best.pair = static_cast<int>(pi);
        best.positions = pos;
        best.feasible = true;
      }
    }
  }
  if (!best.feasible) throw std::runtime_error("inversion_cost: no restart reached a feasible configuration");
  return best;
}

std::optional<double> rigidity_ratio(const Matrix& f, const Simplex& t, const EnergyModel& model) {
  const double e = cell_energy(f, t, model);
  const double dist = polar_project(f, model.h).distance;
  const double num = std::pow(dist, model.p);
  if (e < 1e-14) {
    if (num < 1e-10) return std::nullopt;
    return std::numeric_limits<double>::infinity();
  }
  return num / e;
}

RigidityProbe rigidity_probe(const StructureMatrix& h, double p, int sample_count, std::uint64_t seed) {
  if (sample_count < 100) throw std::invalid_argument("rigidity_probe: sample_count must be at least 100");
  const int dim = h.dim();
  EnergyModel model;
  model.p = p;
  model.h = h;
  model.validate();
  const auto kuhn = kuhn_simplices(dim);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  std::uniform_real_distribution<double> unit(-2.0, 2.0);
  const Matrix j = reflection_j(dim);

  RigidityProbe out;
  for (int s = 0; s < sample_count; ++s) {
    Matrix f(dim, dim);
    switch (s % 3) {
      case 0: {
        Matrix r = random_rotation(dim, rng);
        if (s % 2) r = r * j;
        const double amp = std::pow(10.0, -3.0 * std::uniform_real_distribution<double>(0.0, 1.0)(rng));
        f = r * h.matrix();
        for (Eigen::Index i = 0; i < f.size(); ++i) f.data()[i] += amp * gauss(rng);
        break;
      }
      case 1:
        for (Eigen::Index i = 0; i < f.size(); ++i) f.data()[i] = 3.0 * gauss(rng);
        break;
      default:
        for (Eigen::Index i = 0; i < f.size(); ++i) f.data()[i] = unit(rng);
        break;
    }
    bool used = false;
    for (const auto& t : kuhn) {
      const auto ratio = rigidity_ratio(f, t, model);
      if (!ratio) continue;
      used = true;
      if (*ratio > out.ratio) {
        out.ratio = *ratio;
        out.argmax = f;
      }
    }
    if (used) ++out.samples;
    else ++out.skipped;
  }
  return out;
}

}  // namespace kuhnwire
