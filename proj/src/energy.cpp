#include "kuhnwire/energy.hpp"

#include <cmath>
#include <stdexcept>
#include <thread>

namespace kuhnwire {

namespace {

// |z|^p with the common exponents special-cased.
double power(double z, double p) {
  const double a = std::abs(z);
  if (p == 2.0) return a * a;
  if (p == 4.0) return (a * a) * (a * a);
  return std::pow(a, p);
}

// d/dz |z|^p
double power_slope(double z, double p) {
  if (p == 2.0) return 2.0 * z;
  if (p == 4.0) return 4.0 * z * z * z;
  if (z == 0.0) return 0.0;
  return p * std::pow(std::abs(z), p - 1.0) * (z > 0 ? 1.0 : -1.0);
}

}  // namespace

void EnergyModel::validate() const {
  if (!(p > 1.0)) throw std::invalid_argument("energy model: p must exceed 1");
  if (!(c1 > 0.0) || !(c2 > 0.0)) throw std::invalid_argument("energy model: c1 and c2 must be positive");
  if (!(lambda > 0.0 && lambda <= 1.0)) throw std::invalid_argument("energy model: lambda must lie in (0,1]");
  if (!(minus_scale > 0.0)) throw std::invalid_argument("energy model: minus_scale must be positive");
  if (!(surface_prefactor > 0.0)) throw std::invalid_argument("energy model: surface prefactor must be positive");
}

double cell_energy(const Matrix& f, const Simplex& t, const EnergyModel& model, double scale) {
  const Matrix& h = model.h.matrix();
  double e = 0.0;
  for (std::size_t a = 0; a < t.vertices.size(); ++a)
    for (std::size_t b = a + 1; b < t.vertices.size(); ++b) {
      const Vector d = (t.vertices[b] - t.vertices[a]).cast<double>();
      e += power((f * d).norm() - scale * (h * d).norm(), model.p);
    }
  return e;
}

EnergyFunctional::EnergyFunctional(const Lattice& lattice, const EnergyModel& model)
    : lattice_(&lattice), model_(model) {
  model_.validate();
  if (model_.h.dim() != lattice.dim()) throw std::invalid_argument("energy: H and lattice dimensions differ");
  terms_.reserve(lattice.bonds().size());
  incident_.resize(static_cast<std::size_t>(lattice.size()));
  for (const auto& b : lattice.bonds()) {
    const double length = b.fixed_length ? *b.fixed_length : (model_.h.matrix() * b.offset).norm();
    const double coef = model_.surface_prefactor * model_.coefficient(b.cls);
    incident_[static_cast<std::size_t>(b.i)].push_back(static_cast<int>(terms_.size()));
    incident_[static_cast<std::size_t>(b.j)].push_back(static_cast<int>(terms_.size()));
    terms_.push_back({b.i, b.j, coef, model_.scale(b.species) * length});
  }
}

void EnergyFunctional::check(const Deformation& u) const {
  if (u.rows() != lattice_->dim() || u.cols() != lattice_->size())
    throw std::invalid_argument("energy: deformation does not cover the lattice");
}

double EnergyFunctional::term_value(const Term& t, const Deformation& u) const {
  return t.coef * power((u.col(t.j) - u.col(t.i)).norm() - t.eq, model_.p);
}

template <class Fn>
void EnergyFunctional::for_chunks(Fn&& fn) const {
  const std::size_t n = terms_.size();
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(threads_), std::max<std::size_t>(n / 1024, 1));
  if (workers <= 1) {
    fn(std::size_t{0}, n);
    return;
  }
  std::vector<std::thread> pool;
  const std::size_t step = (n + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t lo = w * step, hi = std::min(n, lo + step);
    if (lo < hi) pool.emplace_back([&fn, lo, hi] { fn(lo, hi); });
  }
  for (auto& t : pool) t.join();
}

double EnergyFunctional::value(const Deformation& u) const {
  check(u);
  if (threads_ == 1) {
    double e = 0.0;
    for (const auto& t : terms_) e += term_value(t, u);
    return e;
  }
  std::vector<double> parts(terms_.size());
  for_chunks([&](std::size_t lo, std::size_t hi) {
    for (std::size_t b = lo; b < hi; ++b) parts[b] = term_value(terms_[b], u);
  });
  double e = 0.0;
  for (double v : parts) e += v;
  return e;
}

double EnergyFunctional::value_and_gradient(const Deformation& u, Matrix& grad) const {
  check(u);
  const int dim = lattice_->dim();
  grad.setZero(dim, lattice_->size());
  const std::size_t n = terms_.size();
  std::vector<double> parts(n);
  Matrix forces(dim, static_cast<Eigen::Index>(n));
  auto work = [&](std::size_t lo, std::size_t hi) {
    for (std::size_t b = lo; b < hi; ++b) {
      const Term& t = terms_[b];
      const Vector d = u.col(t.j) - u.col(t.i);
      const double r = d.norm();
      const double z = r - t.eq;
      parts[b] = t.coef * power(z, model_.p);
      if (r > 0.0)
        forces.col(static_cast<Eigen::Index>(b)) = (t.coef * power_slope(z, model_.p) / r) * d;
      else
        forces.col(static_cast<Eigen::Index>(b)).setZero();
    }
  };
  if (threads_ == 1)
    work(0, n);
  else
    for_chunks(work);
  double e = 0.0;
  for (std::size_t b = 0; b < n; ++b) {
    e += parts[b];
    const auto f = forces.col(static_cast<Eigen::Index>(b));
    grad.col(terms_[b].j) += f;
    grad.col(terms_[b].i) -= f;
  }
  return e;
}

double EnergyFunctional::species_value(const Deformation& u, Species s) const {
  check(u);
  double e = 0.0;
  for (std::size_t b = 0; b < terms_.size(); ++b)
    if (lattice_->bonds()[b].species == s) e += term_value(terms_[b], u);
  return e;
}

double EnergyFunctional::incident_value(const Deformation& u, int node) const {
  check(u);
  double e = 0.0;
  for (int b : incident_.at(static_cast<std::size_t>(node))) e += term_value(terms_[static_cast<std::size_t>(b)], u);
  return e;
}

double EnergyFunctional::bond_value(const Deformation& u, int bond) const {
  check(u);
  return term_value(terms_.at(static_cast<std::size_t>(bond)), u);
}

double total_energy(const Lattice& lattice, const Deformation& u, const EnergyModel& model) {
  return EnergyFunctional(lattice, model).value(u);
}

Matrix energy_gradient(const Lattice& lattice, const Deformation& u, const EnergyModel& model) {
  Matrix g;
  EnergyFunctional(lattice, model).value_and_gradient(u, g);
  return g;
}

Deformation affine_deformation(const Lattice& lattice, const Matrix& a, const Vector& b) {
  Deformation u = a * lattice.reference();
  u.colwise() += b;
  return u;
}

bool LoadSpec::empty() const {
  return (tangential.size() == 0 || tangential.isZero(0.0)) && radial.empty();
}

Matrix load_gradient(const Lattice& lattice, const LoadSpec& loads) {
  const auto& g = lattice.geometry();
  if (g.kind != LatticeKind::strip) throw std::invalid_argument("loads are defined on strip lattices only");
  const int dim = lattice.dim();
  if (loads.tangential.size() != 0 && loads.tangential.size() != dim)
    throw std::invalid_argument("load: tangential force has wrong dimension");
  if (static_cast<int>(loads.radial.size()) > dim - 1) throw std::invalid_argument("load: too many radial fields");

  Matrix grad = Matrix::Zero(dim, lattice.size());
  for (int n = 0; n < lattice.size(); ++n) {
    const IVector& x = lattice.node(n).grid;
    if (loads.tangential.size() != 0) {
      if (x[0] == g.length) grad.col(n) += loads.tangential;
      if (x[0] == -g.length) grad.col(n) -= loads.tangential;
    }
    for (std::size_t r = 0; r < loads.radial.size(); ++r) {
      if (!loads.radial[r]) continue;
      const int axis = static_cast<int>(r) + 1;
      if (x[axis] != g.k && x[axis] != -g.k) continue;
      const Vector f = loads.radial[r](static_cast<double>(x[0]));
      if (f.size() != dim) throw std::invalid_argument("load: radial field has wrong dimension");
      if (x[axis] == g.k) grad.col(n) += f;
      else grad.col(n) -= f;
    }
  }
  return grad;
}

double load_value(const Lattice& lattice, const Deformation& u, const LoadSpec& loads) {
  if (u.rows() != lattice.dim() || u.cols() != lattice.size())
    throw std::invalid_argument("load: deformation does not cover the lattice");
  // The load is linear in u.
  const Matrix g = load_gradient(lattice, loads);
  return (g.array() * u.array()).sum();
}

}  // namespace kuhnwire
