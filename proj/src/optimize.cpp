#include "kuhnwire/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <future>
#include <limits>
#include <random>
#include <stdexcept>

namespace kuhnwire {

ClampRegion affine_region(std::string name, std::function<bool(const Node&)> contains, Matrix a, Vector b) {
  if (a.rows() != a.cols() || b.size() != a.rows()) throw std::invalid_argument("affine clamp: shape mismatch");
  return {std::move(name), std::move(contains),
          [a = std::move(a), b = std::move(b)](const Node& n) -> Vector { return a * n.grid.cast<double>() + b; }};
}

std::vector<int> BoundaryCondition::assign(const Lattice& lattice) const {
  std::vector<int> owner(static_cast<std::size_t>(lattice.size()), -1);
  for (int n = 0; n < lattice.size(); ++n)
    for (std::size_t r = 0; r < regions_.size(); ++r) {
      if (!regions_[r].contains(lattice.node(n))) continue;
      if (owner[static_cast<std::size_t>(n)] >= 0)
        throw std::invalid_argument("boundary condition: regions '" + regions_[static_cast<std::size_t>(owner[static_cast<std::size_t>(n)])].name +
                                    "' and '" + regions_[r].name + "' overlap");
      owner[static_cast<std::size_t>(n)] = static_cast<int>(r);
    }
  return owner;
}

void BoundaryCondition::apply(const Lattice& lattice, Deformation& u) const {
  const auto owner = assign(lattice);
  for (int n = 0; n < lattice.size(); ++n) {
    const int r = owner[static_cast<std::size_t>(n)];
    if (r >= 0) u.col(n) = regions_[static_cast<std::size_t>(r)].position(lattice.node(n));
  }
}

BoundaryCondition BoundaryCondition::end_slabs(double left_edge, const Matrix& a_left, double right_edge,
                                               const Matrix& a_right) {
  if (!(left_edge < right_edge)) throw std::invalid_argument("end slabs overlap");
  BoundaryCondition bc;
  const Vector zero = Vector::Zero(a_left.rows());
  bc.add(affine_region("left", [left_edge](const Node& n) { return n.ref[0] <= left_edge + 1e-9; }, a_left, zero));
  bc.add(affine_region("right", [right_edge](const Node& n) { return n.ref[0] >= right_edge - 1e-9; }, a_right, zero));
  return bc;
}

namespace {

struct Problem {
  const EnergyFunctional& energy;
  const LoadSpec* loads;
  Matrix load_grad;
  std::vector<int> free_nodes;
  int dim;
  mutable Deformation u;
  mutable Matrix grad;

  void scatter(const Vector& x) const {
    for (std::size_t f = 0; f < free_nodes.size(); ++f)
      u.col(free_nodes[f]) = x.segment(static_cast<Eigen::Index>(f) * dim, dim);
  }

  Vector gather(const Deformation& src) const {
    Vector x(static_cast<Eigen::Index>(free_nodes.size()) * dim);
    for (std::size_t f = 0; f < free_nodes.size(); ++f)
      x.segment(static_cast<Eigen::Index>(f) * dim, dim) = src.col(free_nodes[f]);
    return x;
  }

  double eval(const Vector& x, Vector& g) const {
    scatter(x);
    double f = energy.value_and_gradient(u, grad);
    if (loads) {
      f -= (load_grad.array() * u.array()).sum();
      grad -= load_grad;
    }
    g = gather(grad);
    return f;
  }
};

double inf_norm(const Vector& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

}  // namespace

LbfgsReport lbfgs(const Objective& fn, Vector& x, const MinimizeOptions& opts) {
  LbfgsReport rep;
  Vector g;
  double f = fn(x, g);
  if (!std::isfinite(f)) throw std::invalid_argument("lbfgs: non-finite objective at the starting point");

  std::deque<std::pair<Vector, Vector>> history;  // (s, y)
  auto converged = [&](double fv, const Vector& gv) { return inf_norm(gv) <= opts.tol * std::max(1.0, std::abs(fv)); };

  constexpr double kArmijo = 1e-4;
  constexpr int kMaxBacktracks = 60;
  int it = 0;
  bool done = converged(f, g);
  while (!done && it < opts.max_iters) {
    // Two-loop recursion.
    Vector d = -g;
    std::vector<double> alpha(history.size());
    for (std::size_t h = history.size(); h-- > 0;) {
      const auto& [s, y] = history[h];
      alpha[h] = s.dot(d) / y.dot(s);
      d -= alpha[h] * y;
    }
    if (!history.empty()) {
      const auto& [s, y] = history.back();
      d *= s.dot(y) / y.dot(y);
    }
    for (std::size_t h = 0; h < history.size(); ++h) {
      const auto& [s, y] = history[h];
      const double beta = y.dot(d) / y.dot(s);
      d += (alpha[h] - beta) * s;
    }
    double slope = g.dot(d);
    if (!(slope < 0.0)) {
      history.clear();
      ++rep.restarts;
      d = -g;
      slope = g.dot(d);
    }
    // A steepest-descent step is scaled so no coordinate moves more than one unit.
    double t = history.empty() ? std::min(1.0, 1.0 / std::max(inf_norm(d), 1e-300)) : 1.0;

    Vector x_new, g_new;
    double f_new = f;
    bool accepted = false;
    for (int bt = 0; bt < kMaxBacktracks; ++bt, t *= 0.5) {
      x_new = x + t * d;
      f_new = fn(x_new, g_new);
      if (!std::isfinite(f_new)) continue;
      if (f_new <= f + kArmijo * t * slope) {
        accepted = true;
        break;
      }
      // Decrease lost in rounding: accept any non-increasing step.
      if (std::abs(kArmijo * t * slope) < 1e-15 * std::max(1.0, std::abs(f)) && f_new <= f) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      if (history.empty()) break;  // stalled even along -g
      history.clear();
      ++rep.restarts;
      continue;
    }
    ++it;
    Vector s = x_new - x, y = g_new - g;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm() && sy > 0.0) {
      history.emplace_back(std::move(s), std::move(y));
      if (static_cast<int>(history.size()) > opts.memory) history.pop_front();
    } else {
      history.clear();
      ++rep.restarts;
    }
    x = std::move(x_new);
    g = std::move(g_new);
    f = f_new;
    done = converged(f, g);
  }
  rep.value = f;
  rep.gradient_inf_norm = inf_norm(g);
  rep.iterations = it;
  rep.converged = done;
  return rep;
}

MinimizeResult minimize(const EnergyFunctional& energy, const BoundaryCondition& bc, Deformation init,
                        const MinimizeOptions& opts, const LoadSpec* loads) {
  const Lattice& lattice = energy.lattice();
  if (init.rows() != lattice.dim() || init.cols() != lattice.size())
    throw std::invalid_argument("minimize: initial deformation does not cover the lattice");
  bc.apply(lattice, init);

  Problem prob{energy, loads, Matrix(), {}, lattice.dim(), init, Matrix()};
  if (loads && !loads->empty()) prob.load_grad = load_gradient(lattice, *loads);
  else prob.loads = nullptr;
  const auto owner = bc.assign(lattice);
  for (int n = 0; n < lattice.size(); ++n)
    if (owner[static_cast<std::size_t>(n)] < 0) prob.free_nodes.push_back(n);

  Vector x = prob.gather(init);
  const auto rep = lbfgs([&prob](const Vector& v, Vector& g) { return prob.eval(v, g); }, x, opts);

  MinimizeResult res;
  prob.scatter(x);
  res.u = prob.u;
  res.energy = rep.value;
  res.gradient_inf_norm = rep.gradient_inf_norm;
  res.iterations = rep.iterations;
  res.converged = rep.converged;
  res.restarts_used = rep.restarts;
  return res;
}

InitKind parse_init_kind(const std::string& name) {
  if (name == "sharp") return InitKind::sharp;
  if (name == "linear-blend") return InitKind::linear_blend;
  if (name == "folded") return InitKind::folded;
  if (name == "random-perturb") return InitKind::random_perturb;
  throw std::invalid_argument("unknown initializer kind '" + name + "'");
}

const char* to_string(InitKind kind) {
  switch (kind) {
    case InitKind::sharp: return "sharp";
    case InitKind::linear_blend: return "linear-blend";
    case InitKind::folded: return "folded";
    case InitKind::random_perturb: return "random-perturb";
  }
  return "unknown";
}

Deformation make_initializer(const Lattice& lattice, const StructureMatrix& h, const InitOptions& opts) {
  const int dim = lattice.dim();
  if (opts.p1.rows() != dim || opts.p1.cols() != dim || opts.p2.rows() != dim || opts.p2.cols() != dim)
    throw std::invalid_argument("initializer: well matrices have wrong shape");
  const Matrix left = opts.p1 * h.matrix();
  const Matrix right = opts.p2 * h.matrix();
  Deformation u(dim, lattice.size());

  switch (opts.kind) {
    case InitKind::sharp:
    case InitKind::folded: {
      const Matrix r = opts.kind == InitKind::folded ? Matrix(reflection_j(dim) * right) : right;
      for (int n = 0; n < lattice.size(); ++n) {
        const Node& node = lattice.node(n);
        const Vector g = node.grid.cast<double>();
        u.col(n) = node.ref[0] < 0.0 ? left * g : r * g;
      }
      break;
    }
    case InitKind::linear_blend: {
      if (!(opts.width > 0.0)) throw std::invalid_argument("initializer: blend width must be positive");
      for (int n = 0; n < lattice.size(); ++n) {
        const Node& node = lattice.node(n);
        const Vector g = node.grid.cast<double>();
        const double s = std::clamp((node.ref[0] + 0.5 * opts.width) / opts.width, 0.0, 1.0);
        u.col(n) = (1.0 - s) * (left * g) + s * (right * g);
      }
      break;
    }
    case InitKind::random_perturb: {
      if (opts.base == InitKind::random_perturb) throw std::invalid_argument("initializer: perturbation needs a base kind");
      InitOptions base = opts;
      base.kind = opts.base;
      u = make_initializer(lattice, h, base);
      std::mt19937_64 rng(opts.seed);
      std::uniform_real_distribution<double> noise(-opts.amplitude, opts.amplitude);
      for (Eigen::Index c = 0; c < u.cols(); ++c)
        for (Eigen::Index r = 0; r < u.rows(); ++r) u(r, c) += noise(rng);
      break;
    }
  }
  return u;
}

std::vector<NamedInit> default_initializers(const Lattice& lattice, const StructureMatrix& h, const Matrix& p1,
                                            const Matrix& p2, double width, std::uint64_t seed, int perturbations,
                                            double amplitude) {
  std::vector<NamedInit> out;
  const InitKind bases[] = {InitKind::sharp, InitKind::linear_blend, InitKind::folded};
  InitOptions o;
  o.p1 = p1;
  o.p2 = p2;
  o.width = width;
  o.amplitude = amplitude;
  for (InitKind b : bases) {
    o.kind = b;
    out.push_back({to_string(b), make_initializer(lattice, h, o)});
  }
  std::uint64_t stream = 0;
  for (InitKind b : bases)
    for (int r = 0; r < perturbations; ++r) {
      o.kind = InitKind::random_perturb;
      o.base = b;
      o.seed = seed * 1000003ULL + (++stream);
      out.push_back({std::string(to_string(b)) + "+noise" + std::to_string(r), make_initializer(lattice, h, o)});
    }
  return out;
}

MultiStartResult multi_start(const EnergyFunctional& energy, const BoundaryCondition& bc,
                             const std::vector<NamedInit>& inits, const MinimizeOptions& opts, const LoadSpec* loads) {
  if (inits.empty()) throw std::invalid_argument("multi_start: no initializers");
  MultiStartResult out;
  out.runs.resize(inits.size());
  const std::size_t width = static_cast<std::size_t>(std::max(1, opts.threads));
  MinimizeOptions inner = opts;
  inner.threads = 1;
  for (std::size_t lo = 0; lo < inits.size(); lo += width) {
    const std::size_t hi = std::min(inits.size(), lo + width);
    if (hi - lo == 1) {
      out.runs[lo] = minimize(energy, bc, inits[lo].u, inner, loads);
    } else {
      std::vector<std::future<MinimizeResult>> jobs;
      for (std::size_t i = lo; i < hi; ++i)
        jobs.push_back(std::async(std::launch::async, [&, i] { return minimize(energy, bc, inits[i].u, inner, loads); }));
      for (std::size_t i = lo; i < hi; ++i) out.runs[i] = jobs[i - lo].get();
    }
    for (std::size_t i = lo; i < hi; ++i) out.runs[i].label = inits[i].label;
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < out.runs.size(); ++i)
    if (out.runs[i].energy < out.runs[best].energy) best = i;
  out.best = out.runs[best];
  return out;
}

double fd_check(const EnergyFunctional& energy, const Deformation& u, double step) {
  if (!(step > 0.0)) throw std::invalid_argument("fd_check: step must be positive");
  Matrix grad;
  energy.value_and_gradient(u, grad);
  const double scale = std::max(grad.size() ? grad.cwiseAbs().maxCoeff() : 0.0, 1e-8);
  Deformation probe = u;
  double worst = 0.0;
  for (Eigen::Index n = 0; n < u.cols(); ++n)
    for (Eigen::Index c = 0; c < u.rows(); ++c) {
      const double x0 = probe(c, n);
      probe(c, n) = x0 + step;
      const double up = energy.incident_value(probe, static_cast<int>(n));
      probe(c, n) = x0 - step;
      const double down = energy.incident_value(probe, static_cast<int>(n));
      probe(c, n) = x0;
      const double fd = (up - down) / (2.0 * step);
      worst = std::max(worst, std::abs(fd - grad(c, n)) / scale);
    }
  return worst;
}

}  // namespace kuhnwire
