#include "kuhnwire/transitions.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include <fmt/format.h>

namespace kuhnwire {

namespace {

bool in_scaled_orthogonal(const Matrix& p, double s) {
  const Matrix gram = p.transpose() * p;
  return (gram - s * s * Matrix::Identity(p.rows(), p.cols())).norm() < 1e-9;
}

bool nearly_zero(double v) { return std::abs(v) <= 1e-12; }

}  // namespace

std::pair<double, double> species_scales(const Matrix& p1, const Matrix& p2, double lambda) {
  if (p1.rows() != p1.cols() || p1.rows() != p2.rows() || p2.rows() != p2.cols())
    throw std::invalid_argument("well pair: matrices must be square and of equal size");
  if (in_scaled_orthogonal(p1, 1.0) && in_scaled_orthogonal(p2, 1.0)) return {1.0, 1.0};
  if (in_scaled_orthogonal(p1, lambda) && in_scaled_orthogonal(p2, lambda)) return {lambda, lambda};
  if (in_scaled_orthogonal(p1, 1.0) && in_scaled_orthogonal(p2, lambda)) return {1.0, lambda};
  throw std::invalid_argument("well pair: expected (O(N), O(N)), (lambda O(N), lambda O(N)) or (O(N), lambda O(N))");
}

TransitionSpec transition_spec(const Matrix& p1, const Matrix& p2, int k, const EnergyModel& model, LatticeKind kind,
                               double rho) {
  model.validate();
  if (k < 1) throw std::invalid_argument("transition: k must be at least 1");
  if (kind == LatticeKind::box) throw std::invalid_argument("transition: needs a strip or dislocated lattice");
  if (kind == LatticeKind::dislocated &&
      (model.h.dim() != 2 || (model.h.matrix() - StructureMatrix::hexagonal().matrix()).norm() > 1e-12))
    throw std::invalid_argument("transition: the dislocated lattice needs the hexagonal H");
  const auto [s1, s2] = species_scales(p1, p2, model.lambda);
  TransitionSpec spec;
  spec.dim = model.h.dim();
  spec.k = k;
  spec.model = model;
  spec.model.minus_scale = s1;
  spec.model.lambda = s2;
  spec.kind = kind;
  spec.rho = kind == LatticeKind::dislocated ? rho : 1.0;
  spec.left = p1 * model.h.matrix();
  spec.right = p2 * model.h.matrix();
  return spec;
}

Lattice transition_lattice(const TransitionSpec& spec, int m) {
  if (spec.kind == LatticeKind::dislocated) {
    if (spec.dim != 2) throw ConstructionError("dislocated transitions need N = 2");
    return build_dislocated_lattice(spec.rho, spec.k, m, spec.model.lambda);
  }
  return build_strip_lattice(spec.dim, spec.k, m, spec.model.lambda);
}

BoundaryCondition transition_clamps(const TransitionSpec& spec, int m) {
  const int w = bond_sets(spec.dim).max_axial_extent();
  if (m <= w) throw std::invalid_argument(fmt::format("transition: M = {} leaves no free slab (clamp width {})", m, w));
  return BoundaryCondition::end_slabs(-m + w, spec.left, m - w, spec.right);
}

GammaEstimate gamma_estimate(const TransitionSpec& spec) {
  const auto& ms = spec.m_schedule;
  if (ms.empty()) throw std::invalid_argument("gamma_estimate: empty M schedule");
  for (std::size_t i = 1; i < ms.size(); ++i)
    if (ms[i] <= ms[i - 1]) throw std::invalid_argument("gamma_estimate: M schedule must be increasing");

  const StructureMatrix unit = StructureMatrix::identity(spec.dim);
  const double width = spec.blend_width > 0 ? spec.blend_width : 2.0 * spec.k;
  GammaEstimate out;
  std::shared_ptr<const Lattice> prev_lattice;
  Deformation prev_u;

  for (std::size_t step = 0; step < ms.size(); ++step) {
    const int m = ms[step];
    auto lattice = std::make_shared<const Lattice>(transition_lattice(spec, m));
    EnergyFunctional energy(*lattice, spec.model);
    const BoundaryCondition bc = transition_clamps(spec, m);

    auto inits = default_initializers(*lattice, unit, spec.left, spec.right, width,
                                      spec.seed * 7919ULL + static_cast<std::uint64_t>(m), spec.perturbations);
    if (prev_lattice) {
      // Previous minimizer, extended affinely: same energy, so estimates cannot grow with M.
      Deformation ext(spec.dim, lattice->size());
      for (int n = 0; n < lattice->size(); ++n) {
        const Node& node = lattice->node(n);
        const auto old = prev_lattice->find(node.grid, node.species);
        const Vector g = node.grid.cast<double>();
        ext.col(n) = old ? Vector(prev_u.col(*old)) : Vector(node.ref[0] < 0 ? spec.left * g : spec.right * g);
      }
      inits.push_back({"extended", std::move(ext)});
    }
    if (step + 1 == ms.size())
      for (std::size_t e = 0; e < spec.extra_inits.size(); ++e)
        inits.push_back({"extra" + std::to_string(e), spec.extra_inits[e](*lattice)});

    const auto runs = multi_start(energy, bc, inits, spec.opts);
    GammaStep s;
    s.m = m;
    s.value = runs.best.energy;
    s.converged = runs.best.converged;
    s.restarts = static_cast<int>(runs.runs.size());
    s.best_start = runs.best.label;
    out.steps.push_back(s);
    prev_lattice = lattice;
    prev_u = runs.best.u;
  }

  out.value = out.steps.back().value;
  out.converged = out.steps.back().converged;
  if (out.steps.size() >= 2) {
    const double a = out.steps[out.steps.size() - 2].value, b = out.steps.back().value;
    out.stabilized = (nearly_zero(a) && nearly_zero(b)) || std::abs(b - a) < 1e-3 * std::max(std::abs(a), 1e-300);
  }
  out.lattice = prev_lattice;
  out.u = prev_u;
  return out;
}

std::pair<Matrix, Matrix> canonical_pair(const std::string& name, int dim, double lambda) {
  const Matrix i = Matrix::Identity(dim, dim);
  const Matrix j = reflection_j(dim);
  if (name == "I,J") return {i, j};
  if (name == "lI,lJ") return {lambda * i, lambda * j};
  if (name == "I,lI") return {i, lambda * i};
  if (name == "I,lJ") return {i, lambda * j};
  if (name == "I,I") return {i, i};
  throw std::invalid_argument("unknown well pair '" + name + "'");
}

GammaValues GammaTable::values() const {
  GammaValues v;
  for (const auto& e : entries) {
    if (e.pair == "I,J") v.ij = e.estimate.value;
    else if (e.pair == "lI,lJ") v.lilj = e.estimate.value;
    else if (e.pair == "I,lI") v.ili = e.estimate.value;
    else if (e.pair == "I,lJ") v.ilj = e.estimate.value;
  }
  return v;
}

std::string GammaTable::csv() const {
  std::string out = "pair,k,M,value,converged,restarts\n";
  for (const auto& e : entries)
    for (const auto& s : e.estimate.steps)
      out += fmt::format("\"{}\",{},{},{:.12g},{},{}\n", e.pair, k, s.m, s.value, s.converged ? 1 : 0, s.restarts);
  return out;
}

GammaTable gamma_table(int k, const EnergyModel& model, const GammaRunOptions& run) {
  GammaTable table;
  table.k = k;
  table.model = model;
  for (const char* name : {"I,J", "lI,lJ", "I,lI", "I,lJ"}) {
    const auto [p1, p2] = canonical_pair(name, model.h.dim(), model.lambda);
    TransitionSpec spec = transition_spec(p1, p2, k, model);
    spec.m_schedule = run.m_schedule;
    spec.opts = run.opts;
    spec.perturbations = run.perturbations;
    spec.seed = run.seed;
    table.entries.push_back({name, gamma_estimate(spec)});
  }
  return table;
}

Deformation rescale_seed(const Lattice& seed_lattice, const Deformation& v, const Lattice& target, int k) {
  const int dim = target.dim();
  if (seed_lattice.dim() != dim) throw std::invalid_argument("rescale_seed: dimension mismatch");
  if (k < 1) throw std::invalid_argument("rescale_seed: k must be at least 1");
  const auto& sg = seed_lattice.geometry();
  IVector lo = IVector::Constant(dim, -sg.k), hi = IVector::Constant(dim, sg.k);
  lo[0] = -sg.length;
  hi[0] = sg.length;

  Deformation u(dim, target.size());
  std::vector<int> order(static_cast<std::size_t>(dim));
  for (int n = 0; n < target.size(); ++n) {
    const Vector y = target.node(n).grid.cast<double>() / k;
    IVector c(dim);
    Vector t(dim);
    for (int d = 0; d < dim; ++d) {
      if (y[d] < lo[d] - 1e-12 || y[d] > hi[d] + 1e-12) throw std::invalid_argument("rescale_seed: target exceeds the seed strip");
      c[d] = std::clamp(static_cast<int>(std::floor(y[d])), lo[d], hi[d] - 1);
      t[d] = y[d] - c[d];
    }
    // Kuhn simplex containing t: axes by decreasing t.
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return t[a] > t[b]; });
    IVector vertex = c;
    auto value_at = [&](const IVector& g) -> Vector {
      const auto id = seed_lattice.find(g);
      if (!id) throw std::invalid_argument("rescale_seed: seed node missing");
      return v.col(*id);
    };
    Vector acc = (1.0 - t[order[0]]) * value_at(vertex);
    for (int i = 0; i < dim; ++i) {
      vertex[order[static_cast<std::size_t>(i)]] += 1;
      const double next = i + 1 < dim ? t[order[static_cast<std::size_t>(i + 1)]] : 0.0;
      acc += (t[order[static_cast<std::size_t>(i)]] - next) * value_at(vertex);
    }
    u.col(n) = k * acc;
  }
  return u;
}

double folding_upper_bound(const GammaEstimate& seed, const TransitionSpec& spec_k) {
  if (!seed.lattice || seed.u.size() == 0) throw std::invalid_argument("folding_upper_bound: missing k = 1 seed solution");
  if (seed.lattice->geometry().k != 1) throw std::invalid_argument("folding_upper_bound: seed must have k = 1");
  const int m = seed.lattice->geometry().length * spec_k.k;
  const Lattice lattice = transition_lattice(spec_k, m);
  Deformation u = rescale_seed(*seed.lattice, seed.u, lattice, spec_k.k);
  transition_clamps(spec_k, m).apply(lattice, u);
  return EnergyFunctional(lattice, spec_k.model).value(u);
}

std::string ScalingStudy::csv() const {
  std::string out = "k,value,value_per_k^{N-1},value_per_k^N,folding_bound,converged\n";
  for (const auto& r : rows)
    out += fmt::format("{},{:.12g},{:.12g},{:.12g},{},{}\n", r.k, r.value, r.per_k_nm1, r.per_k_n,
                       r.folding_bound ? fmt::format("{:.12g}", *r.folding_bound) : std::string("nan"), r.converged ? 1 : 0);
  return out;
}

ScalingStudy scaling_study(const std::vector<int>& k_list, const EnergyModel& model, const std::string& pair,
                           const GammaRunOptions& run, LatticeKind kind, double rho) {
  if (k_list.empty()) throw std::invalid_argument("scaling_study: empty k list");
  for (std::size_t i = 1; i < k_list.size(); ++i)
    if (k_list[i] <= k_list[i - 1]) throw std::invalid_argument("scaling_study: k list must be increasing");
  if (pair != "I,lI" && pair != "I,lJ") throw std::invalid_argument("scaling_study: pair must be I,lI or I,lJ");

  const int dim = model.h.dim();
  const auto [p1, p2] = canonical_pair(pair, dim, model.lambda);
  auto configure = [&](TransitionSpec& s, int k) {
    s.m_schedule.clear();
    for (int m : run.m_schedule) s.m_schedule.push_back(m * k);
    s.opts = run.opts;
    s.perturbations = run.perturbations;
    s.seed = run.seed;
  };

  ScalingStudy study;
  study.dim = dim;
  if (kind == LatticeKind::strip) {
    TransitionSpec s = transition_spec(p1, p2, 1, model);
    configure(s, 1);
    study.seed = gamma_estimate(s);
  }
  for (int k : k_list) {
    TransitionSpec spec = transition_spec(p1, p2, k, model, kind, rho);
    configure(spec, k);
    ScalingRow row;
    row.k = k;
    if (study.seed) {
      const GammaEstimate& seed = *study.seed;
      spec.extra_inits.push_back([&seed, k](const Lattice& target) {
        return rescale_seed(*seed.lattice, seed.u, target, k);
      });
      row.folding_bound = folding_upper_bound(seed, spec);
    }
    const auto est = gamma_estimate(spec);
    row.value = est.value;
    row.converged = est.converged;
    row.per_k_nm1 = est.value / std::pow(k, dim - 1);
    row.per_k_n = est.value / std::pow(k, dim);
    study.rows.push_back(row);
  }
  return study;
}

std::string G2Study::csv() const {
  std::string out = "nu,T,estimate,test_value\n";
  std::string n;
  for (Eigen::Index d = 0; d < nu.size(); ++d) n += fmt::format("{}{:.12g}", d ? " " : "", nu[d]);
  for (const auto& r : rows) out += fmt::format("\"{}\",{},{:.12g},{:.12g}\n", n, r.t, r.estimate, r.test_value);
  return out;
}

G2Study g2_estimate(const Vector& nu, const std::vector<int>& t_list, const EnergyModel& model, const GammaRunOptions& run) {
  model.validate();
  if (model.lambda != 1.0 || model.minus_scale != 1.0) throw std::invalid_argument("g2_estimate: needs a homogeneous model (lambda = 1)");
  if (t_list.empty()) throw std::invalid_argument("g2_estimate: empty T list");
  for (std::size_t i = 1; i < t_list.size(); ++i)
    if (t_list[i] <= t_list[i - 1]) throw std::invalid_argument("g2_estimate: T list must be increasing");
  const int dim = model.h.dim();
  const InterfaceNormal jump = rank_one_reflection(model.h, nu);
  const double r = bond_sets(dim).max_length();

  G2Study study;
  study.nu = nu;
  for (int t : t_list) {
    const Lattice lattice = build_oriented_cube(dim, t, nu, r);
    EnergyFunctional energy(lattice, model);
    const Matrix h = model.h.matrix();
    BoundaryCondition bc;
    bc.add({"layer", [](const Node& n) { return n.boundary_layer; },
            [jump, h](const Node& n) -> Vector { return jump.jump_datum(h, n.ref); }});
    Deformation u0(dim, lattice.size());
    for (int n = 0; n < lattice.size(); ++n) u0.col(n) = jump.jump_datum(h, lattice.node(n).ref);

    std::vector<NamedInit> inits{{"jump", u0}};
    std::mt19937_64 rng(run.seed * 7919ULL + static_cast<std::uint64_t>(t));
    std::uniform_real_distribution<double> noise(-0.1, 0.1);
    for (int p = 0; p < run.perturbations; ++p) {
      Deformation v = u0;
      for (Eigen::Index i = 0; i < v.size(); ++i) v.data()[i] += noise(rng);
      inits.push_back({"jump+noise" + std::to_string(p), std::move(v)});
    }
    const auto res = multi_start(energy, bc, inits, run.opts);
    const double area = std::pow(static_cast<double>(t), dim - 1);
    G2Row row;
    row.t = t;
    row.estimate = res.best.energy / area;
    row.test_value = energy.value(u0) / area;
    row.converged = res.best.converged;
    for (int n = 0; n < lattice.size(); ++n) row.free_nodes += lattice.node(n).boundary_layer ? 0 : 1;
    study.rows.push_back(row);
  }
  return study;
}

OrientationSet::OrientationSet(double length, std::vector<std::pair<double, double>> intervals) : length_(length) {
  if (!(length > 0.0)) throw std::invalid_argument("orientation set: L must be positive");
  std::sort(intervals.begin(), intervals.end());
  for (const auto& [a, b] : intervals) {
    if (!(a < b)) throw std::invalid_argument("orientation set: empty interval");
    if (a < -length - 1e-12 || b > length + 1e-12) throw std::invalid_argument("orientation set: interval outside (-L, L)");
    if (!intervals_.empty() && a <= intervals_.back().second + 1e-12)
      intervals_.back().second = std::max(intervals_.back().second, b);
    else
      intervals_.emplace_back(a, b);
  }
}

int OrientationSet::boundary_left() const {
  int n = 0;
  for (const auto& [a, b] : intervals_)
    for (double e : {a, b})
      if (e > -length_ + 1e-12 && e < -1e-12) ++n;
  return n;
}

int OrientationSet::boundary_right() const {
  int n = 0;
  for (const auto& [a, b] : intervals_)
    for (double e : {a, b})
      if (e > 1e-12 && e < length_ - 1e-12) ++n;
  return n;
}

bool OrientationSet::zero_in_boundary() const {
  for (const auto& [a, b] : intervals_)
    if (nearly_zero(a) || nearly_zero(b)) return true;
  return false;
}

double j_eval(const OrientationSet& u, const GammaValues& g) {
  return g.ij * u.boundary_left() + g.lilj * u.boundary_right() + (u.zero_in_boundary() ? g.ilj : g.ili);
}

JMin j_min(const std::vector<ProfileInterval>& profile, const GammaValues& g) {
  if (profile.empty()) throw std::invalid_argument("j_min: empty profile");
  const double length = profile.back().end;
  if (std::abs(profile.front().start + length) > 1e-9) throw std::invalid_argument("j_min: profile must cover (-L, L)");
  std::vector<ProfileInterval> pieces;
  for (std::size_t i = 0; i < profile.size(); ++i) {
    const auto& p = profile[i];
    if (!(p.start < p.end)) throw std::invalid_argument("j_min: empty profile interval");
    if (i > 0 && std::abs(p.start - profile[i - 1].end) > 1e-9) throw std::invalid_argument("j_min: profile has gaps");
    // The cost of a free interval depends only on where its breakpoints sit
    // relative to 0, so splitting at 0 is enough.
    if (p.label == WellLabel::either && p.start < -1e-12 && p.end > 1e-12) {
      pieces.push_back({p.start, 0.0, p.label});
      pieces.push_back({0.0, p.end, p.label});
    } else {
      pieces.push_back(p);
    }
  }
  std::vector<std::size_t> free;
  for (std::size_t i = 0; i < pieces.size(); ++i)
    if (pieces[i].label == WellLabel::either) free.push_back(i);
  if (free.size() > 24) throw std::invalid_argument("j_min: too many free intervals");

  std::optional<JMin> best;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << free.size()); ++mask) {
    std::vector<std::pair<double, double>> u;
    std::size_t f = 0;
    for (std::size_t i = 0; i < pieces.size(); ++i) {
      bool rot = pieces[i].label == WellLabel::rot;
      if (pieces[i].label == WellLabel::either) rot = (mask >> f++) & 1U;
      if (rot) u.emplace_back(pieces[i].start, pieces[i].end);
    }
    OrientationSet set(length, std::move(u));
    const double v = j_eval(set, g);
    if (!best || v < best->value) best = JMin{v, std::move(set)};
  }
  return *best;
}

std::vector<ProfileInterval> profile_intervals(const OrientationProfile& profile) {
  std::vector<ProfileInterval> out;
  for (const auto& s : profile.intervals()) out.push_back({s.start, s.end, s.label});
  return out;
}

GammaEstimate boundary_gamma(const Matrix& b, const Matrix& p, int k, const EnergyModel& model, const GammaRunOptions& run) {
  model.validate();
  const int dim = model.h.dim();
  if (b.rows() != dim || b.cols() != dim) throw std::invalid_argument("boundary_gamma: B has wrong shape");
  if (!(b.determinant() > 0.0)) throw std::invalid_argument("boundary_gamma: det B must be positive");
  if (!in_scaled_orthogonal(p, 1.0)) throw std::invalid_argument("boundary_gamma: P must be orthogonal");
  TransitionSpec spec;
  spec.dim = dim;
  spec.k = k;
  spec.model = model;
  spec.model.lambda = 1.0;
  spec.model.minus_scale = 1.0;
  spec.left = b;
  spec.right = p * model.h.matrix();
  spec.m_schedule = run.m_schedule;
  spec.opts = run.opts;
  spec.perturbations = run.perturbations;
  spec.seed = run.seed;
  return gamma_estimate(spec);
}

Matrix random_symmetric(int dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  Matrix g(dim, dim);
  for (Eigen::Index i = 0; i < g.size(); ++i) g.data()[i] = gauss(rng);
  const Matrix s = 0.5 * (g + g.transpose());
  return s / s.norm();
}

ForcesPoint forces_competitors(double gamma_ij, int k, double length, double f1, double a, double amplitude) {
  // (2k)^{N-1} with N = 2.
  const double width = 2.0 * k;
  const double left = a + length, right = length - a;
  ForcesPoint pt;
  pt.amplitude = amplitude;
  // Folded: D = I on (-L, a), diag(1, -1) on (a, L).
  pt.folded_total = -width * (2.0 * length * f1 + amplitude * (left + right)) + gamma_ij;
  // Unfolded: D in one well throughout, best rotation pointwise.
  const double rot = left * std::abs(f1 + amplitude) + right * std::abs(f1 - amplitude);
  const double refl = left * std::abs(f1 - amplitude) + right * std::abs(f1 + amplitude);
  pt.unfolded_total = -width * std::max(rot, refl);
  return pt;
}

ForcesDemo forces_demo(double gamma_ij, int k, double length, double f1, double a) {
  if (!(f1 > 0.0)) throw std::invalid_argument("forces_demo: f1 must be positive");
  if (!(length > 0.0) || !(a > -length && a < length)) throw std::invalid_argument("forces_demo: need a in (-L, L)");
  if (!(gamma_ij > 0.0)) throw std::invalid_argument("forces_demo: gamma(I,J) must be positive");
  ForcesDemo demo;
  demo.gamma_ij = gamma_ij;
  auto wins = [&](double amp) {
    const auto pt = forces_competitors(gamma_ij, k, length, f1, a, amp);
    demo.samples.push_back(pt);
    return pt.folded_total < pt.unfolded_total;
  };
  double lo = 0.0, hi = f1;
  if (wins(lo) || !wins(hi)) return demo;
  while (hi - lo > 0.01 * hi) {
    const double mid = 0.5 * (lo + hi);
    (wins(mid) ? hi : lo) = mid;
  }
  demo.below = lo;
  demo.above = hi;
  demo.crossing = 0.5 * (lo + hi);
  demo.bracketed = true;
  return demo;
}

}  // namespace kuhnwire
