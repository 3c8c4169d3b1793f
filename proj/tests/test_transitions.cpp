#include <doctest.h>

#include <cmath>

#include "kuhnwire/transitions.hpp"
#include "oracles.hpp"

using namespace kuhnwire;

namespace {

GammaRunOptions quick() {
  GammaRunOptions run;
  run.m_schedule = {4, 8};
  run.perturbations = 1;
  return run;
}

TransitionSpec quick_spec(const std::string& pair, int k, const EnergyModel& m) {
  const auto [p1, p2] = canonical_pair(pair, m.h.dim(), m.lambda);
  TransitionSpec s = transition_spec(p1, p2, k, m);
  s.m_schedule = {4, 8};
  s.perturbations = 1;
  return s;
}

const GammaValues kTable{1.0, 0.6, 0.25, 0.4};

}  // namespace

TEST_SUITE("transitions") {

TEST_CASE("species scales") {
  const Matrix i = Matrix::Identity(2, 2), j = reflection_j(2);
  CHECK(species_scales(i, j, 0.7) == std::make_pair(1.0, 1.0));
  CHECK(species_scales(0.7 * i, 0.7 * j, 0.7) == std::make_pair(0.7, 0.7));
  CHECK(species_scales(i, 0.7 * j, 0.7) == std::make_pair(1.0, 0.7));
  CHECK_THROWS_AS(species_scales(0.7 * i, j, 0.7), std::invalid_argument);
  CHECK_THROWS_AS(species_scales(2.0 * i, j, 0.7), std::invalid_argument);
}

TEST_CASE("equal wells cost nothing") {
  EnergyModel m;
  const auto est = gamma_estimate(quick_spec("I,I", 1, m));
  CHECK(est.value <= 1e-10);
  CHECK(est.stabilized);
}

TEST_CASE("the I,J transition is positive and non-increasing in M") {
  EnergyModel m;
  const auto est = gamma_estimate(quick_spec("I,J", 1, m));
  REQUIRE(est.steps.size() == 2);
  CHECK(est.value > 0.05);
  CHECK(est.steps.back().value <= est.steps.front().value + 1e-9);
  CHECK(est.lattice);
  CHECK(est.u.cols() == est.lattice->size());
}

TEST_CASE("gamma table at lambda = 1") {
  EnergyModel m;
  const GammaTable t = gamma_table(1, m, quick());
  const auto v = t.values();
  CHECK(v.ili <= 1e-10);
  CHECK(v.ilj == doctest::Approx(v.ij).epsilon(1e-9));
  CHECK(v.lilj == doctest::Approx(v.ij).epsilon(1e-9));
  CHECK(v.ij > 0);
  CHECK(t.csv().rfind("pair,k,M,value,converged,restarts\n", 0) == 0);
}

TEST_CASE("rescaling an affine seed is exact") {
  const Lattice seed = build_strip_lattice(2, 1, 4, 1.0);
  Matrix a(2, 2);
  a << 0.9, 0.2, -0.1, 1.1;
  const Deformation v = affine_deformation(seed, a, Vector::Zero(2));
  for (int k : {1, 2, 3}) {
    const Lattice target = build_strip_lattice(2, k, 4 * k, 1.0);
    const Deformation u = rescale_seed(seed, v, target, k);
    const Deformation want = affine_deformation(target, a, Vector::Zero(2));
    CHECK((u - want).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("rescaling interpolates on Kuhn triangles") {
  // Oracle: v = |x1 - x2| is affine on each Kuhn triangle (the diagonal x1 = x2
  // is a triangle edge), so its piecewise-linear interpolant is v itself.
  const Lattice seed = build_strip_lattice(2, 1, 3, 1.0);
  Deformation v(2, seed.size());
  for (int n = 0; n < seed.size(); ++n) {
    const auto& x = seed.node(n).ref;
    v(0, n) = std::abs(x[0] - x[1]);
    v(1, n) = x[0] + 2 * x[1];
  }
  const Lattice target = build_strip_lattice(2, 2, 6, 1.0);
  const Deformation u = rescale_seed(seed, v, target, 2);
  for (int n = 0; n < target.size(); ++n) {
    const Vector y = target.node(n).ref / 2.0;
    CHECK(u(0, n) == doctest::Approx(2 * std::abs(y[0] - y[1])));
    CHECK(u(1, n) == doctest::Approx(2 * (y[0] + 2 * y[1])));
  }
}

TEST_CASE("folding bound at k = 1 reproduces the seed") {
  EnergyModel m;
  m.lambda = 0.7;
  TransitionSpec s = quick_spec("I,lI", 1, m);
  const auto seed = gamma_estimate(s);
  CHECK(folding_upper_bound(seed, s) == doctest::Approx(seed.value).epsilon(1e-12));
}

TEST_CASE("scaling study emits one row per k and respects the folding bound") {
  EnergyModel m;
  m.lambda = 0.8;
  GammaRunOptions run = quick();
  const auto study = scaling_study({1, 2}, m, "I,lI", run);
  REQUIRE(study.rows.size() == 2);
  for (const auto& r : study.rows) {
    REQUIRE(r.folding_bound.has_value());
    CHECK(r.value <= *r.folding_bound + 1e-6);
    CHECK(r.per_k_nm1 == doctest::Approx(r.value / r.k));
    CHECK(r.per_k_n == doctest::Approx(r.value / (r.k * r.k)));
  }
  EnergyModel one;
  const auto zero = scaling_study({1, 2}, one, "I,lI", run);
  for (const auto& r : zero.rows) CHECK(r.value <= 1e-10);
  CHECK_THROWS_AS(scaling_study({2, 1}, m, "I,lI", run), std::invalid_argument);
  CHECK_THROWS_AS(scaling_study({1}, m, "I,J", run), std::invalid_argument);
}

TEST_CASE("g2 estimates sit below the test function and are symmetric in nu") {
  EnergyModel m;
  GammaRunOptions run;
  run.perturbations = 1;
  Vector e1(2);
  e1 << 1, 0;
  const auto a = g2_estimate(e1, {4, 8}, m, run);
  const auto b = g2_estimate(-e1, {4, 8}, m, run);
  REQUIRE(a.rows.size() == 2);
  // At T = 4 every node lies in the clamp layer.
  CHECK(a.rows[0].free_nodes == 0);
  CHECK(a.rows[0].estimate == doctest::Approx(a.rows[0].test_value));
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    CHECK(a.rows[i].estimate <= a.rows[i].test_value + 1e-12);
    CHECK(a.rows[i].estimate == doctest::Approx(b.rows[i].estimate).epsilon(1e-6));
  }
  m.lambda = 0.9;
  CHECK_THROWS_AS(g2_estimate(e1, {4}, m, run), std::invalid_argument);
}

TEST_CASE("j_eval examples") {
  const double len = 4.0;
  CHECK(j_eval(OrientationSet(len, {{-len, len}}), kTable) == kTable.ili);
  CHECK(j_eval(OrientationSet(len, {{-len, 0.0}}), kTable) == kTable.ilj);
  CHECK(j_eval(OrientationSet(len, {{-len, -1.0}, {2.0, len}}), kTable) ==
        doctest::Approx(kTable.ij + kTable.lilj + kTable.ili));
  // Touching intervals merge: no boundary at the contact point.
  CHECK(j_eval(OrientationSet(len, {{-len, 0.0}, {0.0, len}}), kTable) == kTable.ili);
  CHECK(j_eval(OrientationSet(len, {}), kTable) == kTable.ili);
  CHECK_THROWS_AS(OrientationSet(len, {{1.0, 0.5}}), std::invalid_argument);
}

TEST_CASE("j_min examples") {
  using W = WellLabel;
  const double len = 4.0;
  const auto all_rot = j_min({{-len, len, W::rot}}, kTable);
  CHECK(all_rot.value == kTable.ili);

  const auto free_gap = j_min({{-len, -3, W::rot}, {-3, -1, W::either}, {-1, 0, W::rot}, {0, len, W::rot}}, kTable);
  CHECK(free_gap.value == kTable.ili);
  CHECK(free_gap.u.intervals().size() == 1);

  // Any U = (a, L) with a in [a1, a2] is optimal; the value is gamma_IJ + gamma_IlI.
  const std::vector<ProfileInterval> ex{{-len, -3, W::refl}, {-3, -1, W::either}, {-1, 0, W::rot}, {0, len, W::rot}};
  const auto res = j_min(ex, kTable);
  CHECK(res.value == doctest::Approx(kTable.ij + kTable.ili));
  REQUIRE(res.u.intervals().size() == 1);
  CHECK(res.u.intervals()[0].second == len);
  CHECK(res.u.intervals()[0].first >= -3.0);
  CHECK(res.u.intervals()[0].first <= -1.0);
  CHECK(j_eval(OrientationSet(len, {{-3.0, len}}), kTable) == doctest::Approx(res.value));
  CHECK(j_eval(OrientationSet(len, {{-1.0, len}}), kTable) == doctest::Approx(res.value));
}

TEST_CASE("j_min agrees with brute force on small profiles") {
  using W = WellLabel;
  const std::vector<std::vector<double>> layouts{
      {-3, 3}, {-3, 0, 3}, {-3, -1, 2, 3}, {-3, -2, 0, 1, 3}, {-3, -2, -1, 1, 2, 3}, {-3, -1, 0, 1, 2, 3}};
  const std::vector<GammaValues> tables{kTable, {1.0, 0.2, 0.9, 0.1}, {0.3, 0.3, 0.0, 2.0}};
  int checked = 0;
  for (const auto& cuts : layouts) {
    const std::size_t n = cuts.size() - 1;
    std::size_t combos = 1;
    for (std::size_t i = 0; i < n; ++i) combos *= 3;
    for (std::size_t c = 0; c < combos; ++c) {
      std::vector<ProfileInterval> prof;
      std::size_t code = c;
      for (std::size_t i = 0; i < n; ++i, code /= 3)
        prof.push_back({cuts[i], cuts[i + 1], static_cast<W>(code % 3)});
      for (const auto& g : tables) {
        CHECK(j_min(prof, g).value == doctest::Approx(oracle::j_min_bruteforce(prof, g)));
        ++checked;
      }
    }
  }
  CHECK(checked > 1000);
}

TEST_CASE("boundary gamma of the well itself vanishes") {
  EnergyModel m;
  const auto est = boundary_gamma(Matrix::Identity(2, 2), Matrix::Identity(2, 2), 1, m, quick());
  CHECK(est.value <= 1e-10);
  Matrix bad = Matrix::Identity(2, 2);
  bad(0, 0) = -1;
  CHECK_THROWS_AS(boundary_gamma(bad, Matrix::Identity(2, 2), 1, m, quick()), std::invalid_argument);
}

TEST_CASE("random symmetric perturbation") {
  const Matrix s = random_symmetric(3, 7);
  CHECK((s - s.transpose()).norm() == 0.0);
  CHECK(s.norm() == doctest::Approx(1.0));
  CHECK(random_symmetric(3, 7) == s);
}

TEST_CASE("forces competitors in closed form") {
  // f2 = +A on (-L, a), -A on (a, L); the fold gains 4 k m min(A, f1) with m = L - |a|.
  const double len = 4, a = 0.5, f1 = 1, gam = 3;
  for (double amp : {0.1, 0.5, 0.9}) {
    const auto p = forces_competitors(gam, 2, len, f1, a, amp);
    const double fold = -4.0 * (2 * len * f1 + 2 * len * amp) + gam;
    CHECK(p.folded_total == doctest::Approx(fold));
    CHECK(p.unfolded_total - p.folded_total == doctest::Approx(4.0 * 2 * (len - a) * amp - gam));
  }
  const auto demo = forces_demo(gam, 2, len, f1, a);
  REQUIRE(demo.bracketed);
  CHECK(demo.above - demo.below <= 0.01 * demo.above);
  const auto lo = forces_competitors(gam, 2, len, f1, a, demo.below);
  const auto hi = forces_competitors(gam, 2, len, f1, a, demo.above);
  CHECK(lo.folded_total >= lo.unfolded_total);
  CHECK(hi.folded_total < hi.unfolded_total);
  // Exact crossing for this load: A* = gamma / (4 k m).
  const double exact = gam / (8.0 * (len - a));
  CHECK(demo.below <= exact);
  CHECK(demo.above >= exact);
  CHECK(!forces_demo(1000.0, 2, len, f1, a).bracketed);
}


TEST_CASE("dislocated transitions need the hexagonal H") {
  EnergyModel m;
  m.lambda = 0.7;
  const auto [p1, p2] = canonical_pair("I,lI", 2, 0.7);
  CHECK_THROWS_AS(transition_spec(p1, p2, 2, m, LatticeKind::dislocated, 0.7), std::invalid_argument);
  m.h = StructureMatrix::hexagonal();
  CHECK_NOTHROW(transition_spec(p1, p2, 2, m, LatticeKind::dislocated, 0.7));
}

}
