#include <doctest.h>

#include <cmath>
#include <random>

#include "kuhnwire/analysis.hpp"
#include "oracles.hpp"

using namespace kuhnwire;

TEST_SUITE("analysis") {

TEST_CASE("polar projection examples") {
  const StructureMatrix id = StructureMatrix::identity(2);
  const auto a = polar_project(Matrix::Identity(2, 2), id);
  CHECK(a.distance < 1e-14);
  CHECK(a.orientation == 1);
  const Matrix j = reflection_j(2);
  const auto b = polar_project(j, id);
  CHECK(b.distance < 1e-14);
  CHECK(b.orientation == -1);
  CHECK((b.nearest - j).norm() < 1e-14);
  Matrix f(2, 2);
  f << 2, 0, 0, 1;
  const auto c = polar_project(f, id);
  CHECK((c.nearest - Matrix::Identity(2, 2)).norm() < 1e-12);
  CHECK(c.distance == doctest::Approx(1.0));

  const auto hex = StructureMatrix::hexagonal();
  const auto d = polar_project(0.7 * j * hex.matrix(), hex, 0.7);
  CHECK(d.distance < 1e-12);
  CHECK(d.orientation == -1);
}

TEST_CASE("well distance is invariant under orthogonal maps") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  const StructureMatrix h = StructureMatrix::hexagonal();
  for (int s = 0; s < 50; ++s) {
    Matrix f(2, 2);
    for (Eigen::Index i = 0; i < 4; ++i) f.data()[i] = g(rng);
    const Matrix q = oracle::random_orthogonal(2, rng, s % 2 == 1);
    const double d0 = std::min(well_distance(f, h, 1.0, 1), well_distance(f, h, 1.0, -1));
    const double d1 = std::min(well_distance(q * f, h, 1.0, 1), well_distance(q * f, h, 1.0, -1));
    CHECK(std::abs(d0 - d1) < 1e-10);
    // Projection distance matches the oriented-well distance for det F != 0.
    const auto p = polar_project(f, h);
    CHECK(p.distance == doctest::Approx(well_distance(f, h, 1.0, p.orientation >= 0 ? 1 : -1)).epsilon(1e-10));
  }
}

TEST_CASE("orientation profiles of ground states and folds") {
  const Lattice lat = build_strip_lattice(2, 2, 6, 1.0);
  EnergyModel m;
  const auto flat = orientation_profile(lat, lat.reference(), m);
  CHECK(flat.slabs.size() == 12);
  CHECK(flat.intervals().size() == 1);
  CHECK(flat.intervals()[0].label == WellLabel::rot);
  CHECK(flat.label_changes() == 0);

  Deformation fold = lat.reference();
  for (int n = 0; n < lat.size(); ++n)
    if (lat.node(n).ref[0] < 0) fold(0, n) = -fold(0, n);
  const auto prof = orientation_profile(lat, fold, m);
  const auto iv = prof.intervals();
  REQUIRE(iv.size() == 2);
  CHECK(iv[0].label == WellLabel::refl);
  CHECK(iv[0].end == 0.0);
  CHECK(iv[1].label == WellLabel::rot);
  CHECK(prof.label_changes() == 1);
  CHECK(prof.csv().rfind("slab_start,slab_end,label,mean_dist_rot,mean_dist_refl\n", 0) == 0);
}

TEST_CASE("lambda ground state on the plus side is labelled rot") {
  const Lattice lat = build_strip_lattice(2, 1, 4, 0.6);
  EnergyModel m;
  m.lambda = 0.6;
  Deformation u = lat.reference();
  for (int n = 0; n < lat.size(); ++n)
    if (lat.node(n).ref[0] >= 0) u(0, n) *= 0.6, u(1, n) *= 0.6;
  const auto prof = orientation_profile(lat, u, m);
  for (const auto& s : prof.slabs)
    if (s.start >= 0) CHECK(s.mean_dist_rot < 1e-12);
}

TEST_CASE("facet pairs") {
  for (int n : {2, 3}) {
    const auto pairs = facet_pairs(n);
    REQUIRE(!pairs.empty());
    bool same = false, cross = false;
    for (const auto& p : pairs) {
      CHECK(p.points.size() == static_cast<std::size_t>(n + 2));
      (p.same_cube ? same : cross) = true;
    }
    CHECK(same);
    CHECK(cross);
  }
}

TEST_CASE("orientation product and pair energy at the reference") {
  const auto pairs = facet_pairs(2);
  const StructureMatrix id = StructureMatrix::identity(2);
  for (const auto& p : pairs) {
    Matrix pos(2, 4);
    for (int c = 0; c < 4; ++c) pos.col(c) = p.points[static_cast<std::size_t>(c)].cast<double>();
    CHECK(orientation_product(p, pos) > 0);
    CHECK(pair_cell_energy(p, pos, id, 2.0) < 1e-24);
  }
}

TEST_CASE("near-isometric opposite orientations cost at least one") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-0.025, 0.025);
  const StructureMatrix id = StructureMatrix::identity(2);
  for (const auto& p : facet_pairs(2)) {
    const Vector x1 = p.points[1].cast<double>();
    const Vector x2 = p.points[2].cast<double>();
    Vector n(2);
    n << -(x2 - x1)[1], (x2 - x1)[0];
    n.normalize();
    const Matrix refl = Matrix::Identity(2, 2) - 2 * n * n.transpose();
    for (int s = 0; s < 200; ++s) {
      Matrix a = Matrix::Identity(2, 2), b = refl;
      for (Eigen::Index i = 0; i < 4; ++i) a.data()[i] += u(rng), b.data()[i] += u(rng);
      Matrix pos(2, 4);
      for (int c = 0; c < 3; ++c) pos.col(c) = a * p.points[static_cast<std::size_t>(c)].cast<double>();
      pos.col(3) = a * x1 + b * (p.points[3].cast<double>() - x1);
      CHECK(orientation_product(p, pos) <= 0);
      CHECK(pair_cell_energy(p, pos, id, 2.0) >= 1.0);
    }
  }
}

TEST_CASE("inversion cost is positive and reproducible") {
  const auto a = inversion_cost(StructureMatrix::identity(2), 2.0, 3, 1);
  const auto b = inversion_cost(StructureMatrix::identity(2), 2.0, 3, 1);
  CHECK(a.feasible);
  CHECK(a.value > 0.01);
  CHECK(a.value == b.value);
  const auto pairs = facet_pairs(2);
  const auto& pair = pairs[static_cast<std::size_t>(a.pair)];
  CHECK(orientation_product(pair, a.positions) <= 1e-8);
  CHECK(pair_cell_energy(pair, a.positions, StructureMatrix::identity(2), 2.0) == doctest::Approx(a.value));
}

TEST_CASE("inversion cost under a rotated structure matrix") {
  // A rotated H gives a congruent point configuration, so the constrained
  // minimum must not move.
  Matrix rot(2, 2);
  const double t = 0.5;
  rot << std::cos(t), -std::sin(t), std::sin(t), std::cos(t);
  const auto i = inversion_cost(StructureMatrix::identity(2), 2.0, 4, 5);
  const auto h = inversion_cost(StructureMatrix(rot), 2.0, 4, 5);
  REQUIRE(i.feasible);
  REQUIRE(h.feasible);
  CHECK(std::abs(h.value - i.value) <= 0.01 * i.value);
}

TEST_CASE("rigidity ratio examples") {
  EnergyModel m;
  const Simplex t = kuhn_simplices(2)[0];
  CHECK(!rigidity_ratio(Matrix::Identity(2, 2), t, m).has_value());
  const auto r = rigidity_ratio(2.0 * Matrix::Identity(2, 2), t, m);
  REQUIRE(r.has_value());
  CHECK(*r == doctest::Approx(0.5));
  const auto probe = rigidity_probe(StructureMatrix::identity(2), 2.0, 2000, 4);
  CHECK(std::isfinite(probe.ratio));
  CHECK(probe.ratio > 0);
  CHECK(probe.samples == 2000);
  const auto again = rigidity_probe(StructureMatrix::identity(2), 2.0, 2000, 5);
  CHECK(again.ratio <= 2 * probe.ratio);
  CHECK(probe.ratio <= 2 * again.ratio);
  CHECK_THROWS_AS(rigidity_probe(StructureMatrix::identity(2), 2.0, 50, 4), std::invalid_argument);
}

}
