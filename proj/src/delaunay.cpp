#include "delaunay.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "kuhnwire/lattice.hpp"

namespace kuhnwire::detail {

namespace {

double orient(const Eigen::Vector2d& a, const Eigen::Vector2d& b, const Eigen::Vector2d& c) {
  return (b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x());
}

// Positive when d lies inside the circumcircle of the counter-clockwise triangle abc.
double incircle(const Eigen::Vector2d& a, const Eigen::Vector2d& b, const Eigen::Vector2d& c,
                const Eigen::Vector2d& d) {
  const double adx = a.x() - d.x(), ady = a.y() - d.y();
  const double bdx = b.x() - d.x(), bdy = b.y() - d.y();
  const double cdx = c.x() - d.x(), cdy = c.y() - d.y();
  const double ad = adx * adx + ady * ady;
  const double bd = bdx * bdx + bdy * bdy;
  const double cd = cdx * cdx + cdy * cdy;
  return adx * (bdy * cd - bd * cdy) - ady * (bdx * cd - bd * cdx) + ad * (bdx * cdy - bdy * cdx);
}

}  // namespace

std::vector<Triangle> delaunay(const std::vector<Eigen::Vector2d>& input) {
  const int n = static_cast<int>(input.size());
  if (n < 3) throw ConstructionError("delaunay: fewer than three points");

  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const auto& pa = input[static_cast<std::size_t>(a)];
    const auto& pb = input[static_cast<std::size_t>(b)];
    return pa.x() != pb.x() ? pa.x() < pb.x() : pa.y() < pb.y();
  });

  Eigen::Vector2d lo = input[0], hi = input[0];
  for (const auto& p : input) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const double extent = std::max({hi.x() - lo.x(), hi.y() - lo.y(), 1.0});
  const Eigen::Vector2d mid = 0.5 * (lo + hi);

  bool collinear = true;
  const auto& p0 = input[static_cast<std::size_t>(order[0])];
  const auto& p1 = input[static_cast<std::size_t>(order[1])];
  for (const auto& p : input) {
    if (std::abs(orient(p0, p1, p)) > 1e-12 * extent * extent) {
      collinear = false;
      break;
    }
  }
  if (collinear) throw ConstructionError("delaunay: input points are collinear");

  std::vector<Eigen::Vector2d> pts = input;
  const double big = 100.0 * extent;
  pts.emplace_back(mid.x() - 2.0 * big, mid.y() - big);
  pts.emplace_back(mid.x() + 2.0 * big, mid.y() - big);
  pts.emplace_back(mid.x(), mid.y() + 2.0 * big);

  std::vector<Triangle> tris{{n, n + 1, n + 2}};
  const double tol = 1e-10 * extent * extent * extent * extent;

  for (int p : order) {
    const auto& q = pts[static_cast<std::size_t>(p)];
    std::vector<Triangle> kept;
    std::map<std::pair<int, int>, int> edge_count;
    std::vector<std::pair<int, int>> edges;
    for (const auto& t : tris) {
      const auto& a = pts[static_cast<std::size_t>(t[0])];
      const auto& b = pts[static_cast<std::size_t>(t[1])];
      const auto& c = pts[static_cast<std::size_t>(t[2])];
      if (incircle(a, b, c, q) > tol) {
        for (int e = 0; e < 3; ++e) {
          const int u = t[static_cast<std::size_t>(e)];
          const int v = t[static_cast<std::size_t>((e + 1) % 3)];
          edges.emplace_back(u, v);
          ++edge_count[{std::min(u, v), std::max(u, v)}];
        }
      } else {
        kept.push_back(t);
      }
    }
    for (const auto& [u, v] : edges) {
      if (edge_count[{std::min(u, v), std::max(u, v)}] != 1) continue;
      kept.push_back({u, v, p});
    }
    tris = std::move(kept);
  }

  std::vector<Triangle> out;
  for (const auto& t : tris) {
    if (t[0] >= n || t[1] >= n || t[2] >= n) continue;
    Triangle c = t;
    if (orient(input[static_cast<std::size_t>(c[0])], input[static_cast<std::size_t>(c[1])],
               input[static_cast<std::size_t>(c[2])]) < 0)
      std::swap(c[1], c[2]);
    // Canonical rotation: smallest index first.
    while (c[0] > c[1] || c[0] > c[2]) c = {c[1], c[2], c[0]};
    out.push_back(c);
  }
  std::sort(out.begin(), out.end());
  if (out.empty()) throw ConstructionError("delaunay: degenerate input");
  return out;
}

}  // namespace kuhnwire::detail
