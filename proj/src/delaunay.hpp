#pragma once

#include <array>
#include <vector>

#include <Eigen/Dense>

namespace kuhnwire::detail {

using Triangle = std::array<int, 3>;

/// Bowyer-Watson triangulation of planar points. Points are inserted in
/// lexicographic (x, y) order and a triangle is only destroyed when the new
/// point lies strictly inside its circumcircle, so cocircular ties keep the
/// earlier configuration. Triangles are returned counter-clockwise.
/// Throws ConstructionError when the points are collinear.
std::vector<Triangle> delaunay(const std::vector<Eigen::Vector2d>& points);

}  // namespace kuhnwire::detail
