#pragma once

#include "ngsac/geometry.hpp"

#include <span>
#include <vector>

namespace ngsac {

/// Indices of the observations a hypothesis was built from, in draw order.
struct MinimalSet {
  std::vector<std::size_t> indices;
  bool operator==(const MinimalSet&) const = default;
};

/// d(a, b, c) / d(px, py, qx, qy).
using LineJacobian = Eigen::Matrix<double, 3, 4>;

/// Line through p and q with normal obtained by rotating (q - p) by +90 deg.
/// Throws DegenerateMinimalSet when the points coincide (distance <= 1e-12).
Line2 solve_line(const Vec2& p, const Vec2& q, LineJacobian* jacobian = nullptr);

/// Hartley-normalized 8-point fit (>= 8 correspondences) with rank-2
/// enforcement, returned with unit Frobenius norm.
Model3x3 solve_fundamental_8pt(std::span<const Correspondence> corrs,
                               MatrixKind kind = MatrixKind::Fundamental);

/// All real solutions of the 7-point problem (1 to 3 candidates).
std::vector<Model3x3> solve_fundamental_7pt(std::span<const Correspondence> corrs);

/// Real roots of c3 x^3 + c2 x^2 + c1 x + c0, ascending. Drops to the
/// lower-degree polynomial when the leading coefficient is negligible;
/// repeated roots are reported once.
std::vector<double> solve_cubic(double c3, double c2, double c1, double c0);

/// Total-least-squares line through >= 2 points.
Line2 refit_line(std::span<const Vec2> points);
/// Least-squares epipolar fit to >= 8 inliers, projected to the essential
/// manifold when kind is Essential.
Model3x3 refit_epipolar(std::span<const Correspondence> inliers, MatrixKind kind);

}  // namespace ngsac
