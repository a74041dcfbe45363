#pragma once

#include <Eigen/Dense>

#include <array>
#include <optional>
#include <span>
#include <vector>

namespace ngsac {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// One putative match x <-> x'. Coordinates are in the units of the task
/// (calibrated coordinates for essential matrices, scaled pixels for
/// fundamental matrices).
struct Correspondence {
  double x1 = 0.0;
  double y1 = 0.0;
  double x2 = 0.0;
  double y2 = 0.0;
  std::optional<double> ratio;
  std::optional<bool> gt_inlier;

  Vec3 left() const { return {x1, y1, 1.0}; }
  Vec3 right() const { return {x2, y2, 1.0}; }
  bool operator==(const Correspondence&) const = default;
};

bool is_valid(const Correspondence& c);

enum class MatrixKind { Fundamental, Essential };

struct Model3x3 {
  Mat3 m = Mat3::Zero();
  MatrixKind kind = MatrixKind::Fundamental;
};

/// Line a*x + b*y + c = 0 with a^2 + b^2 = 1.
struct Line2 {
  double a = 0.0;
  double b = 1.0;
  double c = 0.0;

  /// Rescales arbitrary coefficients to unit normal. Throws DegenerateModel if
  /// (a, b) vanishes.
  static Line2 normalized(double a, double b, double c);
  Vec3 coefficients() const { return {a, b, c}; }
};

/// Relative pose mapping left-camera points into the right camera:
/// X' = R X + t, with t a unit direction.
struct Pose {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::UnitX();
};

/// Symmetric first-order epipolar error
///   (x'^T M x)^2 / ([Mx]_0^2 + [Mx]_1^2 + [M^T x']_0^2 + [M^T x']_1^2).
/// Throws DegenerateModel when the denominator falls below 1e-24.
double epipolar_error(const Correspondence& y, const Mat3& m);
inline double epipolar_error(const Correspondence& y, const Model3x3& m) {
  return epipolar_error(y, m.m);
}
/// Same as epipolar_error but reports the degenerate case as nullopt.
std::optional<double> try_epipolar_error(const Correspondence& y, const Mat3& m) noexcept;

/// sqrt(epipolar_error): the first-order distance used for inlier tests, so
/// thresholds are in image units; +inf when the error is undefined.
double epipolar_distance(const Correspondence& y, const Mat3& m) noexcept;
inline double epipolar_distance(const Correspondence& y, const Model3x3& m) noexcept {
  return epipolar_distance(y, m.m);
}

double point_line_distance(const Vec2& p, const Line2& l);

struct NormalizationStats {
  std::array<double, 4> mean{};
  std::array<double, 4> stddev{1.0, 1.0, 1.0, 1.0};
};

struct NormalizedSet {
  std::vector<Correspondence> correspondences;
  NormalizationStats stats;
};

/// (v - mean) / std per coordinate dimension (x1, y1, x2, y2), population
/// statistics. Stats are computed from the input when not supplied.
NormalizedSet normalize_coordinates(std::span<const Correspondence> set,
                                    const std::optional<NormalizationStats>& stats = std::nullopt);
std::vector<Correspondence> denormalize_coordinates(std::span<const Correspondence> set,
                                                    const NormalizationStats& stats);

Mat3 skew(const Vec3& v);
/// E = [t]x R, scaled to unit Frobenius norm.
Mat3 compose_essential(const Pose& pose);
/// Replaces the singular values (s1, s2, s3) by ((s1+s2)/2, (s1+s2)/2, 0).
Mat3 project_to_essential(const Mat3& m);

/// Picks the (R, +-t) factorization of E that places a strict majority of the
/// supports in front of both cameras.
Pose decompose_essential(const Model3x3& e, std::span<const Correspondence> supports);

double rotation_angle_deg(const Mat3& r_a, const Mat3& r_b);
double translation_angle_deg(const Vec3& t_a, const Vec3& t_b);
/// max(rotation angle, undirected translation angle), in degrees.
double angular_pose_error(const Pose& estimate, const Pose& gt);

}  // namespace ngsac
