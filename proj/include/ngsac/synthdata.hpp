#pragma once

#include "ngsac/geometry.hpp"
#include "ngsac/rng.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <vector>

namespace ngsac {

enum class SideInfoKind { None, Informative, Uninformative };

struct SideInfo {
  SideInfoKind kind = SideInfoKind::None;
  /// Gap between the inlier and outlier ratio bands (Informative only).
  double separation = 0.3;

  static SideInfo none() { return {}; }
  static SideInfo informative(double separation = 0.3) { return {SideInfoKind::Informative, separation}; }
  static SideInfo uninformative() { return {SideInfoKind::Uninformative, 0.0}; }
};

/// Width of each Informative ratio band. Inlier ratios are uniform in
/// [0.5 - s/2 - width, 0.5 - s/2], outlier ratios in [0.5 + s/2, 0.5 + s/2 + width].
inline constexpr double kRatioBandWidth = 0.3;

struct EpipolarSceneConfig {
  std::size_t n_correspondences = 500;
  double outlier_rate = 0.5;
  /// Std of the isotropic image noise on inliers, normalized units.
  double noise_std = 2e-4;
  std::optional<Pose> pose;  // random when empty
  SideInfo side_info;
  std::uint64_t seed = 0;
  /// Normalized-to-"pixel" factor used by the fundamental-matrix tasks.
  double pixel_scale = 100.0;
};

void validate(const EpipolarSceneConfig& config);

struct EpipolarScene {
  std::vector<Correspondence> correspondences;  // normalized (calibrated) coordinates
  Model3x3 gt_essential;
  Model3x3 gt_fundamental;  // for pixel coordinates: K^-T E K^-1
  Pose gt_pose;
  Mat3 intrinsics = Mat3::Identity();  // K = diag(s, s, 1)
  double pixel_scale = 1.0;
};

EpipolarScene gen_epipolar_scene(const EpipolarSceneConfig& config);

/// The scene's correspondences scaled to "pixel" units (x * pixel_scale).
std::vector<Correspondence> to_pixels(const EpipolarScene& scene);

/// Random rotation (angle up to max_angle_rad about a uniform axis) and a
/// unit translation.
Pose random_pose(CounterRng& rng, double max_angle_rad = 0.25);

struct LineSceneConfig {
  std::size_t grid = 64;
  std::size_t patch = 8;
  std::optional<Line2> line;  // random when empty; [0,1]^2 image frame
  /// Std of the vertical jitter of line pixels, in pixels.
  double point_noise = 0.5;
  /// Fraction of bright pixels placed uniformly at random.
  double clutter_fraction = 0.3;
  /// Total number of bright pixels drawn (duplicates merge).
  std::size_t n_bright = 128;
  std::uint64_t seed = 0;
};

void validate(const LineSceneConfig& config);

/// Image frame: x to the right, y down, both in [0, 1]; pixel (r, c) covers
/// [c, c+1) x [r, r+1) scaled by 1/grid.
struct LineScene {
  Eigen::MatrixXd raster;     // grid x grid, 1 for bright pixels
  Eigen::MatrixXd features;   // one row per patch (row-major patch order)
  std::vector<Vec2> anchors;  // patch centers
  Line2 gt_line;
  std::size_t grid = 0;
  std::size_t patch = 0;
};

LineScene gen_line_scene(const LineSceneConfig& config);

/// Mean intensity, intensity variance and the centroid offset (dx, dy) of
/// bright pixels from the patch center in patch units (zero without bright
/// pixels).
inline constexpr std::size_t kLineFeatureDim = 4;
Eigen::MatrixXd patch_features(const Eigen::MatrixXd& raster, std::size_t patch);
std::vector<Vec2> patch_centers(std::size_t grid, std::size_t patch);

/// Offset range of the point head for a line scene: 1.5 patches.
double line_point_range(std::size_t grid, std::size_t patch);

}  // namespace ngsac
