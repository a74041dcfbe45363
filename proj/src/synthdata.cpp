#include "ngsac/synthdata.hpp"

#include "ngsac/error.hpp"
#include "ngsac/rng.hpp"

#include <cmath>
#include <numbers>

namespace ngsac {

void validate(const EpipolarSceneConfig& c) {
  require(c.n_correspondences >= 16, "scenes need at least 16 correspondences");
  require(c.outlier_rate >= 0.0 && c.outlier_rate <= 1.0, "outlier rate must lie in [0, 1]");
  require(c.noise_std >= 0.0 && std::isfinite(c.noise_std), "noise std must be >= 0");
  require(c.pixel_scale > 0.0, "pixel scale must be positive");
  if (c.side_info.kind == SideInfoKind::Informative) {
    const double s = c.side_info.separation;
    require(0.5 - s / 2 - kRatioBandWidth >= 0.0 && 0.5 + s / 2 + kRatioBandWidth <= 1.0,
            "ratio bands must stay inside [0, 1]");
  }
}

Pose random_pose(CounterRng& rng, double max_angle_rad) {
  Vec3 axis(rng.normal(), rng.normal(), rng.normal());
  while (axis.norm() < 1e-9) axis = Vec3(rng.normal(), rng.normal(), rng.normal());
  const double angle = rng.uniform(0.0, max_angle_rad);
  Vec3 t(rng.normal(), rng.normal(), rng.normal());
  while (t.norm() < 1e-9) t = Vec3(rng.normal(), rng.normal(), rng.normal());
  Pose p;
  p.rotation = Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix();
  p.translation = t.normalized();
  return p;
}

namespace {

bool in_view(const Vec3& x) {
  return x.z() > 0.5 && std::abs(x.x() / x.z()) <= 1.0 && std::abs(x.y() / x.z()) <= 1.0;
}

double side_ratio(const SideInfo& info, bool inlier, CounterRng& rng) {
  if (info.kind == SideInfoKind::Uninformative) return rng.uniform();
  const double s = info.separation;
  return inlier ? rng.uniform(0.5 - s / 2 - kRatioBandWidth, 0.5 - s / 2)
                : rng.uniform(0.5 + s / 2, 0.5 + s / 2 + kRatioBandWidth);
}

}  // namespace

EpipolarScene gen_epipolar_scene(const EpipolarSceneConfig& config) {
  validate(config);
  CounterRng rng(config.seed, 0x45504950ULL);
  EpipolarScene scene;
  scene.gt_pose = config.pose ? *config.pose : random_pose(rng);
  scene.gt_essential = Model3x3{compose_essential(scene.gt_pose), MatrixKind::Essential};
  scene.pixel_scale = config.pixel_scale;
  scene.intrinsics = Vec3(config.pixel_scale, config.pixel_scale, 1.0).asDiagonal();
  const Mat3 k_inv = scene.intrinsics.inverse();
  Mat3 f = k_inv.transpose() * scene.gt_essential.m * k_inv;
  scene.gt_fundamental = Model3x3{f / f.norm(), MatrixKind::Fundamental};

  const std::size_t n = config.n_correspondences;
  const auto n_out = static_cast<std::size_t>(std::llround(config.outlier_rate * static_cast<double>(n)));
  const std::size_t n_in = n - n_out;
  const Mat3& r = scene.gt_pose.rotation;
  const Vec3& t = scene.gt_pose.translation;

  std::vector<Correspondence> corrs;
  corrs.reserve(n);
  for (std::size_t i = 0; i < n_in; ++i) {
    Vec3 x1, x2;
    int attempts = 0;
    do {
      require(++attempts < 10000, "pose leaves no common field of view");
      x1 = Vec3(rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0), rng.uniform(4.0, 8.0));
      x2 = r * x1 + t;
    } while (!in_view(x1) || !in_view(x2));
    Correspondence c;
    c.x1 = x1.x() / x1.z() + config.noise_std * rng.normal();
    c.y1 = x1.y() / x1.z() + config.noise_std * rng.normal();
    c.x2 = x2.x() / x2.z() + config.noise_std * rng.normal();
    c.y2 = x2.y() / x2.z() + config.noise_std * rng.normal();
    c.gt_inlier = true;
    corrs.push_back(c);
  }
  for (std::size_t i = 0; i < n_out; ++i) {
    Correspondence c;
    c.x1 = rng.uniform(-1.0, 1.0);
    c.y1 = rng.uniform(-1.0, 1.0);
    c.x2 = rng.uniform(-1.0, 1.0);
    c.y2 = rng.uniform(-1.0, 1.0);
    c.gt_inlier = false;
    corrs.push_back(c);
  }
  // Fisher-Yates with our own index draws so scenes are identical across
  // standard libraries.
  for (std::size_t i = corrs.size(); i > 1; --i) {
    std::swap(corrs[i - 1], corrs[rng.uniform_index(i)]);
  }
  if (config.side_info.kind != SideInfoKind::None) {
    for (auto& c : corrs) c.ratio = side_ratio(config.side_info, *c.gt_inlier, rng);
  }
  scene.correspondences = std::move(corrs);
  return scene;
}

std::vector<Correspondence> to_pixels(const EpipolarScene& scene) {
  std::vector<Correspondence> out = scene.correspondences;
  for (auto& c : out) {
    c.x1 *= scene.pixel_scale;
    c.y1 *= scene.pixel_scale;
    c.x2 *= scene.pixel_scale;
    c.y2 *= scene.pixel_scale;
  }
  return out;
}

void validate(const LineSceneConfig& c) {
  require(c.grid >= 2 && c.patch >= 1 && c.grid % c.patch == 0, "grid must be divisible by patch");
  require(c.grid / c.patch >= 2, "need at least 2 patches per side");
  require(c.clutter_fraction >= 0.0 && c.clutter_fraction <= 1.0, "clutter fraction must lie in [0, 1]");
  require(c.point_noise >= 0.0, "point noise must be >= 0");
  if (c.line) require(std::abs(c.line->a * c.line->a + c.line->b * c.line->b - 1.0) < 1e-9, "line must be normalized");
}

std::vector<Vec2> patch_centers(std::size_t grid, std::size_t patch) {
  const std::size_t per_side = grid / patch;
  const double step = static_cast<double>(patch) / static_cast<double>(grid);
  std::vector<Vec2> out;
  for (std::size_t pr = 0; pr < per_side; ++pr) {
    for (std::size_t pc = 0; pc < per_side; ++pc) {
      out.emplace_back((static_cast<double>(pc) + 0.5) * step, (static_cast<double>(pr) + 0.5) * step);
    }
  }
  return out;
}

double line_point_range(std::size_t grid, std::size_t patch) {
  return 1.5 * static_cast<double>(patch) / static_cast<double>(grid);
}

Eigen::MatrixXd patch_features(const Eigen::MatrixXd& raster, std::size_t patch) {
  const auto grid = static_cast<std::size_t>(raster.rows());
  require(raster.cols() == raster.rows() && grid % patch == 0, "raster must be square and divisible by patch");
  const std::size_t per_side = grid / patch;
  const double area = static_cast<double>(patch * patch);
  Eigen::MatrixXd f(static_cast<Eigen::Index>(per_side * per_side), static_cast<Eigen::Index>(kLineFeatureDim));
  for (std::size_t pr = 0; pr < per_side; ++pr) {
    for (std::size_t pc = 0; pc < per_side; ++pc) {
      const auto block = raster.block(static_cast<Eigen::Index>(pr * patch), static_cast<Eigen::Index>(pc * patch),
                                      static_cast<Eigen::Index>(patch), static_cast<Eigen::Index>(patch));
      const double mean = block.sum() / area;
      const double var = (block.array() - mean).square().sum() / area;
      double mass = 0.0, cx = 0.0, cy = 0.0;
      for (Eigen::Index r = 0; r < block.rows(); ++r) {
        for (Eigen::Index c = 0; c < block.cols(); ++c) {
          const double v = block(r, c);
          mass += v;
          cx += v * (static_cast<double>(c) + 0.5);
          cy += v * (static_cast<double>(r) + 0.5);
        }
      }
      const auto row = static_cast<Eigen::Index>(pr * per_side + pc);
      f(row, 0) = mean;
      f(row, 1) = var;
      const double half = static_cast<double>(patch) / 2.0;
      f(row, 2) = mass > 0.0 ? (cx / mass - half) / static_cast<double>(patch) : 0.0;
      f(row, 3) = mass > 0.0 ? (cy / mass - half) / static_cast<double>(patch) : 0.0;
    }
  }
  return f;
}

LineScene gen_line_scene(const LineSceneConfig& config) {
  validate(config);
  CounterRng rng(config.seed, 0x4C494E45ULL);
  LineScene scene;
  scene.grid = config.grid;
  scene.patch = config.patch;
  if (config.line) {
    scene.gt_line = *config.line;
  } else {
    // Horizon-like: within 30 degrees of horizontal, crossing the middle band.
    const double angle = rng.uniform(-std::numbers::pi / 6.0, std::numbers::pi / 6.0);
    const double y_mid = rng.uniform(0.25, 0.75);
    const Vec2 dir(std::cos(angle), std::sin(angle));
    const Vec2 p(0.5, y_mid);
    scene.gt_line = Line2::normalized(-dir.y(), dir.x(), dir.y() * p.x() - dir.x() * p.y());
  }
  const auto g = static_cast<Eigen::Index>(config.grid);
  const double gd = static_cast<double>(config.grid);
  scene.raster = Eigen::MatrixXd::Zero(g, g);
  const auto n_clutter = static_cast<std::size_t>(
      std::llround(config.clutter_fraction * static_cast<double>(config.n_bright)));
  const std::size_t n_line = config.n_bright - n_clutter;
  const Line2& l = scene.gt_line;
  for (std::size_t i = 0; i < n_line; ++i) {
    if (std::abs(l.b) < 1e-12) break;
    // Column centre, exact line height, vertical jitter, then the row holding it.
    const auto col = static_cast<Eigen::Index>(rng.uniform_index(config.grid));
    const double x = (static_cast<double>(col) + 0.5) / gd;
    const double y = -(l.a * x + l.c) / l.b + config.point_noise / gd * rng.normal();
    const double row = std::floor(y * gd);
    if (row < 0.0 || row >= gd) continue;
    scene.raster(static_cast<Eigen::Index>(row), col) = 1.0;
  }
  for (std::size_t i = 0; i < n_clutter; ++i) {
    const auto r = static_cast<Eigen::Index>(rng.uniform_index(config.grid));
    const auto c = static_cast<Eigen::Index>(rng.uniform_index(config.grid));
    scene.raster(r, c) = 1.0;
  }
  scene.features = patch_features(scene.raster, config.patch);
  scene.anchors = patch_centers(config.grid, config.patch);
  return scene;
}

}  // namespace ngsac
