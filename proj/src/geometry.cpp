#include "ngsac/geometry.hpp"

#include "ngsac/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace ngsac {

namespace {

constexpr double kRadToDeg = 180.0 / std::numbers::pi;

double coordinate(const Correspondence& c, int dim) {
  switch (dim) {
    case 0: return c.x1;
    case 1: return c.y1;
    case 2: return c.x2;
    default: return c.y2;
  }
}

void set_coordinate(Correspondence& c, int dim, double v) {
  switch (dim) {
    case 0: c.x1 = v; break;
    case 1: c.y1 = v; break;
    case 2: c.x2 = v; break;
    default: c.y2 = v; break;
  }
}

}  // namespace

bool is_valid(const Correspondence& c) {
  const bool finite = std::isfinite(c.x1) && std::isfinite(c.y1) && std::isfinite(c.x2) &&
                      std::isfinite(c.y2);
  const bool ratio_ok = !c.ratio || (*c.ratio >= 0.0 && *c.ratio <= 1.0);
  return finite && ratio_ok;
}

Line2 Line2::normalized(double a, double b, double c) {
  const double n = std::hypot(a, b);
  if (!(n > 0.0) || !std::isfinite(n)) {
    throw Error(ErrorCode::DegenerateModel, "line normal vanishes");
  }
  return Line2{a / n, b / n, c / n};
}

std::optional<double> try_epipolar_error(const Correspondence& y, const Mat3& m) noexcept {
  const Vec3 x = y.left();
  const Vec3 xp = y.right();
  const Vec3 mx = m * x;
  const Vec3 mtxp = m.transpose() * xp;
  const double num = xp.dot(mx);
  const double den = mx(0) * mx(0) + mx(1) * mx(1) + mtxp(0) * mtxp(0) + mtxp(1) * mtxp(1);
  if (!(den >= 1e-24)) return std::nullopt;
  return num * num / den;
}

double epipolar_error(const Correspondence& y, const Mat3& m) {
  const auto e = try_epipolar_error(y, m);
  if (!e) throw Error(ErrorCode::DegenerateModel, "epipolar line gradients vanish");
  return *e;
}

double epipolar_distance(const Correspondence& y, const Mat3& m) noexcept {
  const auto e = try_epipolar_error(y, m);
  return e ? std::sqrt(*e) : std::numeric_limits<double>::infinity();
}

double point_line_distance(const Vec2& p, const Line2& l) {
  return std::abs(l.a * p.x() + l.b * p.y() + l.c);
}

NormalizedSet normalize_coordinates(std::span<const Correspondence> set,
                                    const std::optional<NormalizationStats>& stats) {
  NormalizedSet out;
  if (stats) {
    out.stats = *stats;
  } else {
    require(!set.empty(), "normalize_coordinates needs a non-empty set");
    const double n = static_cast<double>(set.size());
    for (int d = 0; d < 4; ++d) {
      double mean = 0.0;
      for (const auto& c : set) mean += coordinate(c, d);
      mean /= n;
      double var = 0.0;
      for (const auto& c : set) {
        const double r = coordinate(c, d) - mean;
        var += r * r;
      }
      out.stats.mean[d] = mean;
      out.stats.stddev[d] = std::sqrt(var / n);
    }
  }
  for (int d = 0; d < 4; ++d) {
    if (!(out.stats.stddev[d] > 0.0)) {
      throw Error(ErrorCode::ZeroVariance, "coordinate dimension has zero spread");
    }
  }
  out.correspondences.assign(set.begin(), set.end());
  for (auto& c : out.correspondences) {
    for (int d = 0; d < 4; ++d) {
      set_coordinate(c, d, (coordinate(c, d) - out.stats.mean[d]) / out.stats.stddev[d]);
    }
  }
  return out;
}

std::vector<Correspondence> denormalize_coordinates(std::span<const Correspondence> set,
                                                    const NormalizationStats& stats) {
  std::vector<Correspondence> out(set.begin(), set.end());
  for (auto& c : out) {
    for (int d = 0; d < 4; ++d) {
      set_coordinate(c, d, coordinate(c, d) * stats.stddev[d] + stats.mean[d]);
    }
  }
  return out;
}

Mat3 skew(const Vec3& v) {
  Mat3 s;
  s << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return s;
}

Mat3 compose_essential(const Pose& pose) {
  const Mat3 e = skew(pose.translation) * pose.rotation;
  return e / e.norm();
}

Mat3 project_to_essential(const Mat3& m) {
  Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vec3 s = svd.singularValues();
  const double avg = 0.5 * (s(0) + s(1));
  return svd.matrixU() * Vec3(avg, avg, 0.0).asDiagonal() * svd.matrixV().transpose();
}

Pose decompose_essential(const Model3x3& e, std::span<const Correspondence> supports) {
  require(!supports.empty(), "decompose_essential needs at least one support");
  Eigen::JacobiSVD<Mat3> svd(e.m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 u = svd.matrixU();
  Mat3 v = svd.matrixV();
  if (u.determinant() < 0.0) u = -u;
  if (v.determinant() < 0.0) v = -v;
  Mat3 w;
  w << 0.0, -1.0, 0.0,
       1.0, 0.0, 0.0,
       0.0, 0.0, 1.0;
  const std::array<Mat3, 2> rotations{u * w * v.transpose(), u * w.transpose() * v.transpose()};
  const Vec3 t = u.col(2).normalized();

  std::size_t best_votes = 0;
  std::size_t best_count = 0;
  Pose best;
  for (const auto& r : rotations) {
    for (const double sign : {1.0, -1.0}) {
      const Vec3 tc = sign * t;
      std::size_t votes = 0;
      for (const auto& y : supports) {
        // Least-squares depths of  l2 * x2 = l1 * R x1 + t.
        const Vec3 a = r * y.left();
        const Vec3 b = -y.right();
        Eigen::Matrix2d ata;
        ata << a.dot(a), a.dot(b), a.dot(b), b.dot(b);
        const Eigen::Vector2d atb(-a.dot(tc), -b.dot(tc));
        const double det = ata.determinant();
        if (std::abs(det) < 1e-300) continue;
        const Eigen::Vector2d depth = ata.inverse() * atb;
        if (depth(0) > 0.0 && depth(1) > 0.0) ++votes;
      }
      if (votes > best_votes) {
        best_votes = votes;
        best_count = 1;
        best = Pose{r, tc};
      } else if (votes == best_votes) {
        ++best_count;
      }
    }
  }
  if (2 * best_votes <= supports.size() || best_count > 1) {
    throw Error(ErrorCode::CheiralityAmbiguous, "no factorization has a strict cheirality majority");
  }
  return best;
}

double rotation_angle_deg(const Mat3& r_a, const Mat3& r_b) {
  // atan2 form of arccos((tr(Ra^T Rb) - 1) / 2); keeps precision near zero.
  const Mat3 r = r_a.transpose() * r_b;
  const double cos_part = std::clamp(0.5 * (r.trace() - 1.0), -1.0, 1.0);
  const Vec3 axis(r(2, 1) - r(1, 2), r(0, 2) - r(2, 0), r(1, 0) - r(0, 1));
  const double sin_part = 0.5 * axis.norm();
  return std::atan2(sin_part, cos_part) * kRadToDeg;
}

double translation_angle_deg(const Vec3& t_a, const Vec3& t_b) {
  const Vec3 a = t_a.normalized();
  const Vec3 b = t_b.normalized();
  return std::atan2(a.cross(b).norm(), std::abs(a.dot(b))) * kRadToDeg;
}

double angular_pose_error(const Pose& estimate, const Pose& gt) {
  return std::max(rotation_angle_deg(estimate.rotation, gt.rotation),
                  translation_angle_deg(estimate.translation, gt.translation));
}

}  // namespace ngsac
