#pragma once

// Oracles shared by the unit tests and the acceptance binary.

#include "ngsac/geometry.hpp"
#include "ngsac/rng.hpp"
#include "ngsac/solvers.hpp"
#include "ngsac/synthdata.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

namespace ngsac::test {

inline Mat3 rot_z(double deg) {
  return Eigen::AngleAxisd(deg * std::numbers::pi / 180.0, Vec3::UnitZ()).toRotationMatrix();
}

inline Mat3 normalized(Mat3 m) {
  m /= m.norm();
  return m;
}

/// Distance between two matrices defined up to scale and sign.
inline double projective_distance(const Mat3& a, const Mat3& b) {
  const Mat3 na = normalized(a), nb = normalized(b);
  return std::min((na - nb).cwiseAbs().maxCoeff(), (na + nb).cwiseAbs().maxCoeff());
}

/// Noise-free two-view scene with distinct random intrinsics, so the
/// generating matrix is a general fundamental matrix.
struct FScene {
  std::vector<Correspondence> corrs;
  Mat3 f;
  Pose pose;
};

inline FScene make_f_scene(std::uint64_t seed, std::size_t n) {
  CounterRng rng(seed, 7);
  FScene s;
  s.pose = random_pose(rng, 0.4);
  auto intr = [&] {
    Mat3 k = Mat3::Identity();
    k(0, 0) = rng.uniform(0.8, 1.2);
    k(1, 1) = rng.uniform(0.8, 1.2);
    k(0, 1) = rng.uniform(-0.05, 0.05);
    k(0, 2) = rng.uniform(-0.1, 0.1);
    k(1, 2) = rng.uniform(-0.1, 0.1);
    return k;
  };
  const Mat3 k1 = intr(), k2 = intr();
  s.f = normalized(k2.inverse().transpose() * compose_essential(s.pose) * k1.inverse());
  while (s.corrs.size() < n) {
    const Vec3 x(rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(4, 8));
    const Vec3 x2 = s.pose.rotation * x + s.pose.translation;
    if (x2.z() < 0.5) continue;
    const Vec3 a = k1 * (x / x.z()), b = k2 * (x2 / x2.z());
    s.corrs.push_back({a.x(), a.y(), b.x(), b.y(), std::nullopt, true});
  }
  return s;
}

inline double max_epipolar_distance(std::span<const Correspondence> corrs, const Mat3& m) {
  double worst = 0.0;
  for (const auto& c : corrs) worst = std::max(worst, epipolar_distance(c, m));
  return worst;
}

/// Independent 7-point oracle: the two null-space vectors of the design
/// matrix span the pencil F(theta) = cos(theta) F1 + sin(theta) F2, which
/// visits every member exactly once for theta in [0, pi). det F(theta) is an
/// odd cubic form, so det F(theta + pi) = -det F(theta); roots are located by
/// dense sign scanning plus bisection.
inline std::vector<Mat3> seven_point_oracle(std::span<const Correspondence> corrs, std::size_t samples = 20000) {
  Eigen::Matrix<double, 7, 9> a;
  for (int i = 0; i < 7; ++i) {
    const auto& c = corrs[static_cast<std::size_t>(i)];
    a.row(i) << c.x2 * c.x1, c.x2 * c.y1, c.x2, c.y2 * c.x1, c.y2 * c.y1, c.y2, c.x1, c.y1, 1.0;
  }
  Eigen::JacobiSVD<Eigen::Matrix<double, 7, 9>> svd(a, Eigen::ComputeFullV);
  auto as_mat = [](const Eigen::Matrix<double, 9, 1>& v) {
    Mat3 m;
    m << v(0), v(1), v(2), v(3), v(4), v(5), v(6), v(7), v(8);
    return m;
  };
  const Mat3 f1 = as_mat(svd.matrixV().col(7)), f2 = as_mat(svd.matrixV().col(8));
  auto pencil = [&](double t) { return Mat3(std::cos(t) * f1 + std::sin(t) * f2); };
  auto det = [&](double t) { return pencil(t).determinant(); };
  const double t0 = 0.123456789;  // scan start away from the basis vectors
  std::vector<Mat3> roots;
  const double step = std::numbers::pi / static_cast<double>(samples);
  double prev_t = t0, prev = det(t0);
  for (std::size_t i = 1; i <= samples; ++i) {
    const double t = t0 + step * static_cast<double>(i);
    // The last sample is t0 + pi, where det is exactly -det(t0).
    const double v = i == samples ? -det(t0) : det(t);
    if (prev == 0.0) {
      roots.push_back(pencil(prev_t));
    } else if ((prev < 0.0) != (v < 0.0) && v != 0.0) {
      double lo = prev_t, hi = t, flo = prev;
      for (int k = 0; k < 200 && hi - lo > 1e-15; ++k) {
        const double mid = 0.5 * (lo + hi);
        const double fm = det(mid);
        if ((fm < 0.0) == (flo < 0.0)) {
          lo = mid;
          flo = fm;
        } else {
          hi = mid;
        }
      }
      roots.push_back(pencil(0.5 * (lo + hi)));
    }
    prev_t = t;
    prev = v;
  }
  return roots;
}

}  // namespace ngsac::test
