#include "ngsac/solvers.hpp"

#include "ngsac/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace ngsac {

namespace {

constexpr double kDegeneracyRatio = 1e-10;
constexpr double kDiscriminantTol = 1e-12;

// Hartley conditioning: centroid to origin, mean distance sqrt(2).
Mat3 conditioning_transform(std::span<const Correspondence> corrs, bool right) {
  Vec2 centroid = Vec2::Zero();
  for (const auto& c : corrs) centroid += right ? Vec2(c.x2, c.y2) : Vec2(c.x1, c.y1);
  centroid /= static_cast<double>(corrs.size());
  double mean_dist = 0.0;
  for (const auto& c : corrs) {
    mean_dist += ((right ? Vec2(c.x2, c.y2) : Vec2(c.x1, c.y1)) - centroid).norm();
  }
  mean_dist /= static_cast<double>(corrs.size());
  if (!(mean_dist > 1e-300)) throw Error(ErrorCode::RankDeficient, "all points coincide");
  const double s = std::sqrt(2.0) / mean_dist;
  Mat3 t;
  t << s, 0.0, -s * centroid.x(),
       0.0, s, -s * centroid.y(),
       0.0, 0.0, 1.0;
  return t;
}

Eigen::MatrixXd design_matrix(std::span<const Correspondence> corrs, const Mat3& t1, const Mat3& t2) {
  Eigen::MatrixXd a(static_cast<Eigen::Index>(corrs.size()), 9);
  for (std::size_t i = 0; i < corrs.size(); ++i) {
    const Vec3 x = t1 * corrs[i].left();
    const Vec3 xp = t2 * corrs[i].right();
    const auto r = static_cast<Eigen::Index>(i);
    for (int row = 0; row < 3; ++row) {
      for (int col = 0; col < 3; ++col) a(r, 3 * row + col) = xp(row) * x(col);
    }
  }
  return a;
}

Mat3 reshape(const Eigen::VectorXd& f) {
  Mat3 m;
  m << f(0), f(1), f(2), f(3), f(4), f(5), f(6), f(7), f(8);
  return m;
}

Mat3 unit_frobenius(const Mat3& m) {
  const double n = m.norm();
  if (!(n > 0.0)) throw Error(ErrorCode::RankDeficient, "solver produced a zero matrix");
  return m / n;
}

// Real roots of the monic depressed cubic t^3 + p t + q.
std::vector<double> depressed_cubic_roots(double p, double q) {
  const double disc = -(4.0 * p * p * p + 27.0 * q * q);
  const double scale = 4.0 * std::abs(p * p * p) + 27.0 * q * q;
  if (scale == 0.0) return {0.0};
  const double rel = disc / scale;
  if (std::abs(rel) <= kDiscriminantTol) {
    if (std::abs(p) <= kDiscriminantTol * (1.0 + std::abs(q))) return {0.0};
    return {3.0 * q / p, -1.5 * q / p};
  }
  if (rel > 0.0) {
    const double m = 2.0 * std::sqrt(-p / 3.0);
    const double arg = std::clamp(3.0 * q / (p * m), -1.0, 1.0);
    const double theta = std::acos(arg) / 3.0;
    std::vector<double> roots;
    for (int k = 0; k < 3; ++k) {
      roots.push_back(m * std::cos(theta - 2.0 * std::numbers::pi * k / 3.0));
    }
    return roots;
  }
  const double s = std::sqrt(q * q / 4.0 + p * p * p / 27.0);
  return {std::cbrt(-q / 2.0 + s) + std::cbrt(-q / 2.0 - s)};
}

double polish(double x, double c3, double c2, double c1, double c0) {
  for (int it = 0; it < 4; ++it) {
    const double f = ((c3 * x + c2) * x + c1) * x + c0;
    const double df = (3.0 * c3 * x + 2.0 * c2) * x + c1;
    if (df == 0.0) break;
    const double next = x - f / df;
    if (!std::isfinite(next)) break;
    if (std::abs(((c3 * next + c2) * next + c1) * next + c0) >= std::abs(f)) break;
    x = next;
  }
  return x;
}

}  // namespace

Line2 solve_line(const Vec2& p, const Vec2& q, LineJacobian* jacobian) {
  const Vec2 d = q - p;
  const double len = d.norm();
  if (!(len > 1e-12)) throw Error(ErrorCode::DegenerateMinimalSet, "line points coincide");
  const Vec2 u(-d.y(), d.x());
  const Vec2 n = u / len;
  const double c = -n.dot(p);
  if (jacobian) {
    // du / d(px, py, qx, qy)
    Eigen::Matrix<double, 2, 4> du;
    du << 0.0, 1.0, 0.0, -1.0,
          -1.0, 0.0, 1.0, 0.0;
    const Eigen::Matrix2d dn_du = (Eigen::Matrix2d::Identity() - n * n.transpose()) / len;
    const Eigen::Matrix<double, 2, 4> dn = dn_du * du;
    Eigen::Matrix<double, 1, 4> dc = -(p.transpose() * dn);
    dc(0) -= n.x();
    dc(1) -= n.y();
    jacobian->row(0) = dn.row(0);
    jacobian->row(1) = dn.row(1);
    jacobian->row(2) = dc;
  }
  return Line2{n.x(), n.y(), c};
}

Model3x3 solve_fundamental_8pt(std::span<const Correspondence> corrs, MatrixKind kind) {
  require(corrs.size() >= 8, "8-point solver needs at least 8 correspondences");
  const Mat3 t1 = conditioning_transform(corrs, false);
  const Mat3 t2 = conditioning_transform(corrs, true);
  const Eigen::MatrixXd a = design_matrix(corrs, t1, t2);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  if (!(sv(0) > 0.0) || sv(7) / sv(0) < kDegeneracyRatio) {
    throw Error(ErrorCode::RankDeficient, "8-point design matrix has a null space of dimension > 1");
  }
  Mat3 f = reshape(svd.matrixV().col(8));
  Eigen::JacobiSVD<Mat3> fsvd(f, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Vec3 s = fsvd.singularValues();
  s(2) = 0.0;
  f = fsvd.matrixU() * s.asDiagonal() * fsvd.matrixV().transpose();
  f = t2.transpose() * f * t1;
  if (kind == MatrixKind::Essential) f = project_to_essential(f);
  return Model3x3{unit_frobenius(f), kind};
}

std::vector<double> solve_cubic(double c3, double c2, double c1, double c0) {
  const double scale = std::max({std::abs(c3), std::abs(c2), std::abs(c1), std::abs(c0)});
  if (scale == 0.0) return {};
  c3 /= scale;
  c2 /= scale;
  c1 /= scale;
  c0 /= scale;
  std::vector<double> roots;
  if (std::abs(c3) <= kDiscriminantTol) {
    if (std::abs(c2) <= kDiscriminantTol) {
      if (std::abs(c1) > kDiscriminantTol) roots.push_back(-c0 / c1);
      return roots;
    }
    const double disc = c1 * c1 - 4.0 * c2 * c0;
    const double dscale = c1 * c1 + std::abs(4.0 * c2 * c0);
    if (std::abs(disc) <= kDiscriminantTol * dscale) {
      roots.push_back(-c1 / (2.0 * c2));
    } else if (disc > 0.0) {
      // Numerically stable pair.
      const double qv = -0.5 * (c1 + std::copysign(std::sqrt(disc), c1));
      roots.push_back(qv / c2);
      if (qv != 0.0) roots.push_back(c0 / qv);
    }
  } else {
    const double a = c2 / c3;
    const double b = c1 / c3;
    const double c = c0 / c3;
    const double p = b - a * a / 3.0;
    const double q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
    for (const double t : depressed_cubic_roots(p, q)) roots.push_back(t - a / 3.0);
    for (auto& r : roots) r = polish(r, c3, c2, c1, c0);
  }
  std::sort(roots.begin(), roots.end());
  return roots;
}

std::vector<Model3x3> solve_fundamental_7pt(std::span<const Correspondence> corrs) {
  require(corrs.size() == 7, "7-point solver needs exactly 7 correspondences");
  const Mat3 t1 = conditioning_transform(corrs, false);
  const Mat3 t2 = conditioning_transform(corrs, true);
  const Eigen::MatrixXd a = design_matrix(corrs, t1, t2);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  if (!(sv(0) > 0.0) || sv(6) / sv(0) < kDegeneracyRatio) {
    throw Error(ErrorCode::RankDeficient, "7-point design matrix null space is not 2-dimensional");
  }
  const Mat3 f1 = reshape(svd.matrixV().col(7));
  const Mat3 f2 = reshape(svd.matrixV().col(8));
  // det(lambda F1 + (1 - lambda) F2) = det(F2 + lambda D), D = F1 - F2.
  const Mat3 d = f1 - f2;
  auto adjugate = [](const Mat3& m) {
    Mat3 adj;
    adj(0, 0) = m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1);
    adj(0, 1) = m(0, 2) * m(2, 1) - m(0, 1) * m(2, 2);
    adj(0, 2) = m(0, 1) * m(1, 2) - m(0, 2) * m(1, 1);
    adj(1, 0) = m(1, 2) * m(2, 0) - m(1, 0) * m(2, 2);
    adj(1, 1) = m(0, 0) * m(2, 2) - m(0, 2) * m(2, 0);
    adj(1, 2) = m(0, 2) * m(1, 0) - m(0, 0) * m(1, 2);
    adj(2, 0) = m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0);
    adj(2, 1) = m(0, 1) * m(2, 0) - m(0, 0) * m(2, 1);
    adj(2, 2) = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
    return adj;
  };
  const double c0 = f2.determinant();
  const double c1 = (adjugate(f2) * d).trace();
  const double c2 = (adjugate(d) * f2).trace();
  const double c3 = d.determinant();

  std::vector<Model3x3> out;
  for (const double lambda : solve_cubic(c3, c2, c1, c0)) {
    const Mat3 f = lambda * f1 + (1.0 - lambda) * f2;
    out.push_back(Model3x3{unit_frobenius(t2.transpose() * f * t1), MatrixKind::Fundamental});
  }
  return out;
}

Line2 refit_line(std::span<const Vec2> points) {
  require(points.size() >= 2, "line refit needs at least 2 points");
  Vec2 centroid = Vec2::Zero();
  for (const auto& p : points) centroid += p;
  centroid /= static_cast<double>(points.size());
  Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
  for (const auto& p : points) {
    const Vec2 r = p - centroid;
    cov += r * r.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(cov);
  if (!(eig.eigenvalues()(1) > 0.0)) {
    throw Error(ErrorCode::DegenerateMinimalSet, "refit points coincide");
  }
  const Vec2 n = eig.eigenvectors().col(0);
  return Line2::normalized(n.x(), n.y(), -n.dot(centroid));
}

Model3x3 refit_epipolar(std::span<const Correspondence> inliers, MatrixKind kind) {
  require(inliers.size() >= 8, "epipolar refit needs at least 8 inliers");
  return solve_fundamental_8pt(inliers, kind);
}

}  // namespace ngsac
