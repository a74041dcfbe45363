#include "ngsac/problem.hpp"

#include <limits>

namespace ngsac {

LineProblem line_problem(double tau) {
  LineProblem p;
  p.minimal_size = 2;
  p.solve = [](std::span<const Vec2> pts) { return std::vector<Line2>{solve_line(pts[0], pts[1])}; };
  p.residual = [](const Vec2& y, const Line2& l) { return point_line_distance(y, l); };
  p.refit = [](std::span<const Vec2> pts) { return refit_line(pts); };
  p.tau = tau;
  return p;
}

EpipolarProblem essential_problem(double tau) {
  EpipolarProblem p;
  p.minimal_size = 8;
  p.solve = [](std::span<const Correspondence> c) {
    return std::vector<Model3x3>{solve_fundamental_8pt(c, MatrixKind::Essential)};
  };
  p.residual = [](const Correspondence& y, const Model3x3& m) { return epipolar_distance(y, m); };
  p.refit = [](std::span<const Correspondence> c) { return refit_epipolar(c, MatrixKind::Essential); };
  p.tau = tau;
  return p;
}

EpipolarProblem fundamental_problem(double tau, bool seven_point) {
  EpipolarProblem p;
  p.minimal_size = seven_point ? 7 : 8;
  if (seven_point) {
    p.solve = [](std::span<const Correspondence> c) { return solve_fundamental_7pt(c); };
  } else {
    p.solve = [](std::span<const Correspondence> c) {
      return std::vector<Model3x3>{solve_fundamental_8pt(c, MatrixKind::Fundamental)};
    };
  }
  p.residual = [](const Correspondence& y, const Model3x3& m) { return epipolar_distance(y, m); };
  p.refit = [](std::span<const Correspondence> c) {
    return refit_epipolar(c, MatrixKind::Fundamental);
  };
  p.tau = tau;
  return p;
}

}  // namespace ngsac
