#pragma once

#include "ngsac/geometry.hpp"
#include "ngsac/solvers.hpp"

#include <functional>
#include <span>
#include <vector>

namespace ngsac {

/// Everything the robust estimators need to know about one model family:
/// the minimal solver f, the residual used for inlier tests (epipolar_distance
/// for the epipolar problems), the refit, and
/// the inlier threshold tau. Solvers may return several candidates (7-point)
/// and signal degenerate minimal sets by throwing DegenerateMinimalSet or
/// RankDeficient.
template <class Obs, class Model>
struct Problem {
  using observation_type = Obs;
  using model_type = Model;

  std::size_t minimal_size = 0;
  std::function<std::vector<Model>(std::span<const Obs>)> solve;
  std::function<double(const Obs&, const Model&)> residual;
  std::function<Model(std::span<const Obs>)> refit;
  double tau = 0.0;
};

using LineProblem = Problem<Vec2, Line2>;
using EpipolarProblem = Problem<Correspondence, Model3x3>;

inline constexpr double kEssentialTau = 1e-3;
inline constexpr double kFundamentalTauPx = 0.1;
inline constexpr double kFundamentalStatsTauPx = 1.0;
inline constexpr double kLineTau = 0.05;

LineProblem line_problem(double tau = kLineTau);
/// Essential matrices from 8 calibrated correspondences plus manifold
/// projection.
EpipolarProblem essential_problem(double tau = kEssentialTau);
/// Fundamental matrices from the 7-point (default) or 8-point solver.
EpipolarProblem fundamental_problem(double tau = kFundamentalTauPx, bool seven_point = true);

/// Model-agnostic hypothesis score s(h, Y).
template <class Obs, class Model>
using ScoreFn = std::function<double(const Model&, std::span<const Obs>)>;

/// Hard inlier count at the problem's threshold.
template <class Obs, class Model>
ScoreFn<Obs, Model> inlier_score(const Problem<Obs, Model>& problem) {
  return [residual = problem.residual, tau = problem.tau](const Model& m, std::span<const Obs> obs) {
    std::size_t count = 0;
    for (const auto& y : obs) {
      if (residual(y, m) < tau) ++count;
    }
    return static_cast<double>(count);
  };
}

}  // namespace ngsac
