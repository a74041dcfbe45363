#include "ngsac/estimator.hpp"

#include <algorithm>
#include <cmath>

namespace ngsac {

EstimateReport<Model3x3> ratio_filtered_ransac(std::span<const Correspondence> correspondences,
                                               double threshold, const EstimatorConfig& config,
                                               const EpipolarProblem& problem) {
  auto filtered = ratio_filter(correspondences, threshold);
  if (filtered.kept.size() < problem.minimal_size) {
    auto r = ransac(correspondences, config, problem);
    r.warnings.push_back("ratio filter left fewer than N correspondences; used the unfiltered set");
    return r;
  }
  auto r = ransac(std::span<const Correspondence>(filtered.kept), config, problem);
  for (auto& i : r.inlier_indices) i = filtered.kept_indices[i];
  for (auto& set : r.minimal_sets) {
    for (auto& i : set.indices) i = filtered.kept_indices[i];
  }
  return r;
}

std::size_t dsac_select(std::span<const double> scores, CounterRng& rng) {
  const auto p = selection_distribution(scores);
  if (p.size() == 1) return 0;
  const double u = rng.uniform();
  double acc = 0.0;
  for (std::size_t j = 0; j < p.size(); ++j) {
    acc += p[j];
    if (u < acc) return j;
  }
  // Rounding left a sliver above the last cumulative value.
  std::size_t last = p.size() - 1;
  while (p[last] == 0.0 && last > 0) --last;
  return last;
}

double dsac_expected_loss(std::span<const double> scores, std::span<const double> losses) {
  require(scores.size() == losses.size(), "one loss per hypothesis");
  for (const double l : losses) require(std::isfinite(l), "losses must be finite");
  const auto p = selection_distribution(scores);
  double e = 0.0;
  for (std::size_t j = 0; j < p.size(); ++j) e += p[j] * losses[j];
  const auto [lo, hi] = std::minmax_element(losses.begin(), losses.end());
  return std::clamp(e, *lo, *hi);
}

std::size_t adaptive_budget(double inlier_ratio, std::size_t n, double confidence,
                            std::size_t max_budget) {
  require(inlier_ratio >= 0.0 && inlier_ratio <= 1.0, "inlier ratio must lie in [0, 1]");
  require(confidence > 0.0 && confidence < 1.0, "confidence must lie in (0, 1)");
  require(max_budget >= 1, "max budget must be >= 1");
  const double good = std::pow(inlier_ratio, static_cast<double>(n));
  if (good >= 1.0) return 1;
  if (good <= 0.0) return max_budget;
  const double m = std::ceil(std::log(1.0 - confidence) / std::log1p(-good));
  if (!(m < static_cast<double>(max_budget))) return max_budget;
  return std::max<std::size_t>(1, static_cast<std::size_t>(m));
}

NgDsacResult ng_dsac_estimate(const Eigen::MatrixXd& features, std::span<const Vec2> anchors,
                              const GuidanceNet& net, const NgDsacConfig& config) {
  require(net.spec().heads == HeadMode::PointsAndWeights, "NG-DSAC needs the point head");
  return ng_dsac_estimate(forward(net, features, anchors), config);
}

NgDsacTape line_pool_tape(GuidanceOutput net_out, std::vector<MinimalSet> sets,
                          const SoftScoreParams& soft) {
  NgDsacTape tape;
  tape.net = std::move(net_out);
  const std::span<const Vec2> points(tape.net.points);
  std::vector<double> s;
  for (auto& set : sets) {
    require(set.indices.size() == 2, "line minimal sets have two points");
    LineJacobian jac;
    tape.lines.push_back(solve_line(points[set.indices[0]], points[set.indices[1]], &jac));
    tape.jacobians.push_back(jac);
    tape.scores.push_back(soft_inlier_count(tape.lines.back(), points, soft, true));
    tape.sets.push_back(std::move(set));
    s.push_back(tape.scores.back().value);
  }
  tape.selection = selection_distribution(s);
  return tape;
}

NgDsacResult ng_dsac_estimate(GuidanceOutput net_out, const NgDsacConfig& config) {
  require(config.pool_size >= 1, "pool needs M >= 1");
  validate(config.soft);
  NgDsacResult out;
  NgDsacTape& tape = out.tape;
  tape.net = std::move(net_out);
  const std::span<const Vec2> points(tape.net.points);
  require(points.size() == tape.net.weights.size(), "point head output missing");

  const LineProblem problem = line_problem(config.soft.tau);
  const SoftScoreParams soft = config.soft;
  const ScoreFn<Vec2, Line2> score = [soft](const Line2& l, std::span<const Vec2> pts) {
    return soft_inlier_count(l, pts, soft, false).value;
  };
  SamplerConfig sc{config.pool_size, 2, config.seed, config.max_resample_attempts};
  auto pool = sample_pool(points, &tape.net.weights, sc, problem, score);

  std::vector<MinimalSet> sets;
  for (const auto& e : pool.entries) sets.push_back(e.minimal_set);
  GuidanceOutput moved = std::move(tape.net);
  tape = line_pool_tape(std::move(moved), std::move(sets), soft);

  EstimatorConfig ec{sc, config.refit};
  out.report = detail::finalize(points, std::move(pool), ec, problem);
  return out;
}

}  // namespace ngsac
