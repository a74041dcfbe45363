#pragma once

#include "ngsac/guidance.hpp"
#include "ngsac/problem.hpp"
#include "ngsac/sampling.hpp"
#include "ngsac/scoring.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <span>
#include <string>
#include <vector>

namespace ngsac {

template <class Model>
struct EstimateReport {
  Model model;              // after refit (or the fallback)
  Model pre_refit_model;    // the selected pool hypothesis
  std::size_t selected_index = 0;
  double score = 0.0;       // score of pre_refit_model
  std::vector<std::size_t> inlier_indices;  // inliers of `model`
  std::size_t pools_drawn = 1;
  std::size_t hypotheses_drawn = 0;
  std::uint64_t rng_seed = 0;
  std::vector<double> log_probs;
  std::vector<MinimalSet> minimal_sets;
  bool refit_applied = false;
  std::vector<std::string> warnings;
};

struct EstimatorConfig {
  SamplerConfig sampler;
  bool refit = true;
};

namespace detail {

template <class Obs, class Model>
std::vector<std::size_t> hard_inliers(const Model& m, std::span<const Obs> obs,
                                      const Problem<Obs, Model>& problem) {
  return inlier_indices(m, obs, problem.tau, problem.residual);
}

/// Argmax selection and a single refit to the selected hypothesis's inliers.
/// The refit is discarded when it throws or loses inliers.
template <class Obs, class Model>
EstimateReport<Model> finalize(std::span<const Obs> observations, HypothesisPool<Model>&& pool,
                               const EstimatorConfig& config, const Problem<Obs, Model>& problem) {
  EstimateReport<Model> r;
  r.selected_index = select_best(pool);
  const auto& best = pool.entries[r.selected_index];
  r.pre_refit_model = best.model;
  r.model = best.model;
  r.score = best.score;
  r.hypotheses_drawn = pool.size();
  r.rng_seed = config.sampler.seed;
  for (auto& e : pool.entries) {
    r.log_probs.push_back(e.log_prob);
    r.minimal_sets.push_back(std::move(e.minimal_set));
  }
  r.inlier_indices = hard_inliers(r.model, observations, problem);
  if (!config.refit || !problem.refit) return r;
  try {
    std::vector<Obs> support;
    support.reserve(r.inlier_indices.size());
    for (const auto i : r.inlier_indices) support.push_back(observations[i]);
    Model refit = problem.refit(std::span<const Obs>(support));
    auto refit_inliers = hard_inliers(refit, observations, problem);
    if (refit_inliers.size() >= r.inlier_indices.size()) {
      r.model = std::move(refit);
      r.inlier_indices = std::move(refit_inliers);
      r.refit_applied = true;
    } else {
      r.warnings.push_back("refit lowered the inlier count; kept the selected hypothesis");
    }
  } catch (const Error& e) {
    r.warnings.push_back(std::string("refit failed: ") + e.what());
  }
  return r;
}

}  // namespace detail

/// Uniform pool of M hypotheses, argmax selection, refit.
template <class Obs, class Model>
EstimateReport<Model> ransac(std::span<const Obs> observations, const EstimatorConfig& config,
                             const Problem<Obs, Model>& problem, const ScoreFn<Obs, Model>& score) {
  return detail::finalize(observations, sample_pool(observations, nullptr, config.sampler, problem, score),
                          config, problem);
}

template <class Obs, class Model>
EstimateReport<Model> ransac(std::span<const Obs> observations, const EstimatorConfig& config,
                             const Problem<Obs, Model>& problem) {
  return ransac(observations, config, problem, inlier_score(problem));
}

/// As ransac, with minimal sets drawn from `dist`.
template <class Obs, class Model>
EstimateReport<Model> ng_ransac(std::span<const Obs> observations, const GuidanceDistribution& dist,
                                const EstimatorConfig& config, const Problem<Obs, Model>& problem,
                                const ScoreFn<Obs, Model>& score) {
  return detail::finalize(observations, sample_pool(observations, &dist, config.sampler, problem, score),
                          config, problem);
}

template <class Obs, class Model>
EstimateReport<Model> ng_ransac(std::span<const Obs> observations, const GuidanceDistribution& dist,
                                const EstimatorConfig& config, const Problem<Obs, Model>& problem) {
  return ng_ransac(observations, dist, config, problem, inlier_score(problem));
}

/// Simplified progressive sampling: minimal sets from a growing prefix of the
/// observations sorted by decreasing priority. growth_rate <= 0 picks
/// default_growth_rate.
template <class Obs, class Model>
EstimateReport<Model> progressive_ransac(std::span<const Obs> observations,
                                         std::span<const double> priorities,
                                         const EstimatorConfig& config,
                                         const Problem<Obs, Model>& problem,
                                         const ScoreFn<Obs, Model>& score, double growth_rate = 0.0) {
  const auto& sc = config.sampler;
  require(priorities.size() == observations.size(), "one priority per observation");
  require(sc.minimal_set_size == problem.minimal_size, "sampler N must match the solver");
  require(observations.size() >= sc.minimal_set_size, "not enough observations for N");
  if (growth_rate <= 0.0) growth_rate = default_growth_rate(sc.pool_size, observations.size(), sc.minimal_set_size);
  ProgressiveSampler sampler(priorities, sc.minimal_set_size, growth_rate, sc.seed);
  HypothesisPool<Model> pool;
  CounterRng unused(sc.seed);
  for (std::size_t j = 0; j < sc.pool_size; ++j) {
    auto draw = [&](CounterRng&) { return sampler.next(); };
    pool.entries.push_back(draw_hypothesis(observations, draw, sc, problem, score, unused,
                                           static_cast<const GuidanceDistribution*>(nullptr)));
    pool.entries.back().log_prob = 0.0;
  }
  return detail::finalize(observations, std::move(pool), config, problem);
}

/// RANSAC on the correspondences with ratio < threshold. Falls back to the
/// unfiltered set (with a warning) when fewer than N survive. Inlier indices
/// refer to the unfiltered input.
EstimateReport<Model3x3> ratio_filtered_ransac(std::span<const Correspondence> correspondences,
                                               double threshold, const EstimatorConfig& config,
                                               const EpipolarProblem& problem);

/// Index drawn from selection_distribution(scores).
std::size_t dsac_select(std::span<const double> scores, CounterRng& rng);

template <class Model>
std::size_t dsac_select(const HypothesisPool<Model>& pool, CounterRng& rng) {
  const auto s = pool.scores();
  return dsac_select(std::span<const double>(s), rng);
}

/// sum_j softmax(scores)_j * losses_j.
double dsac_expected_loss(std::span<const double> scores, std::span<const double> losses);

/// ceil(log(1 - confidence) / log(1 - ratio^N)) clamped to [1, max_budget].
std::size_t adaptive_budget(double inlier_ratio, std::size_t n, double confidence,
                            std::size_t max_budget = 100000);

struct NgDsacConfig {
  std::size_t pool_size = 16;
  std::uint64_t seed = 0;
  SoftScoreParams soft;
  std::size_t max_resample_attempts = 100;
  bool refit = true;
};

/// Everything the NG-DSAC gradient needs from one pool.
struct NgDsacTape {
  GuidanceOutput net;               // predicted points, weights, forward cache
  std::vector<MinimalSet> sets;
  std::vector<Line2> lines;
  std::vector<LineJacobian> jacobians;  // d(a,b,c)/d(p,q) of each hypothesis
  std::vector<SoftLineScore> scores;    // with gradients
  std::vector<double> selection;        // softmax over scores
};

struct NgDsacResult {
  EstimateReport<Line2> report;
  NgDsacTape tape;
};

/// Runs the two-branch net on patch features, samples a pool of lines over the
/// predicted points with the predicted weights, and selects by soft inlier
/// score (argmax for the report; the softmax is kept on the tape).
NgDsacResult ng_dsac_estimate(const Eigen::MatrixXd& features, std::span<const Vec2> anchors,
                              const GuidanceNet& net, const NgDsacConfig& config);

/// Tape for a given list of minimal sets over the predicted points.
NgDsacTape line_pool_tape(GuidanceOutput net_out, std::vector<MinimalSet> sets,
                          const SoftScoreParams& soft);

/// Same, reusing an existing forward pass.
NgDsacResult ng_dsac_estimate(GuidanceOutput net_out, const NgDsacConfig& config);

}  // namespace ngsac
