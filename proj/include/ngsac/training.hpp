#pragma once

#include "ngsac/estimator.hpp"
#include "ngsac/guidance.hpp"
#include "ngsac/problem.hpp"
#include "ngsac/synthdata.hpp"

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ngsac {

enum class Objective { PoseAngular, InlierCount, FScore, MeanEpipolar, LineDistance };
enum class Baseline { BatchMean, None };

std::string_view to_string(Objective o);
Objective parse_objective(std::string_view s);  // pose|inliers|fscore|mean-epi|line

struct TrainConfig {
  std::size_t k = 4;             // pools per example
  std::size_t m = 16;            // hypotheses per pool
  double learning_rate = 1e-4;
  std::size_t batch_size = 32;
  std::size_t iterations = 5000;  // expected-loss phase
  Objective objective = Objective::PoseAngular;
  Baseline baseline = Baseline::BatchMean;
  std::uint64_t seed = 0;

  bool kl_init = true;
  std::size_t kl_iterations = 2000;
  double kl_learning_rate = 1e-3;
  double kl_sigma = 1e-3;

  std::size_t max_resample_attempts = 100;
  std::size_t max_consecutive_nonfinite = 100;
  std::size_t checkpoint_interval = 0;  // 0 disables
  std::optional<std::filesystem::path> checkpoint_path;
  SoftScoreParams soft;  // line task only
};

void validate(const TrainConfig& config);

struct TaskLossValue {
  double value = 0.0;
  Objective kind = Objective::PoseAngular;
};

/// One epipolar training scene. Supervised objectives need the gt fields.
struct EpipolarExample {
  std::vector<Correspondence> correspondences;
  std::optional<Model3x3> gt_model;
  std::optional<Pose> gt_pose;
};

EpipolarExample make_example(const EpipolarScene& scene, bool pixel_units = false);
/// Drops gt model, pose and per-correspondence labels.
EpipolarExample strip_ground_truth(EpipolarExample example);
bool has_ground_truth(const EpipolarExample& example);

/// Task loss of an epipolar estimate. PoseAngular scores 180 degrees when the
/// decomposition is ambiguous; InlierCount is the negated raw count;
/// MeanEpipolar is +inf when the estimate has no inliers (skipped by training).
TaskLossValue task_loss(const EstimateReport<Model3x3>& estimate, const EpipolarExample& example,
                        const EpipolarProblem& problem, Objective objective);

struct LineLoss {
  double raw = 0.0;     // clamped to [0, 1]
  double value = 0.0;   // robust: raw if raw < 0.25, else 0.25 sqrt(raw)
  Vec3 d_line = Vec3::Zero();  // d value / d(a, b, c)
};

/// Max over x = 0 and x = 1 of the vertical distance between the lines in a
/// unit-height image.
LineLoss line_loss(const Line2& estimate, const Line2& gt);
double robust_line_loss(double raw);

/// d log P(ordered set) / d log p_i for minimal sets drawn one element at a
/// time with duplicates rejected, accumulated into `grad` (scaled by `scale`).
void accumulate_set_log_prob_gradient(std::span<const double> weights, const MinimalSet& set,
                                      double scale, std::span<double> grad);
/// log P(ordered set) under the same sampling process.
double exact_set_log_prob(std::span<const double> weights, const MinimalSet& set);

struct LogWeightGradient {
  std::vector<double> grad;    // d objective / d log p_i
  std::vector<double> losses;  // one per pool
  double mean_loss = 0.0;
};

/// Loss of one pool's final estimate.
using PoolLossFn = std::function<double(const EstimateReport<Model3x3>&)>;

/// Score-function estimate over K pools drawn from `dist` with seeds
/// seed + k: (1/K) sum_k (l_k - b) d log P(H_k), b the mean pool loss.
LogWeightGradient reinforce_gradient(std::span<const Correspondence> observations,
                                     const GuidanceDistribution& dist, const EpipolarProblem& problem,
                                     const PoolLossFn& loss, std::size_t k, std::size_t m,
                                     std::uint64_t seed, Baseline baseline = Baseline::BatchMean,
                                     std::size_t max_resample_attempts = 100);

/// Generic line-problem variant used by the enumerable oracles.
struct LineLogWeightGradient {
  std::vector<double> grad;
  std::vector<double> losses;
  double mean_loss = 0.0;
};
using LinePoolLossFn = std::function<double(const EstimateReport<Line2>&)>;
LineLogWeightGradient reinforce_gradient(std::span<const Vec2> observations,
                                         const GuidanceDistribution& dist, const LineProblem& problem,
                                         const LinePoolLossFn& loss, std::size_t k, std::size_t m,
                                         std::uint64_t seed, Baseline baseline = Baseline::BatchMean,
                                         std::size_t max_resample_attempts = 100);

struct ExampleGradient {
  std::vector<double> grad;  // parameter gradient
  double loss = 0.0;
  double kl = 0.0;
  bool finite = true;
};

/// NG-RANSAC gradient of one example: forward, K pools, selection + refit,
/// task loss, score-function gradient through guidance.backward.
ExampleGradient ng_ransac_gradient(const EpipolarExample& example, const GuidanceNet& net,
                                   const EpipolarProblem& problem, const TrainConfig& config,
                                   std::uint64_t seed);

/// NG-DSAC gradient of one line scene: REINFORCE over K pools plus the exact
/// derivative of the inner selection expectation through scores, solver and
/// predicted points.
struct NgDsacPoolTerms {
  double expected_loss = 0.0;
  std::vector<double> grad_log_weights;  // d E_j[l] / d log p (zero: sampling term handled outside)
  std::vector<Vec2> grad_points;         // d E_j[l] / d y
};
NgDsacPoolTerms ng_dsac_pool_terms(const NgDsacTape& tape, const Line2& gt);

ExampleGradient ng_dsac_gradient(const LineScene& scene, const GuidanceNet& net,
                                 const TrainConfig& config, std::uint64_t seed, bool blockade = true);

/// Target g(y) proportional to exp(-d(y, E_gt) / 2 sigma^2), normalized.
std::vector<double> kl_target(std::span<const Correspondence> correspondences, const Model3x3& gt,
                              double sigma);
double kl_divergence(std::span<const double> target, std::span<const double> log_p);

ExampleGradient kl_init_step(const EpipolarExample& example, const GuidanceNet& net, double sigma);

struct AdamState {
  std::vector<double> m, v;
  std::vector<std::uint64_t> t;  // per-coordinate step counts
};

/// Adam with per-coordinate bias correction; coordinates whose gradient is
/// exactly zero are left untouched (state included).
void adam_step(std::vector<double>& params, std::span<const double> grads, AdamState& state,
               double learning_rate, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

struct TrainRecord {
  std::size_t iteration = 0;
  std::string phase;  // "kl" or "loss"
  double loss = 0.0;
  double kl = 0.0;
  double seconds = 0.0;
  std::size_t skipped = 0;
};

struct TrainCallbacks {
  std::function<void(const TrainRecord&)> on_record;
  std::function<void(const GuidanceNet&, std::size_t)> on_checkpoint;
};

struct TrainResult {
  GuidanceNet net;
  std::vector<TrainRecord> curve;
};

/// Per-example gradient callback used by the generic loop.
using ExampleGradFn = std::function<ExampleGradient(std::size_t example, const GuidanceNet& net,
                                                    std::uint64_t seed)>;

/// Generic Adam loop: every iteration averages batch_size example gradients
/// (examples and seeds derived from config.seed and the iteration).
TrainResult run_phase(std::size_t n_examples, GuidanceNet net, std::size_t iterations,
                      double learning_rate, const TrainConfig& config, const std::string& phase,
                      const ExampleGradFn& grad_fn, const TrainCallbacks& callbacks);

/// KL initialization (if enabled and the objective is supervised) followed by
/// the expected-loss phase.
TrainResult train_loop(std::span<const EpipolarExample> dataset, GuidanceNet net,
                       const TrainConfig& config, const EpipolarProblem& problem,
                       const TrainCallbacks& callbacks = {});

TrainResult train_line_loop(std::span<const LineScene> dataset, GuidanceNet net,
                            const TrainConfig& config, const TrainCallbacks& callbacks = {});

/// Mean guidance mass on labeled inliers over a set of scenes.
double mean_inlier_mass(const GuidanceNet& net, std::span<const EpipolarScene> scenes, bool with_ratio);

}  // namespace ngsac
