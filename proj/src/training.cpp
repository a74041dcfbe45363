#include "ngsac/training.hpp"

#include "ngsac/metrics.hpp"
#include "ngsac/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ngsac {

std::string_view to_string(Objective o) {
  switch (o) {
    case Objective::PoseAngular: return "pose";
    case Objective::InlierCount: return "inliers";
    case Objective::FScore: return "fscore";
    case Objective::MeanEpipolar: return "mean-epi";
    case Objective::LineDistance: return "line";
  }
  return "unknown";
}

Objective parse_objective(std::string_view s) {
  for (const auto o : {Objective::PoseAngular, Objective::InlierCount, Objective::FScore,
                       Objective::MeanEpipolar, Objective::LineDistance}) {
    if (s == to_string(o)) return o;
  }
  throw Error(ErrorCode::ParseError, "unknown objective '" + std::string(s) + "'");
}

void validate(const TrainConfig& c) {
  require(c.k >= 1 && c.m >= 1, "training needs K >= 1 and M >= 1");
  // Zero is accepted and leaves the parameters untouched.
  require(c.learning_rate >= 0.0 && c.kl_learning_rate >= 0.0, "learning rates must be >= 0");
  require(c.batch_size >= 1, "batch size must be >= 1");
  require(c.kl_sigma > 0.0, "KL sigma must be positive");
  require(c.max_consecutive_nonfinite >= 1, "non-finite abort threshold must be >= 1");
}

EpipolarExample make_example(const EpipolarScene& scene, bool pixel_units) {
  EpipolarExample ex;
  ex.correspondences = pixel_units ? to_pixels(scene) : scene.correspondences;
  ex.gt_model = pixel_units ? scene.gt_fundamental : scene.gt_essential;
  ex.gt_pose = scene.gt_pose;
  return ex;
}

EpipolarExample strip_ground_truth(EpipolarExample example) {
  example.gt_model.reset();
  example.gt_pose.reset();
  for (auto& c : example.correspondences) c.gt_inlier.reset();
  return example;
}

bool has_ground_truth(const EpipolarExample& example) {
  if (example.gt_model || example.gt_pose) return true;
  return std::any_of(example.correspondences.begin(), example.correspondences.end(),
                     [](const Correspondence& c) { return c.gt_inlier.has_value(); });
}

TaskLossValue task_loss(const EstimateReport<Model3x3>& estimate, const EpipolarExample& example,
                        const EpipolarProblem& problem, Objective objective) {
  TaskLossValue out{0.0, objective};
  const std::span<const Correspondence> corrs(example.correspondences);
  switch (objective) {
    case Objective::PoseAngular: {
      if (!example.gt_pose) throw Error(ErrorCode::MissingGroundTruth, "pose objective needs a gt pose");
      require(estimate.model.kind == MatrixKind::Essential, "pose objective needs an essential matrix");
      std::vector<Correspondence> support;
      for (const auto i : estimate.inlier_indices) support.push_back(corrs[i]);
      if (support.empty()) support.assign(corrs.begin(), corrs.end());
      try {
        out.value = angular_pose_error(decompose_essential(estimate.model, support), *example.gt_pose);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::CheiralityAmbiguous) throw;
        out.value = 180.0;
      }
      return out;
    }
    case Objective::InlierCount:
      out.value = -static_cast<double>(inlier_count(estimate.model, corrs, problem.tau, problem.residual));
      return out;
    case Objective::FScore:
      if (!example.gt_model) throw Error(ErrorCode::MissingGroundTruth, "F-score objective needs a gt model");
      out.value = -fscore_inliers(estimate.model, *example.gt_model, corrs, problem.tau);
      return out;
    case Objective::MeanEpipolar:
      if (!example.gt_model) throw Error(ErrorCode::MissingGroundTruth, "epipolar objective needs a gt model");
      try {
        out.value = epipolar_stats(estimate.model, *example.gt_model, corrs, problem.tau).mean;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::NoInliers) throw;
        out.value = std::numeric_limits<double>::infinity();
      }
      return out;
    case Objective::LineDistance:
      break;
  }
  throw Error(ErrorCode::PreconditionViolation, "line objective on an epipolar estimate");
}

double robust_line_loss(double raw) { return raw < 0.25 ? raw : 0.25 * std::sqrt(raw); }

LineLoss line_loss(const Line2& est, const Line2& gt) {
  LineLoss out;
  if (std::abs(est.b) < 1e-12 || std::abs(gt.b) < 1e-12) {
    out.raw = 1.0;
    out.value = robust_line_loss(1.0);
    return out;
  }
  double best = -1.0;
  Vec3 d_best = Vec3::Zero();
  for (const double x : {0.0, 1.0}) {
    const double y_est = -(est.a * x + est.c) / est.b;
    const double y_gt = -(gt.a * x + gt.c) / gt.b;
    const double diff = y_est - y_gt;
    if (std::abs(diff) > best) {
      best = std::abs(diff);
      const double sign = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
      d_best = sign * Vec3(-x / est.b, -y_est / est.b, -1.0 / est.b);
    }
  }
  if (best >= 1.0) {
    out.raw = 1.0;
    out.value = robust_line_loss(1.0);
    return out;
  }
  out.raw = best;
  out.value = robust_line_loss(best);
  const double scale = best < 0.25 ? 1.0 : 0.125 / std::sqrt(best);
  out.d_line = scale * d_best;
  return out;
}

void accumulate_set_log_prob_gradient(std::span<const double> weights, const MinimalSet& set,
                                      double scale, std::span<double> grad) {
  const auto& a = set.indices;
  double cum = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    grad[a[k]] += scale;
    if (k > 0) {
      const double rest = 1.0 - cum;
      for (std::size_t m = 0; m < k; ++m) grad[a[m]] += scale * weights[a[m]] / rest;
    }
    cum += weights[a[k]];
  }
}

double exact_set_log_prob(std::span<const double> weights, const MinimalSet& set) {
  double lp = 0.0, cum = 0.0;
  for (std::size_t k = 0; k < set.indices.size(); ++k) {
    lp += std::log(weights[set.indices[k]]);
    if (k > 0) lp -= std::log1p(-cum);
    cum += weights[set.indices[k]];
  }
  return lp;
}

namespace {

template <class Obs, class Model, class Result>
Result reinforce_impl(std::span<const Obs> observations, const GuidanceDistribution& dist,
                      const Problem<Obs, Model>& problem,
                      const std::function<double(const EstimateReport<Model>&)>& loss, std::size_t k,
                      std::size_t m, std::uint64_t seed, Baseline baseline, std::size_t attempts) {
  require(k >= 1, "K must be >= 1");
  const std::size_t n = observations.size();
  std::vector<std::vector<double>> dlogp(k, std::vector<double>(n, 0.0));
  Result out;
  out.losses.resize(k);
  const auto score = inlier_score(problem);
  for (std::size_t kk = 0; kk < k; ++kk) {
    const EstimatorConfig ec{SamplerConfig{m, problem.minimal_size, seed + kk, attempts}, true};
    const auto report = ng_ransac(observations, dist, ec, problem, score);
    out.losses[kk] = loss(report);
    for (const auto& set : report.minimal_sets) {
      accumulate_set_log_prob_gradient(dist.weights(), set, 1.0, dlogp[kk]);
    }
  }
  double mean = 0.0;
  for (const double l : out.losses) mean += l;
  mean /= static_cast<double>(k);
  out.mean_loss = mean;
  const double b = baseline == Baseline::BatchMean ? mean : 0.0;
  out.grad.assign(n, 0.0);
  for (std::size_t kk = 0; kk < k; ++kk) {
    const double w = (out.losses[kk] - b) / static_cast<double>(k);
    for (std::size_t i = 0; i < n; ++i) out.grad[i] += w * dlogp[kk][i];
  }
  return out;
}

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace

LogWeightGradient reinforce_gradient(std::span<const Correspondence> observations,
                                     const GuidanceDistribution& dist, const EpipolarProblem& problem,
                                     const PoolLossFn& loss, std::size_t k, std::size_t m,
                                     std::uint64_t seed, Baseline baseline,
                                     std::size_t max_resample_attempts) {
  return reinforce_impl<Correspondence, Model3x3, LogWeightGradient>(
      observations, dist, problem, loss, k, m, seed, baseline, max_resample_attempts);
}

LineLogWeightGradient reinforce_gradient(std::span<const Vec2> observations,
                                         const GuidanceDistribution& dist, const LineProblem& problem,
                                         const LinePoolLossFn& loss, std::size_t k, std::size_t m,
                                         std::uint64_t seed, Baseline baseline,
                                         std::size_t max_resample_attempts) {
  return reinforce_impl<Vec2, Line2, LineLogWeightGradient>(observations, dist, problem, loss, k, m,
                                                            seed, baseline, max_resample_attempts);
}

ExampleGradient ng_ransac_gradient(const EpipolarExample& example, const GuidanceNet& net,
                                   const EpipolarProblem& problem, const TrainConfig& config,
                                   std::uint64_t seed) {
  const std::span<const Correspondence> corrs(example.correspondences);
  if (config.objective == Objective::InlierCount) {
    require(!has_ground_truth(example), "self-supervised training must not see ground truth");
  }
  const bool with_ratio = net.spec().input_dim == 5;
  const auto out = forward(net, correspondence_features(corrs, with_ratio));
  const double n = static_cast<double>(corrs.size());
  const Objective objective = config.objective;
  const PoolLossFn loss = [&](const EstimateReport<Model3x3>& r) {
    const double v = task_loss(r, example, problem, objective).value;
    return objective == Objective::InlierCount ? v / n : v;
  };
  const auto g = reinforce_gradient(corrs, out.weights, problem, loss, config.k, config.m, seed,
                                    config.baseline, config.max_resample_attempts);
  ExampleGradient eg;
  eg.loss = g.mean_loss;
  if (!all_finite(g.losses)) {
    eg.finite = false;
    return eg;
  }
  eg.grad = backward(net, out.cache, g.grad);
  return eg;
}

NgDsacPoolTerms ng_dsac_pool_terms(const NgDsacTape& tape, const Line2& gt) {
  const std::size_t n = tape.net.points.size();
  NgDsacPoolTerms out;
  out.grad_log_weights.assign(n, 0.0);
  out.grad_points.assign(n, Vec2::Zero());
  std::vector<LineLoss> losses;
  for (const auto& l : tape.lines) losses.push_back(line_loss(l, gt));
  for (std::size_t j = 0; j < losses.size(); ++j) out.expected_loss += tape.selection[j] * losses[j].value;
  for (std::size_t j = 0; j < losses.size(); ++j) {
    const double p = tape.selection[j];
    const double ds = p * (losses[j].value - out.expected_loss);  // d E / d s_j
    const Vec3 g_line = p * losses[j].d_line + ds * tape.scores[j].d_line;
    const Eigen::Vector4d g_pq = tape.jacobians[j].transpose() * g_line;
    const auto& idx = tape.sets[j].indices;
    out.grad_points[idx[0]] += g_pq.head<2>();
    out.grad_points[idx[1]] += g_pq.tail<2>();
    for (std::size_t i = 0; i < n; ++i) out.grad_points[i] += ds * tape.scores[j].d_points[i];
  }
  return out;
}

ExampleGradient ng_dsac_gradient(const LineScene& scene, const GuidanceNet& net,
                                 const TrainConfig& config, std::uint64_t seed, bool blockade) {
  require(net.spec().heads == HeadMode::PointsAndWeights, "NG-DSAC needs the point head");
  const auto out = forward(net, scene.features, scene.anchors);
  const std::size_t n = out.points.size();
  std::vector<double> expected(config.k);
  std::vector<std::vector<double>> dlogp(config.k, std::vector<double>(n, 0.0));
  std::vector<Vec2> g_points(n, Vec2::Zero());
  const double inv_k = 1.0 / static_cast<double>(config.k);
  for (std::size_t kk = 0; kk < config.k; ++kk) {
    NgDsacConfig dc;
    dc.pool_size = config.m;
    dc.seed = seed + kk;
    dc.soft = config.soft;
    dc.max_resample_attempts = config.max_resample_attempts;
    dc.refit = false;
    const auto res = ng_dsac_estimate(out, dc);
    const auto terms = ng_dsac_pool_terms(res.tape, scene.gt_line);
    expected[kk] = terms.expected_loss;
    for (const auto& set : res.tape.sets) {
      accumulate_set_log_prob_gradient(out.weights.weights(), set, 1.0, dlogp[kk]);
    }
    for (std::size_t i = 0; i < n; ++i) g_points[i] += inv_k * terms.grad_points[i];
  }
  double mean = 0.0;
  for (const double e : expected) mean += e;
  mean *= inv_k;
  const double b = config.baseline == Baseline::BatchMean ? mean : 0.0;
  std::vector<double> g_logw(n, 0.0);
  for (std::size_t kk = 0; kk < config.k; ++kk) {
    for (std::size_t i = 0; i < n; ++i) g_logw[i] += inv_k * (expected[kk] - b) * dlogp[kk][i];
  }
  ExampleGradient eg;
  eg.loss = mean;
  if (!all_finite(expected)) {
    eg.finite = false;
    return eg;
  }
  eg.grad = backward(net, out.cache, g_logw, g_points, blockade);
  return eg;
}

std::vector<double> kl_target(std::span<const Correspondence> correspondences, const Model3x3& gt,
                              double sigma) {
  require(sigma > 0.0, "sigma must be positive");
  require(!correspondences.empty(), "KL target of an empty set");
  std::vector<double> logit(correspondences.size());
  for (std::size_t i = 0; i < correspondences.size(); ++i) {
    logit[i] = -epipolar_error(correspondences[i], gt) / (2.0 * sigma * sigma);
  }
  const double mx = *std::max_element(logit.begin(), logit.end());
  double total = 0.0;
  for (auto& v : logit) {
    v = std::exp(v - mx);
    total += v;
  }
  for (auto& v : logit) v /= total;
  return logit;
}

double kl_divergence(std::span<const double> target, std::span<const double> log_p) {
  require(target.size() == log_p.size(), "KL operands differ in size");
  double kl = 0.0;
  for (std::size_t i = 0; i < target.size(); ++i) {
    if (target[i] > 0.0) kl += target[i] * (std::log(target[i]) - log_p[i]);
  }
  return std::max(kl, 0.0);
}

ExampleGradient kl_init_step(const EpipolarExample& example, const GuidanceNet& net, double sigma) {
  if (!example.gt_model) throw Error(ErrorCode::MissingGroundTruth, "KL initialization needs a gt model");
  const std::span<const Correspondence> corrs(example.correspondences);
  const auto out = forward(net, correspondence_features(corrs, net.spec().input_dim == 5));
  const auto target = kl_target(corrs, *example.gt_model, sigma);
  ExampleGradient eg;
  eg.kl = kl_divergence(target, out.log_weights);
  eg.loss = eg.kl;
  std::vector<double> g(target.size());
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = -target[i];
  eg.grad = backward(net, out.cache, g);
  eg.finite = std::isfinite(eg.kl);
  return eg;
}

void adam_step(std::vector<double>& params, std::span<const double> grads, AdamState& state,
               double learning_rate, double beta1, double beta2, double eps) {
  if (grads.size() != params.size()) throw Error(ErrorCode::ShapeMismatch, "gradient size mismatch");
  if (state.m.empty()) {
    state.m.assign(params.size(), 0.0);
    state.v.assign(params.size(), 0.0);
    state.t.assign(params.size(), 0);
  }
  if (state.m.size() != params.size() || state.v.size() != params.size() ||
      state.t.size() != params.size()) {
    throw Error(ErrorCode::ShapeMismatch, "optimizer state size mismatch");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    if (g == 0.0) continue;
    const auto t = static_cast<double>(++state.t[i]);
    state.m[i] = beta1 * state.m[i] + (1.0 - beta1) * g;
    state.v[i] = beta2 * state.v[i] + (1.0 - beta2) * g * g;
    const double m_hat = state.m[i] / (1.0 - std::pow(beta1, t));
    const double v_hat = state.v[i] / (1.0 - std::pow(beta2, t));
    params[i] -= learning_rate * m_hat / (std::sqrt(v_hat) + eps);
  }
}

TrainResult run_phase(std::size_t n_examples, GuidanceNet net, std::size_t iterations,
                      double learning_rate, const TrainConfig& config, const std::string& phase,
                      const ExampleGradFn& grad_fn, const TrainCallbacks& callbacks) {
  require(n_examples >= 1, "training needs a non-empty dataset");
  validate(config);
  const std::uint64_t tag = phase == "kl" ? 1 : 2;
  TrainResult result{std::move(net), {}};
  AdamState state;
  std::size_t consecutive = 0;
  const auto start = std::chrono::steady_clock::now();
  for (std::size_t it = 0; it < iterations; ++it) {
    CounterRng pick(derive_seed(config.seed, tag, it), 0);
    std::vector<double> sum(result.net.parameter_count(), 0.0);
    std::size_t used = 0, skipped = 0;
    double loss = 0.0, kl = 0.0;
    for (std::size_t b = 0; b < config.batch_size; ++b) {
      const std::size_t ex = pick.uniform_index(n_examples);
      const auto eg = grad_fn(ex, result.net, derive_seed(config.seed, tag, it * config.batch_size + b));
      if (!eg.finite || !all_finite(eg.grad) || !std::isfinite(eg.loss)) {
        ++skipped;
        if (++consecutive >= config.max_consecutive_nonfinite) {
          throw Error(ErrorCode::NonFiniteLoss, "too many consecutive non-finite losses");
        }
        continue;
      }
      consecutive = 0;
      for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += eg.grad[i];
      loss += eg.loss;
      kl += eg.kl;
      ++used;
    }
    if (used > 0) {
      for (auto& g : sum) g /= static_cast<double>(used);
      adam_step(result.net.values(), sum, state, learning_rate);
    }
    TrainRecord rec;
    rec.iteration = it;
    rec.phase = phase;
    rec.loss = used ? loss / static_cast<double>(used) : std::numeric_limits<double>::quiet_NaN();
    rec.kl = used ? kl / static_cast<double>(used) : 0.0;
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    rec.skipped = skipped;
    result.curve.push_back(rec);
    if (callbacks.on_record) callbacks.on_record(rec);
    if (config.checkpoint_interval > 0 && (it + 1) % config.checkpoint_interval == 0) {
      if (config.checkpoint_path) save_model(result.net, *config.checkpoint_path);
      if (callbacks.on_checkpoint) callbacks.on_checkpoint(result.net, it + 1);
    }
  }
  return result;
}

TrainResult train_loop(std::span<const EpipolarExample> dataset, GuidanceNet net,
                       const TrainConfig& config, const EpipolarProblem& problem,
                       const TrainCallbacks& callbacks) {
  validate(config);
  if (dataset.empty()) throw Error(ErrorCode::EmptyInput, "training dataset is empty");
  require(config.objective != Objective::LineDistance, "use train_line_loop for the line task");
  const bool self_supervised = config.objective == Objective::InlierCount;
  if (self_supervised) {
    for (const auto& ex : dataset) {
      require(!has_ground_truth(ex), "self-supervised training must not see ground truth");
    }
  }
  std::vector<TrainRecord> curve;
  if (config.kl_init && !self_supervised && config.kl_iterations > 0) {
    auto kl = run_phase(
        dataset.size(), std::move(net), config.kl_iterations, config.kl_learning_rate, config, "kl",
        [&](std::size_t i, const GuidanceNet& n, std::uint64_t) {
          return kl_init_step(dataset[i], n, config.kl_sigma);
        },
        callbacks);
    net = std::move(kl.net);
    curve = std::move(kl.curve);
  }
  auto main = run_phase(
      dataset.size(), std::move(net), config.iterations, config.learning_rate, config, "loss",
      [&](std::size_t i, const GuidanceNet& n, std::uint64_t seed) {
        return ng_ransac_gradient(dataset[i], n, problem, config, seed);
      },
      callbacks);
  curve.insert(curve.end(), main.curve.begin(), main.curve.end());
  return TrainResult{std::move(main.net), std::move(curve)};
}

TrainResult train_line_loop(std::span<const LineScene> dataset, GuidanceNet net,
                            const TrainConfig& config, const TrainCallbacks& callbacks) {
  validate(config);
  if (dataset.empty()) throw Error(ErrorCode::EmptyInput, "training dataset is empty");
  return run_phase(
      dataset.size(), std::move(net), config.iterations, config.learning_rate, config, "loss",
      [&](std::size_t i, const GuidanceNet& n, std::uint64_t seed) {
        return ng_dsac_gradient(dataset[i], n, config, seed);
      },
      callbacks);
}

double mean_inlier_mass(const GuidanceNet& net, std::span<const EpipolarScene> scenes, bool with_ratio) {
  if (scenes.empty()) throw Error(ErrorCode::EmptyInput, "no scenes");
  double total = 0.0;
  for (const auto& s : scenes) {
    const auto out = forward(net, correspondence_features(s.correspondences, with_ratio));
    double mass = 0.0;
    for (std::size_t i = 0; i < s.correspondences.size(); ++i) {
      if (s.correspondences[i].gt_inlier.value_or(false)) mass += out.weights[i];
    }
    total += mass;
  }
  return total / static_cast<double>(scenes.size());
}

}  // namespace ngsac
