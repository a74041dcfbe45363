#pragma once

#include "ngsac/estimator.hpp"
#include "ngsac/guidance.hpp"
#include "ngsac/synthdata.hpp"
#include "ngsac/training.hpp"

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ngsac::oracle {

/// Six 2D points (three near a line, three off it), N = 2, M = 2: small
/// enough to enumerate every ordered pool.
struct ToyInstance {
  std::vector<Vec2> points;
  Line2 gt;
  LineProblem problem;
  std::size_t m = 2;
  std::vector<MinimalSet> ordered_sets;       // all 30 ordered pairs
  std::vector<std::vector<double>> pool_loss;  // [first set][second set]
};

ToyInstance make_toy_instance();

/// Loss of the pool estimate (argmax selection, refit, robust line loss).
double pool_loss(const ToyInstance& toy, std::span<const MinimalSet> sets);
double report_loss(const ToyInstance& toy, const EstimateReport<Line2>& report);

/// p = sigmoid(z) / sum sigmoid(z), the network's weight head on free logits.
std::vector<double> weights_from_logits(std::span<const double> z);
/// Chain d/d log p into d/dz.
std::vector<double> logit_gradient(std::span<const double> z, std::span<const double> grad_log_p);

struct Enumerated {
  double expected_loss = 0.0;
  std::vector<double> grad_log_weights;
};

/// Calls f(probability, loss, d log P(pool) / d log p) for every ordered pool.
void for_each_pool(const ToyInstance& toy, std::span<const double> weights,
                   const std::function<void(double, double, const std::vector<double>&)>& f);

/// Exact expectation over all pools; `baseline` is subtracted from every loss.
Enumerated enumerate_toy(const ToyInstance& toy, std::span<const double> weights, double baseline = 0.0);

/// Central differences of f at x.
std::vector<double> central_difference(const std::function<double(std::span<const double>)>& f,
                                       std::vector<double> x, double h);

/// max_i |a_i - b_i| / max(|a_i|, |b_i|, floor).
double max_relative_error(std::span<const double> a, std::span<const double> b, double floor = 1e-12);

/// Four-patch line scene with a tiny two-head network (blockade off): the
/// doubly expected loss over all M = 2 pools and its analytic gradient.
struct LineToy {
  LineScene scene;
  GuidanceNet net;
  std::size_t m = 2;
  SoftScoreParams soft;
};

LineToy make_line_toy(std::uint64_t seed);

struct LineEnumerated {
  double expected_loss = 0.0;
  std::vector<double> grad;  // parameter gradient
  double min_distance_to_kink = 0.0;  // over hypothesis losses, see kink_distance
};

LineEnumerated enumerate_line_toy(const LineToy& toy, const GuidanceNet& net, bool blockade);

/// Monte-Carlo REINFORCE gradient (logit space) against the enumerated one.
struct MonteCarloComparison {
  std::vector<double> exact;
  std::vector<double> estimate;
  double norm_relative_error = 0.0;   // |estimate - exact| / |exact|
  double max_coordinate_error = 0.0;  // max_c |estimate_c - exact_c| / |exact_c|
  double predicted_norm_error = 0.0;  // expected value of the norm error (rms)
  std::vector<double> predicted_sd;   // per-coordinate standard deviation
};

MonteCarloComparison compare_toy_monte_carlo(std::size_t k, std::uint64_t seed);

struct CheckResult {
  std::string name;
  bool passed = false;
  double value = 0.0;
  double threshold = 0.0;
  std::string detail;
};

/// Criterion-level oracle checks (also used by the `gradcheck` command).
CheckResult check_toy_enumeration_vs_fd();
CheckResult check_toy_enumeration_vs_fd_net();
CheckResult check_toy_monte_carlo(std::size_t k = 200000);
CheckResult check_baseline_neutrality();
CheckResult check_baseline_variance(std::size_t trials = 100, std::size_t repeats = 200);
CheckResult check_ng_dsac_fd();
CheckResult check_guidance_backward_fd(std::size_t configs = 20);
CheckResult check_instance_norm_fd();

std::vector<CheckResult> run_gradcheck_suite(bool quick);

}  // namespace ngsac::oracle
