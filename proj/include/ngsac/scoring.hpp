#pragma once

#include "ngsac/geometry.hpp"
#include "ngsac/sampling.hpp"

#include <functional>
#include <span>
#include <vector>

namespace ngsac {

/// |{y : residual(y, model) < tau}|.
template <class Obs, class Model, class ResidualFn>
std::size_t inlier_count(const Model& model, std::span<const Obs> observations, double tau,
                         ResidualFn&& residual) {
  require(tau > 0.0, "inlier threshold must be positive");
  std::size_t count = 0;
  for (const auto& y : observations) {
    if (residual(y, model) < tau) ++count;
  }
  return count;
}

template <class Obs, class Model, class ResidualFn>
std::vector<std::size_t> inlier_indices(const Model& model, std::span<const Obs> observations,
                                        double tau, ResidualFn&& residual) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < observations.size(); ++i) {
    if (residual(observations[i], model) < tau) out.push_back(i);
  }
  return out;
}

struct SoftScoreParams {
  double alpha = 0.1;
  double beta = 100.0;
  double tau = 0.05;
};

void validate(const SoftScoreParams& params);

double sigmoid(double x);

/// alpha * sum_y (1 - sig(beta * d_y - beta * tau)) over precomputed residuals.
double soft_inlier_count(std::span<const double> residuals, const SoftScoreParams& params);

/// Soft inlier count of a line hypothesis with its derivatives with respect
/// to the (unnormalized) coefficients (a, b, c) and every observation.
struct SoftLineScore {
  double value = 0.0;
  Vec3 d_line = Vec3::Zero();
  std::vector<Vec2> d_points;
};

SoftLineScore soft_inlier_count(const Line2& line, std::span<const Vec2> points,
                                const SoftScoreParams& params, bool with_gradient = true);

/// Softmax over hypothesis scores with max-subtraction.
std::vector<double> selection_distribution(std::span<const double> scores);

/// Argmax, ties to the lowest index.
std::size_t select_best(std::span<const double> scores);

template <class Model>
std::size_t select_best(const HypothesisPool<Model>& pool) {
  require(pool.size() > 0, "cannot select from an empty pool");
  const auto scores = pool.scores();
  return select_best(std::span<const double>(scores));
}

}  // namespace ngsac
