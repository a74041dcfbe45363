#include "ngsac/scoring.hpp"

#include <algorithm>
#include <cmath>

namespace ngsac {

void validate(const SoftScoreParams& params) {
  require(params.alpha > 0.0 && params.beta > 0.0 && params.tau > 0.0,
          "soft score parameters must be positive");
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double soft_inlier_count(std::span<const double> residuals, const SoftScoreParams& params) {
  validate(params);
  double s = 0.0;
  for (const double d : residuals) s += 1.0 - sigmoid(params.beta * d - params.beta * params.tau);
  return params.alpha * s;
}

SoftLineScore soft_inlier_count(const Line2& line, std::span<const Vec2> points,
                                const SoftScoreParams& params, bool with_gradient) {
  validate(params);
  SoftLineScore out;
  if (with_gradient) out.d_points.assign(points.size(), Vec2::Zero());
  for (std::size_t i = 0; i < points.size(); ++i) {
    const Vec2& p = points[i];
    const double r = line.a * p.x() + line.b * p.y() + line.c;
    const double d = std::abs(r);
    const double sg = sigmoid(params.beta * d - params.beta * params.tau);
    out.value += params.alpha * (1.0 - sg);
    if (!with_gradient) continue;
    // d/dd of alpha * (1 - sig(beta d - beta tau)) = -alpha beta sig'.
    const double dscore_dd = -params.alpha * params.beta * sg * (1.0 - sg);
    const double sign = r > 0.0 ? 1.0 : (r < 0.0 ? -1.0 : 0.0);
    out.d_line += dscore_dd * sign * Vec3(p.x(), p.y(), 1.0);
    out.d_points[i] = dscore_dd * sign * Vec2(line.a, line.b);
  }
  return out;
}

std::vector<double> selection_distribution(std::span<const double> scores) {
  require(!scores.empty(), "selection distribution of an empty pool");
  const double mx = *std::max_element(scores.begin(), scores.end());
  std::vector<double> p(scores.size());
  double total = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    require(std::isfinite(scores[i]), "scores must be finite");
    p[i] = std::exp(scores[i] - mx);
    total += p[i];
  }
  for (auto& v : p) v /= total;
  return p;
}

std::size_t select_best(std::span<const double> scores) {
  require(!scores.empty(), "cannot select from an empty pool");
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i] > scores[best]) best = i;
  }
  return best;
}

}  // namespace ngsac
