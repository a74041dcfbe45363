#include "ngsac/metrics.hpp"

#include "ngsac/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace ngsac {

namespace {

double residual(const Correspondence& c, const Model3x3& m) { return epipolar_distance(c, m); }

}  // namespace

double auc(std::span<const double> errors, double max_threshold, double bin_width) {
  if (errors.empty()) throw Error(ErrorCode::EmptyInput, "auc of an empty error list");
  require(bin_width > 0.0 && max_threshold > 0.0, "auc needs positive threshold and bin width");
  const double ratio = max_threshold / bin_width;
  const double bins_d = std::round(ratio);
  require(bins_d >= 1.0 && std::abs(ratio - bins_d) < 1e-9, "bin width must divide the threshold");
  const auto bins = static_cast<std::size_t>(bins_d);
  std::vector<std::size_t> hist(bins, 0);
  for (const double e : errors) {
    require(!std::isnan(e), "auc errors must not be NaN");
    if (e < 0.0) throw Error(ErrorCode::PreconditionViolation, "auc errors must be >= 0");
    const double b = std::floor(e / bin_width);
    if (b < bins_d) ++hist[static_cast<std::size_t>(b)];
  }
  const double n = static_cast<double>(errors.size());
  double cumulative = 0.0, total = 0.0;
  for (const auto h : hist) {
    cumulative += static_cast<double>(h);
    total += cumulative / n;
  }
  return total / static_cast<double>(bins);
}

double fscore_inliers(const Model3x3& est, const Model3x3& gt,
                      std::span<const Correspondence> correspondences, double tau) {
  require(tau > 0.0, "tau must be positive");
  std::size_t n_est = 0, n_gt = 0, both = 0;
  for (const auto& c : correspondences) {
    const bool e = residual(c, est) < tau;
    const bool g = residual(c, gt) < tau;
    n_est += e;
    n_gt += g;
    both += e && g;
  }
  if (n_est == 0 || n_gt == 0) return 0.0;
  const double p = static_cast<double>(both) / static_cast<double>(n_est);
  const double r = static_cast<double>(both) / static_cast<double>(n_gt);
  if (p + r == 0.0) return 0.0;
  return 2.0 * p * r / (p + r);
}

EpipolarStats epipolar_stats(const Model3x3& est, const Model3x3& gt,
                             std::span<const Correspondence> correspondences, double tau) {
  require(tau > 0.0, "tau must be positive");
  std::vector<double> errs;
  for (const auto& c : correspondences) {
    if (residual(c, est) < tau) errs.push_back(epipolar_distance(c, gt));
  }
  if (errs.empty()) throw Error(ErrorCode::NoInliers, "estimate has no inliers");
  EpipolarStats s;
  double sum = 0.0;
  for (const double e : errs) sum += e;
  s.mean = sum / static_cast<double>(errs.size());
  std::sort(errs.begin(), errs.end());
  const std::size_t mid = errs.size() / 2;
  s.median = errs.size() % 2 == 1 ? errs[mid] : 0.5 * (errs[mid - 1] + errs[mid]);
  return s;
}

double inlier_fraction(const Model3x3& m, std::span<const Correspondence> correspondences, double tau) {
  if (correspondences.empty()) throw Error(ErrorCode::EmptyInput, "no correspondences");
  std::size_t n = 0;
  for (const auto& c : correspondences) n += residual(c, m) < tau;
  return static_cast<double>(n) / static_cast<double>(correspondences.size());
}

}  // namespace ngsac
