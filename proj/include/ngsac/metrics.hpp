#pragma once

#include "ngsac/geometry.hpp"

#include <span>

namespace ngsac {

/// Area under the cumulative error histogram: errors are binned into
/// [0,b), [b,2b), ... up to max_threshold and the AUC is the mean of the
/// cumulative fractions over the bins.
double auc(std::span<const double> errors_deg, double max_threshold_deg = 20.0,
           double bin_width_deg = 5.0);

/// F-score of the inlier set of `est` against the inlier set of `gt`
/// (epipolar_distance < tau). Zero when either set is empty.
double fscore_inliers(const Model3x3& est, const Model3x3& gt,
                      std::span<const Correspondence> correspondences, double tau);

struct EpipolarStats {
  double mean = 0.0;
  double median = 0.0;
};

/// Mean and median epipolar distance w.r.t. `gt` over the inliers of `est`.
/// Throws NoInliers when `est` has none.
EpipolarStats epipolar_stats(const Model3x3& est, const Model3x3& gt,
                             std::span<const Correspondence> correspondences, double tau);

/// Fraction of correspondences that are inliers of `m`.
double inlier_fraction(const Model3x3& m, std::span<const Correspondence> correspondences, double tau);

}  // namespace ngsac
