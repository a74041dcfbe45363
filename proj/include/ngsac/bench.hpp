#pragma once

#include "ngsac/guidance.hpp"
#include "ngsac/io.hpp"
#include "ngsac/problem.hpp"
#include "ngsac/synthdata.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace ngsac {

enum class BenchTask { Essential, Fundamental };

std::string_view to_string(BenchTask t);
BenchTask parse_task(std::string_view s);

/// Methods: ransac, ngransac, progressive (ratio priorities), ratio-ransac,
/// progressive-learned (network weights as priorities).
inline const std::vector<std::string> kBenchMethods = {"ransac", "ngransac", "progressive",
                                                      "ratio-ransac", "progressive-learned"};

struct BenchMatrix {
  BenchTask task = BenchTask::Essential;
  std::vector<std::string> methods{"ransac"};
  std::vector<std::size_t> budgets{100};
  std::vector<double> outlier_rates{0.5};
  std::vector<std::uint64_t> seeds{0};
  std::size_t n_correspondences = 500;
  double noise_std = 2e-4;
  SideInfo side_info = SideInfo::informative();
  double ratio_threshold = 0.8;
  std::shared_ptr<const GuidanceNet> net;  // needed by the learned methods
  std::size_t jobs = 1;

  std::size_t cell_count() const {
    return methods.size() * budgets.size() * outlier_rates.size() * seeds.size();
  }
};

void validate(const BenchMatrix& matrix);

struct BenchCell {
  std::string method;
  std::size_t m = 0;
  double outlier_rate = 0.0;
  std::uint64_t seed = 0;
};

/// Cells in output order: outlier rate, budget, method, seed (innermost).
std::vector<BenchCell> bench_cells(const BenchMatrix& matrix);

/// Estimates with one of kBenchMethods. `net` is needed by the learned
/// methods only.
EstimateReport<Model3x3> run_method(const std::string& method, std::span<const Correspondence> corrs,
                                    const EpipolarProblem& problem, std::size_t m, std::uint64_t seed,
                                    const GuidanceNet* net = nullptr, double ratio_threshold = 0.8);

/// Inlier percentage always; F-score and epipolar statistics when the gt
/// model is known; angular error for the essential task when the gt pose is.
void fill_metrics(MetricRecord& rec, const EstimateReport<Model3x3>& report, std::span<const Correspondence> corrs,
                  const EpipolarProblem& problem, BenchTask task, const std::optional<Model3x3>& gt,
                  const std::optional<Pose>& gt_pose);

/// Runs one cell on the scene generated from (seed, outlier rate). Failures
/// are returned as a record with the error tag set.
MetricRecord run_cell(const BenchMatrix& matrix, const BenchCell& cell);

/// Runs every cell (up to matrix.jobs concurrently) and hands records to
/// `sink` in cell order as soon as the ordered prefix is complete.
std::vector<MetricRecord> run_benchmark(const BenchMatrix& matrix,
                                        const std::function<void(const MetricRecord&)>& sink = {});

/// The scene a benchmark cell uses.
EpipolarScene bench_scene(const BenchMatrix& matrix, double outlier_rate, std::uint64_t seed);

}  // namespace ngsac
