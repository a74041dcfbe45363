#include "ngsac/bench.hpp"

#include "ngsac/estimator.hpp"
#include "ngsac/metrics.hpp"
#include "ngsac/problem.hpp"
#include "ngsac/rng.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <mutex>
#include <thread>

namespace ngsac {

std::string_view to_string(BenchTask t) {
  return t == BenchTask::Essential ? "essential" : "fundamental";
}

BenchTask parse_task(std::string_view s) {
  if (s == "essential") return BenchTask::Essential;
  if (s == "fundamental") return BenchTask::Fundamental;
  throw Error(ErrorCode::ParseError, "unknown task '" + std::string(s) + "'");
}

void validate(const BenchMatrix& m) {
  require(!m.methods.empty() && !m.budgets.empty() && !m.outlier_rates.empty() && !m.seeds.empty(),
          "benchmark matrix has an empty axis");
  for (const auto& method : m.methods) {
    if (std::find(kBenchMethods.begin(), kBenchMethods.end(), method) == kBenchMethods.end()) {
      throw Error(ErrorCode::PreconditionViolation, "unknown method '" + method + "'");
    }
  }
  for (const auto b : m.budgets) require(b >= 1, "budgets must be >= 1");
  require(m.jobs >= 1, "jobs must be >= 1");
}

std::vector<BenchCell> bench_cells(const BenchMatrix& m) {
  std::vector<BenchCell> cells;
  cells.reserve(m.cell_count());
  for (const double rate : m.outlier_rates) {
    for (const auto budget : m.budgets) {
      for (const auto& method : m.methods) {
        for (const auto seed : m.seeds) cells.push_back({method, budget, rate, seed});
      }
    }
  }
  return cells;
}

EpipolarScene bench_scene(const BenchMatrix& m, double outlier_rate, std::uint64_t seed) {
  EpipolarSceneConfig c;
  c.n_correspondences = m.n_correspondences;
  c.outlier_rate = outlier_rate;
  c.noise_std = m.noise_std;
  c.side_info = m.side_info;
  c.seed = derive_seed(seed, static_cast<std::uint64_t>(std::llround(outlier_rate * 1e6)));
  return gen_epipolar_scene(c);
}

namespace {

std::vector<double> learned_weights(const GuidanceNet* net, std::span<const Correspondence> corrs) {
  if (!net) throw Error(ErrorCode::PreconditionViolation, "learned method needs a model (--model)");
  const bool with_ratio = net->spec().input_dim == 5;
  const auto out = forward(*net, correspondence_features(corrs, with_ratio));
  const auto w = out.weights.weights();
  return {w.begin(), w.end()};
}

}  // namespace

EstimateReport<Model3x3> run_method(const std::string& method, std::span<const Correspondence> corrs,
                                    const EpipolarProblem& problem, std::size_t m, std::uint64_t seed,
                                    const GuidanceNet* net, double ratio_threshold) {
  const EstimatorConfig config{SamplerConfig{m, problem.minimal_size, seed}, true};
  if (method == "ransac") return ransac(corrs, config, problem);
  if (method == "ngransac") {
    const auto w = learned_weights(net, corrs);
    return ng_ransac(corrs, GuidanceDistribution(w), config, problem);
  }
  if (method == "ratio-ransac") return ratio_filtered_ransac(corrs, ratio_threshold, config, problem);
  std::vector<double> priorities;
  if (method == "progressive") {
    for (const auto& c : corrs) {
      if (!c.ratio) throw Error(ErrorCode::PreconditionViolation, "progressive needs side information");
      priorities.push_back(-*c.ratio);
    }
  } else if (method == "progressive-learned") {
    priorities = learned_weights(net, corrs);
  } else {
    throw Error(ErrorCode::PreconditionViolation, "unknown method '" + method + "'");
  }
  return progressive_ransac(corrs, std::span<const double>(priorities), config, problem, inlier_score(problem));
}

void fill_metrics(MetricRecord& rec, const EstimateReport<Model3x3>& r, std::span<const Correspondence> corrs,
                  const EpipolarProblem& problem, BenchTask task, const std::optional<Model3x3>& gt,
                  const std::optional<Pose>& gt_pose) {
  const bool essential = task == BenchTask::Essential;
  rec.pct_inliers = 100.0 * inlier_fraction(r.model, corrs, problem.tau);
  if (gt) {
    const double stats_tau = essential ? 10.0 * kEssentialTau : kFundamentalStatsTauPx;
    rec.f_score = fscore_inliers(r.model, *gt, corrs, problem.tau);
    try {
      const auto st = epipolar_stats(r.model, *gt, corrs, stats_tau);
      rec.mean_epi = st.mean;
      rec.median_epi = st.median;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NoInliers) throw;
    }
  }
  if (essential && gt_pose) {
    std::vector<Correspondence> support;
    for (const auto i : r.inlier_indices) support.push_back(corrs[i]);
    if (support.empty()) support.assign(corrs.begin(), corrs.end());
    try {
      rec.angular_error_deg = angular_pose_error(decompose_essential(r.model, support), *gt_pose);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::CheiralityAmbiguous) throw;
      rec.angular_error_deg = 180.0;
    }
  }
}

MetricRecord run_cell(const BenchMatrix& m, const BenchCell& cell) {
  MetricRecord rec;
  rec.task = std::string(to_string(m.task));
  rec.method = cell.method;
  rec.m = cell.m;
  rec.outlier_rate = cell.outlier_rate;
  rec.seed = cell.seed;
  const auto start = std::chrono::steady_clock::now();
  try {
    const EpipolarScene scene = bench_scene(m, cell.outlier_rate, cell.seed);
    const bool essential = m.task == BenchTask::Essential;
    const std::vector<Correspondence> corrs = essential ? scene.correspondences : to_pixels(scene);
    const EpipolarProblem problem = essential ? essential_problem() : fundamental_problem();
    const auto r = run_method(cell.method, corrs, problem, cell.m, cell.seed, m.net.get(), m.ratio_threshold);
    fill_metrics(rec, r, corrs, problem, m.task, essential ? scene.gt_essential : scene.gt_fundamental,
                 scene.gt_pose);
  } catch (const Error& e) {
    rec.error = std::string(to_string(e.code()));
  }
  rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return rec;
}

std::vector<MetricRecord> run_benchmark(const BenchMatrix& m,
                                        const std::function<void(const MetricRecord&)>& sink) {
  validate(m);
  const auto cells = bench_cells(m);
  std::vector<std::optional<MetricRecord>> results(cells.size());
  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::size_t flushed = 0;
  auto worker = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= cells.size()) return;
      MetricRecord rec = run_cell(m, cells[i]);
      std::lock_guard lock(mu);
      results[i] = std::move(rec);
      while (flushed < results.size() && results[flushed]) {
        if (sink) sink(*results[flushed]);
        ++flushed;
      }
    }
  };
  const std::size_t jobs = std::min(m.jobs, std::max<std::size_t>(1, cells.size()));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  std::vector<MetricRecord> out;
  out.reserve(results.size());
  for (auto& r : results) out.push_back(std::move(*r));
  return out;
}

}  // namespace ngsac
