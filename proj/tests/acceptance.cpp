// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on failure.

#include "ngsac/bench.hpp"
#include "ngsac/cli.hpp"
#include "ngsac/metrics.hpp"
#include "ngsac/oracles.hpp"
#include "ngsac/training.hpp"
#include "support.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

using namespace ngsac;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

int failures = 0;

void report(int id, bool ok, const std::string& what, const std::string& detail) {
  std::printf("%s criterion %d: %s (%s)\n", ok ? "PASS" : "FAIL", id, what.c_str(), detail.c_str());
  std::fflush(stdout);
  failures += !ok;
}

std::string fmt(double v) {
  char b[32];
  std::snprintf(b, sizeof b, "%.3g", v);
  return b;
}

void criterion1() {
  const auto t0 = Clock::now();
  const auto fd = oracle::check_toy_enumeration_vs_fd();
  const auto mc = oracle::compare_toy_monte_carlo(200000, 20240611);
  const double secs = seconds_since(t0);
  const bool ok = fd.value < 1e-5 && mc.norm_relative_error < 1e-2 && secs < 60.0;
  report(1, ok, "enumerated gradient vs finite differences and Monte-Carlo (K=2e5)",
         "fd rel " + fmt(fd.value) + ", mc rel " + fmt(mc.norm_relative_error) + " (worst coordinate " +
             fmt(mc.max_coordinate_error) + "), " + fmt(secs) + " s");
}

void criterion2() {
  const auto n = oracle::check_baseline_neutrality();
  const auto v = oracle::check_baseline_variance(100, 200);
  report(2, n.value < 1e-10 && v.value >= 95.0, "baseline neutrality and variance reduction",
         "neutrality " + fmt(n.value) + ", lower variance in " + v.detail);
}

void criterion3() {
  const auto t0 = Clock::now();
  const auto r = oracle::check_ng_dsac_fd();
  const double secs = seconds_since(t0);
  report(3, r.value < 1e-4 && secs < 60.0, "NG-DSAC analytic gradient vs finite differences",
         "rel " + fmt(r.value) + ", " + r.detail + ", " + fmt(secs) + " s");
}

void criterion4() {
  const auto t0 = Clock::now();
  double worst8 = 0.0, worst7 = 0.0, worst_mat = 0.0;
  std::size_t count_mismatch = 0;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const auto s8 = test::make_f_scene(seed, 8 + seed % 50);
    const auto f = solve_fundamental_8pt(s8.corrs);
    worst8 = std::max(worst8, test::max_epipolar_distance(s8.corrs, f.m));
    worst_mat = std::max(worst_mat, test::projective_distance(f.m, s8.f));

    const auto s7 = test::make_f_scene(100000 + seed, 7);
    const auto cands = solve_fundamental_7pt(s7.corrs);
    double best = 1e9;
    for (const auto& c : cands) {
      worst7 = std::max(worst7, test::max_epipolar_distance(s7.corrs, c.m));
      best = std::min(best, test::projective_distance(c.m, s7.f));
    }
    worst_mat = std::max(worst_mat, best);
    count_mismatch += cands.size() != test::seven_point_oracle(s7.corrs).size();
  }
  const double secs = seconds_since(t0);
  const bool ok = worst8 < 1e-9 && worst7 < 1e-9 && worst_mat < 1e-6 && count_mismatch == 0 && secs < 30.0;
  report(4, ok, "8-point and 7-point exactness, 7-point root count vs oracle (1000 scenes)",
         "max residual 8pt " + fmt(worst8) + ", 7pt " + fmt(worst7) + ", matrix dist " + fmt(worst_mat) +
             ", count mismatches " + std::to_string(count_mismatch) + ", " + fmt(secs) + " s");
}

void criterion5() {
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    EpipolarSceneConfig c;
    c.outlier_rate = 0.0;
    c.noise_std = 0.0;
    c.n_correspondences = 50;
    c.seed = 7000 + seed;
    const auto s = gen_epipolar_scene(c);
    worst = std::max(worst, angular_pose_error(decompose_essential(s.gt_essential, s.correspondences), s.gt_pose));
  }
  report(5, worst < 1e-6, "essential decomposition round trip (100 scenes)", "max error " + fmt(worst) + " deg");
}

EpipolarScene make_scene(std::uint64_t seed, double outliers, SideInfo side) {
  EpipolarSceneConfig c;
  c.n_correspondences = 500;
  c.outlier_rate = outliers;
  c.side_info = side;
  c.seed = seed;
  return gen_epipolar_scene(c);
}

// Trained once, shared by criteria 6 and 8.
struct SupervisedRun {
  GuidanceNet net;
  double kl_seconds = 0.0;
  double total_seconds = 0.0;
};

SupervisedRun train_supervised() {
  const auto t0 = Clock::now();
  std::vector<EpipolarExample> data;
  for (std::uint64_t s = 0; s < 64; ++s) {
    data.push_back(make_example(make_scene(derive_seed(1, s), 0.85, SideInfo::informative())));
  }
  GuidanceNetSpec spec;
  spec.input_dim = 5;
  TrainConfig cfg;
  cfg.objective = Objective::PoseAngular;
  cfg.kl_iterations = 300;
  cfg.kl_learning_rate = 1e-3;
  cfg.iterations = 0;
  cfg.batch_size = 8;
  cfg.seed = 11;
  auto kl = train_loop(data, GuidanceNet::initialize(spec, 11), cfg, essential_problem());
  SupervisedRun run{std::move(kl.net)};
  run.kl_seconds = seconds_since(t0);
  cfg.kl_init = false;
  cfg.iterations = 40;
  cfg.learning_rate = 1e-5;
  cfg.k = 4;
  cfg.m = 16;
  auto pose = train_loop(data, std::move(run.net), cfg, essential_problem());
  run.net = std::move(pose.net);
  run.total_seconds = seconds_since(t0);
  return run;
}

void criterion6(const SupervisedRun& run) {
  const auto problem = essential_problem();
  std::size_t ng10 = 0, r100 = 0, r10 = 0;
  const std::size_t n = 200;
  for (std::uint64_t s = 0; s < n; ++s) {
    const auto scene = make_scene(derive_seed(2, s), 0.85, SideInfo::informative());
    const std::span<const Correspondence> corrs(scene.correspondences);
    auto success = [&](const std::string& method, std::size_t m, const GuidanceNet* net) {
      MetricRecord rec;
      const auto r = run_method(method, corrs, problem, m, s, net);
      fill_metrics(rec, r, corrs, problem, BenchTask::Essential, scene.gt_essential, scene.gt_pose);
      return rec.angular_error_deg.value_or(180.0) < 5.0;
    };
    ng10 += success("ngransac", 10, &run.net);
    r100 += success("ransac", 100, nullptr);
    r10 += success("ransac", 10, nullptr);
  }
  const double p_ng = 100.0 * ng10 / n, p100 = 100.0 * r100 / n, p10 = 100.0 * r10 / n;
  const bool ok = p_ng >= p100 && p_ng - p10 >= 30.0 && run.total_seconds < 600.0;
  report(6, ok, "85% outliers: learned guidance at M=10 vs uniform RANSAC",
         "success NG M=10 " + fmt(p_ng) + "%, RANSAC M=100 " + fmt(p100) + "%, RANSAC M=10 " + fmt(p10) +
             "%, training " + fmt(run.total_seconds) + " s");
}

void criterion7() {
  const auto t0 = Clock::now();
  const double outliers = 0.5;
  std::vector<EpipolarExample> data;
  for (std::uint64_t s = 0; s < 64; ++s) {
    data.push_back(strip_ground_truth(make_example(make_scene(derive_seed(3, s), outliers, SideInfo::informative()))));
  }
  bool labels_free = true;
  for (const auto& ex : data) labels_free &= !has_ground_truth(ex);
  GuidanceNetSpec spec;
  spec.input_dim = 5;
  const auto untrained = GuidanceNet::initialize(spec, 21);
  TrainConfig cfg;
  cfg.objective = Objective::InlierCount;
  cfg.iterations = 150;
  cfg.learning_rate = 1e-3;
  cfg.batch_size = 8;
  cfg.k = 4;
  cfg.m = 16;
  cfg.seed = 21;
  const auto trained = train_loop(data, untrained, cfg, essential_problem()).net;
  const double train_secs = seconds_since(t0);

  const auto problem = essential_problem();
  double before = 0.0, after = 0.0;
  const std::size_t n = 200;
  for (std::uint64_t s = 0; s < n; ++s) {
    const auto scene = make_scene(derive_seed(4, s), outliers, SideInfo::informative());
    const std::span<const Correspondence> corrs(scene.correspondences);
    before += run_method("ngransac", corrs, problem, 16, s, &untrained).inlier_indices.size();
    after += run_method("ngransac", corrs, problem, 16, s, &trained).inlier_indices.size();
  }
  before /= n;
  after /= n;
  const bool ok = labels_free && after >= 1.2 * before;
  report(7, ok, "self-supervised inlier-count training, labels stripped",
         "mean inliers " + fmt(before) + " -> " + fmt(after) + " (" + fmt(100.0 * (after / before - 1.0)) +
             "%), training " + fmt(train_secs) + " s");
}

void criterion8(const SupervisedRun& run) {
  std::vector<EpipolarScene> held_out;
  for (std::uint64_t s = 0; s < 50; ++s) held_out.push_back(make_scene(derive_seed(5, s), 0.85, SideInfo::informative()));
  const double mass = mean_inlier_mass(run.net, held_out, true);
  report(8, mass > 0.7, "KL initialization concentrates mass on inliers (held-out)",
         "mean inlier mass " + fmt(mass) + ", KL phase " + fmt(run.kl_seconds) + " s");
}

void criterion9() {
  bool ok = true;
  ok &= auc(std::vector<double>(5, 0.0), 20, 5) == 1.0;
  ok &= auc(std::vector<double>{21.0, 40.0}, 20, 5) == 0.0;
  ok &= auc(std::vector<double>{2.5}, 20, 5) == 1.0;

  const Mat3 e1 = (Mat3() << 0, 0, 0, 0, 0, -1, 0, 1, 0).finished();
  const Mat3 e2 = (Mat3() << 0, 0, 1, 0, 0, 0, -1, 0, 0).finished();
  std::vector<Correspondence> c;
  for (int i = 0; i < 30; ++i) c.push_back({0.01 * i, 0.02 * i, 0.01 * i, 0.02 * i});
  for (int i = 0; i < 20; ++i) c.push_back({0.01 * i, 0.03 * i, 0.01 * i + 1.0, 0.03 * i});
  for (int i = 0; i < 10; ++i) c.push_back({0.02 * i, 0.01 * i, 0.02 * i, 0.01 * i + 1.0});
  const Model3x3 gt{e1, MatrixKind::Essential}, est{e2, MatrixKind::Essential};
  const double f = fscore_inliers(est, gt, c, 1e-3);
  ok &= std::abs(f - 2.0 / 3.0) < 1e-12;
  ok &= fscore_inliers(gt, gt, c, 1e-3) == 1.0;
  ok &= fscore_inliers(est, gt, std::vector<Correspondence>(c.begin() + 30, c.end()), 1e-3) == 0.0;

  std::vector<Correspondence> d;
  for (const double v : {1.0, 2.0, 9.0}) d.push_back({0, 0, 0, v * std::sqrt(2.0)});
  const auto st = epipolar_stats(gt, gt, d, 10.0);
  ok &= std::abs(st.mean - 4.0) < 1e-12 && std::abs(st.median - 2.0) < 1e-12;
  const auto single = epipolar_stats(gt, gt, std::vector<Correspondence>(d.begin(), d.begin() + 1), 10.0);
  ok &= std::abs(single.mean - 1.0) < 1e-12 && std::abs(single.median - 1.0) < 1e-12;
  report(9, ok, "metric protocol examples", "auc, F-score " + fmt(f) + ", stats mean " + fmt(st.mean) +
                                                " median " + fmt(st.median));
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Drops the named column from every data row (comment lines kept as is).
std::string drop_column(const std::string& csv, const std::string& column) {
  std::istringstream in(csv);
  std::ostringstream out;
  int drop = -1;
  for (std::string line; std::getline(in, line);) {
    if (line.empty() || line[0] == '#') {
      out << line << '\n';
      continue;
    }
    std::vector<std::string> cells;
    std::stringstream ls(line);
    for (std::string cell; std::getline(ls, cell, ',');) cells.push_back(cell);
    if (drop < 0) {
      for (std::size_t i = 0; i < cells.size(); ++i) {
        if (cells[i] == column) drop = static_cast<int>(i);
      }
    }
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (static_cast<int>(i) == drop) continue;
      out << cells[i] << ',';
    }
    out << '\n';
  }
  return out.str();
}

int run(const std::vector<std::string>& args) {
  std::ostringstream o, e;
  const int code = run_cli(args, o, e);
  if (code != 0) std::cerr << e.str();
  return code;
}

void criterion10() {
  const fs::path dir = fs::temp_directory_path() / "ngsac_acceptance_cli";
  fs::remove_all(dir);
  fs::create_directories(dir);
  bool ok = true;
  std::string detail;
  std::string outputs[2][3];
  for (int rep = 0; rep < 2; ++rep) {
    const fs::path scenes = dir / ("scenes" + std::to_string(rep));
    ok &= run({"synth", "--out-dir", scenes.string(), "--count", "3", "--n", "80", "--seed", "4"}) == 0;
    std::string all;
    for (const auto& name : {"scene_0000.txt", "scene_0001.txt", "scene_0002.txt"}) {
      std::string text = read_file(scenes / name);
      // The echoed output directory differs between the two runs.
      std::string cleaned;
      std::istringstream in(text);
      for (std::string line; std::getline(in, line);) {
        if (line.rfind("# out-dir = ", 0) != 0) cleaned += line + '\n';
      }
      all += cleaned;
    }
    outputs[rep][0] = all;

    const fs::path csv = dir / "bench.csv";
    ok &= run({"bench", "--methods", "ransac,ratio-ransac,progressive", "--budgets", "5,20", "--seeds", "0-2",
               "--outlier-rates", "0.5,0.7", "--n", "120", "--jobs", "2", "--seed", "9", "--out", csv.string()}) == 0;
    outputs[rep][1] = drop_column(read_file(csv), "wall_ms");

    const fs::path model = dir / "model.bin", curve = dir / "curve.csv";
    ok &= run({"train", "--objective", "pose", "--k", "2", "--m", "8", "--iters", "2", "--kl-iters", "2",
               "--batch", "2", "--scenes", "4", "--n", "60", "--hidden", "8", "--blocks", "1", "--seed", "3",
               "--out", model.string(), "--curve", curve.string()}) == 0;
    outputs[rep][2] = drop_column(read_file(curve), "seconds") + read_file(model);
  }
  const char* names[3] = {"synth", "bench", "train"};
  for (int i = 0; i < 3; ++i) {
    const bool same = !outputs[0][i].empty() && outputs[0][i] == outputs[1][i];
    ok &= same;
    detail += std::string(names[i]) + (same ? " identical" : " DIFFERS") + (i < 2 ? ", " : "");
  }
  report(10, ok, "CLI outputs are byte-identical across repeated runs", detail);
  fs::remove_all(dir);
}

}  // namespace

int main() {
  unsetenv(kSeedEnv);
  criterion1();
  criterion2();
  criterion3();
  criterion4();
  criterion5();
  const auto supervised = train_supervised();
  criterion6(supervised);
  criterion7();
  criterion8(supervised);
  criterion9();
  criterion10();
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
