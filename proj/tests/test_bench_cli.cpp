#include "ngsac/bench.hpp"
#include "ngsac/cli.hpp"
#include "ngsac/error.hpp"
#include "ngsac/io.hpp"
#include "ngsac/metrics.hpp"

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace ngsac;
namespace fs = std::filesystem;

namespace {

const Mat3 kE = (Mat3() << 0, 0, 0, 0, 0, -1, 0, 1, 0).finished();   // residual y1 - y2
const Mat3 kE2 = (Mat3() << 0, 0, 1, 0, 0, 0, -1, 0, 0).finished();  // residual x2 - x1

bool throws_code(ErrorCode code, auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code() == code;
  }
  return false;
}

struct CliRun {
  int code = 0;
  std::string out, err;
};

CliRun cli(const std::vector<std::string>& args) {
  std::ostringstream o, e;
  CliRun r;
  r.code = run_cli(args, o, e);
  r.out = o.str();
  r.err = e.str();
  return r;
}

bool has_line(const std::string& text, const std::string& line) {
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) {
    if (l == line) return true;
  }
  return false;
}

fs::path temp_dir(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("ngsac_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

struct EnvGuard {
  EnvGuard() { unsetenv(kSeedEnv); }
  ~EnvGuard() { unsetenv(kSeedEnv); }
};

}  // namespace

TEST_SUITE("bench_cli") {
  TEST_CASE("auc examples") {
    CHECK(auc(std::vector<double>(7, 0.0)) == 1.0);
    CHECK(auc(std::vector<double>{25.0, 90.0, 180.0}) == 0.0);
    CHECK(auc(std::vector<double>{2.5}) == 1.0);
    // Bins [0,5), [5,10), [10,15), [15,20): cumulative (1/4, 2/4, 3/4, 3/4).
    CHECK(auc(std::vector<double>{1.0, 7.0, 12.0, 30.0}) == doctest::Approx(0.5625));
    CHECK(throws_code(ErrorCode::EmptyInput, [] { auc(std::vector<double>{}); }));
    CHECK_THROWS_AS(auc(std::vector<double>{1.0}, 20.0, 3.0), Error);
  }

  TEST_CASE("auc is monotone") {
    CounterRng rng(1, 0);
    for (int trial = 0; trial < 300; ++trial) {
      std::vector<double> e(1 + rng.uniform_index(40));
      for (auto& v : e) v = rng.uniform(0, 40);
      auto smaller = e;
      for (auto& v : smaller) v *= rng.uniform();
      CHECK(auc(smaller) >= auc(e));
    }
  }

  TEST_CASE("fscore examples") {
    std::vector<Correspondence> c;
    for (int i = 0; i < 30; ++i) c.push_back({0.01 * i, 0.02 * i, 0.01 * i, 0.02 * i});          // both
    for (int i = 0; i < 20; ++i) c.push_back({0.01 * i, 0.03 * i, 0.01 * i + 1.0, 0.03 * i});    // gt only
    for (int i = 0; i < 10; ++i) c.push_back({0.02 * i, 0.01 * i, 0.02 * i, 0.01 * i + 1.0});    // est only
    for (int i = 0; i < 15; ++i) c.push_back({0.01 * i, 0.0, 0.01 * i + 1.0, 1.0});             // neither
    const Model3x3 gt{kE, MatrixKind::Essential}, est{kE2, MatrixKind::Essential};
    CHECK(fscore_inliers(est, gt, c, 1e-3) == doctest::Approx(2.0 * 0.75 * 0.6 / 1.35).epsilon(1e-14));
    CHECK(fscore_inliers(gt, gt, c, 1e-3) == 1.0);

    std::vector<Correspondence> disjoint(c.begin() + 30, c.begin() + 60);
    CHECK(fscore_inliers(est, gt, disjoint, 1e-3) == 0.0);
    CHECK(fscore_inliers(est, gt, std::vector<Correspondence>(c.begin() + 60, c.end()), 1e-3) == 0.0);
  }

  TEST_CASE("epipolar stats examples") {
    // Under kE the distance of (0,0,0,v) is v / sqrt(2).
    std::vector<Correspondence> c;
    for (const double d : {1.0, 2.0, 9.0}) c.push_back({0, 0, 0, d * std::sqrt(2.0)});
    const Model3x3 gt{kE, MatrixKind::Essential};
    const auto s = epipolar_stats(gt, gt, c, 10.0);
    CHECK(s.mean == doctest::Approx(4.0).epsilon(1e-14));
    CHECK(s.median == doctest::Approx(2.0).epsilon(1e-14));
    const std::vector<Correspondence> one{{0, 0, 0, 0.5 * std::sqrt(2.0)}};
    const auto s1 = epipolar_stats(gt, gt, one, 10.0);
    CHECK(s1.mean == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(s1.median == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(throws_code(ErrorCode::NoInliers, [&] { epipolar_stats(gt, gt, c, 0.1); }));

    EpipolarSceneConfig cfg;
    cfg.noise_std = 0.0;
    const auto scene = gen_epipolar_scene(cfg);
    const auto z = epipolar_stats(scene.gt_essential, scene.gt_essential, scene.correspondences, 1e-3);
    CHECK(z.mean < 1e-9);
    CHECK(z.median < 1e-9);
  }

  TEST_CASE("metrics CSV round trip") {
    std::vector<MetricRecord> recs;
    MetricRecord a;
    a.task = "essential";
    a.method = "ransac";
    a.m = 100;
    a.outlier_rate = 0.85;
    a.seed = 18446744073709551615ULL;
    a.angular_error_deg = 1.23456789;
    a.pct_inliers = 14.5;
    a.f_score = 0.5;
    a.mean_epi = 1e-5;
    a.median_epi = 2.5e-6;
    a.wall_ms = 12.25;
    recs.push_back(a);
    MetricRecord b = a;
    b.method = "ngransac";
    b.angular_error_deg.reset();
    b.f_score.reset();
    b.error = "InsufficientSupport";
    recs.push_back(b);
    std::stringstream ss;
    write_metrics_csv(ss, recs, {"seed = 3"});
    const auto back = read_metrics_csv(ss);
    CHECK(back == recs);
    CHECK(format_double(0.1) == "0.1");
    CHECK(format_double(1.0 / 3.0) == "0.333333333");
  }

  TEST_CASE("correspondence file round trip") {
    EpipolarSceneConfig cfg;
    cfg.n_correspondences = 40;
    cfg.side_info = SideInfo::informative();
    const auto scene = gen_epipolar_scene(cfg);
    CorrespondenceFile f;
    f.correspondences = scene.correspondences;
    f.has_ratio = true;
    f.has_label = true;
    f.gt_model = scene.gt_essential;
    f.gt_pose = scene.gt_pose;
    f.comments = {"seed = 0", "task = essential"};
    std::stringstream ss;
    write_correspondences(ss, f);
    const auto back = read_correspondences(ss);
    CHECK(back.comments == f.comments);
    CHECK(back.has_ratio);
    CHECK(back.has_label);
    REQUIRE(back.correspondences.size() == 40);
    for (std::size_t i = 0; i < 40; ++i) CHECK(back.correspondences[i] == f.correspondences[i]);
    REQUIRE(back.gt_model.has_value());
    CHECK(back.gt_model->m == f.gt_model->m);
    CHECK(back.gt_pose->rotation == f.gt_pose->rotation);

    std::string text = ss.str();
    const auto pos = text.find("version 1.0");
    REQUIRE(pos != std::string::npos);
    text.replace(pos, 11, "version 2.0");
    std::istringstream bumped(text);
    CHECK(throws_code(ErrorCode::VersionMismatch, [&] { read_correspondences(bumped); }));
    std::istringstream junk("not a correspondence file\n");
    CHECK(throws_code(ErrorCode::ParseError, [&] { read_correspondences(junk); }));
  }

  TEST_CASE("benchmark record counts and determinism") {
    BenchMatrix one;
    one.n_correspondences = 100;
    CHECK(run_benchmark(one).size() == 1);

    BenchMatrix mx;
    mx.n_correspondences = 100;
    mx.methods = {"ransac", "ratio-ransac"};
    mx.budgets = {5, 10, 20};
    mx.seeds.clear();
    for (std::uint64_t s = 0; s < 10; ++s) mx.seeds.push_back(s);
    auto a = run_benchmark(mx);
    CHECK(a.size() == 60);
    mx.jobs = 3;
    auto b = run_benchmark(mx);
    REQUIRE(b.size() == 60);
    for (auto& r : a) r.wall_ms = 0.0;
    for (auto& r : b) r.wall_ms = 0.0;
    CHECK(a == b);
    for (const auto& r : a) CHECK(r.error.empty());

    // Learned methods without a network fail per cell, the run continues.
    BenchMatrix learned = one;
    learned.methods = {"ngransac", "ransac"};
    const auto lr = run_benchmark(learned);
    REQUIRE(lr.size() == 2);
    CHECK_FALSE(lr[0].error.empty());
    CHECK(lr[1].error.empty());
  }

  TEST_CASE("cli exit codes") {
    EnvGuard env;
    const auto help = cli({"bench", "--help"});
    CHECK(help.code == kExitOk);
    CHECK(help.out.find("--budgets") != std::string::npos);
    const auto dir = temp_dir("train_missing");
    CHECK(cli({"train", "--iters", "1"}).code == kExitUsage);
    CHECK(cli({"bench", "--no-such-flag"}).code == kExitUsage);
    CHECK(cli({}).code == kExitUsage);
    CHECK(cli({"bench", "--methods", "bogus"}).code == kExitUsage);
    CHECK(cli({"eval", "--input", (dir / "missing.txt").string()}).code == kExitRuntime);
  }

  TEST_CASE("cli config precedence") {
    EnvGuard env;
    const auto dir = temp_dir("precedence");
    const std::vector<std::string> base{"bench", "--n", "20", "--budgets", "3", "--seeds", "0"};
    CHECK(has_line(cli(base).out, "# seed = 0"));

    setenv(kSeedEnv, "5", 1);
    const auto from_env = cli(base);
    CHECK(from_env.code == kExitOk);
    CHECK(has_line(from_env.out, "# seed = 5"));

    {
      std::ofstream cfg(dir / "cfg.json");
      cfg << R"({"seed": 6, "budgets": [4, 8]})";
    }
    auto with_cfg = base;
    with_cfg.erase(with_cfg.begin() + 3, with_cfg.begin() + 5);  // drop --budgets
    with_cfg.push_back("--config");
    with_cfg.push_back((dir / "cfg.json").string());
    const auto from_cfg = cli(with_cfg);
    CHECK(has_line(from_cfg.out, "# seed = 6"));
    CHECK(has_line(from_cfg.out, "# budgets = 4,8"));

    with_cfg.push_back("--seed=7");
    CHECK(has_line(cli(with_cfg).out, "# seed = 7"));

    setenv(kSeedEnv, "not-a-number", 1);
    CHECK(cli(base).code == kExitUsage);
  }

  TEST_CASE("cli synth and eval") {
    EnvGuard env;
    const auto dir = temp_dir("synth");
    const auto r = cli({"synth", "--out-dir", dir.string(), "--count", "2", "--n", "60", "--seed", "3"});
    REQUIRE(r.code == kExitOk);
    std::ifstream in(dir / "scene_0000.txt");
    const auto file = read_correspondences(in);
    CHECK(file.correspondences.size() == 60);
    CHECK(file.gt_model.has_value());

    const auto e = cli({"eval", "--input", (dir / "scene_0001.txt").string(), "--m", "50"});
    CHECK(e.code == kExitOk);
    CHECK(e.out.find("\"selected_index\"") != std::string::npos);
  }
}
