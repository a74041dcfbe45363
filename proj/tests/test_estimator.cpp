#include "ngsac/error.hpp"
#include "ngsac/estimator.hpp"
#include "ngsac/synthdata.hpp"
#include "ngsac/training.hpp"

#include <doctest.h>

#include <algorithm>

using namespace ngsac;

namespace {

struct PointScene {
  std::vector<Vec2> points;
  std::vector<bool> inlier;
  Line2 gt;
};

// Exact inliers on a random non-steep line through the unit square, uniform
// outliers.
PointScene point_scene(std::uint64_t seed, std::size_t n_in, std::size_t n_out) {
  CounterRng rng(seed, 3);
  PointScene s;
  const double y0 = rng.uniform(0.2, 0.8), y1 = rng.uniform(0.2, 0.8);
  s.gt = Line2::normalized(y1 - y0, -1.0, y0);
  for (std::size_t i = 0; i < n_in; ++i) {
    const double x = rng.uniform();
    s.points.emplace_back(x, y0 + (y1 - y0) * x);
    s.inlier.push_back(true);
  }
  for (std::size_t i = 0; i < n_out; ++i) {
    s.points.emplace_back(rng.uniform(), rng.uniform());
    s.inlier.push_back(false);
  }
  return s;
}

EstimatorConfig config(std::size_t m, std::uint64_t seed) {
  EstimatorConfig c;
  c.sampler = SamplerConfig{m, 2, seed, 100};
  return c;
}

constexpr double kTau = 0.01;

// Largest vertical gap at x = 0 and x = 1. A line keeping every inlier inside
// its tau band can sit up to about 2 tau away at the ends.
double deviation(const Line2& est, const Line2& gt) { return line_loss(est, gt).raw; }

}  // namespace

TEST_SUITE("estimator") {
  TEST_CASE("ransac recovers a line at 50% outliers") {
    const auto problem = line_problem(kTau);
    std::size_t ok = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      const auto s = point_scene(seed, 50, 50);
      const auto r = ransac(std::span<const Vec2>(s.points), config(1000, seed), problem);
      ok += deviation(r.model, s.gt) < 2.0 * kTau;
      CHECK(r.selected_index < 1000);
      CHECK(r.hypotheses_drawn == 1000);
    }
    CHECK(ok >= 99);
  }

  TEST_CASE("ransac contracts") {
    const auto problem = line_problem(kTau);
    const auto all_in = point_scene(1, 30, 0);
    for (const std::size_t m : {1u, 5u, 50u}) {
      const auto r = ransac(std::span<const Vec2>(all_in.points), config(m, 2), problem);
      CHECK(r.inlier_indices.size() == 30);
    }
    const std::vector<Vec2> one{{0.5, 0.5}};
    CHECK_THROWS_AS(ransac(std::span<const Vec2>(one), config(10, 0), problem), Error);

    const auto score = inlier_score(problem);
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
      const auto s = point_scene(seed, 20, 60);
      const std::span<const Vec2> obs(s.points);
      const auto pool = sample_pool(obs, nullptr, config(50, seed).sampler, problem, score);
      const auto r = ransac(obs, config(50, seed), problem);
      for (const auto& e : pool.entries) CHECK(r.score >= e.score);
      CHECK(r.score == score(r.pre_refit_model, obs));
      // Refit never loses inliers relative to the selected hypothesis.
      CHECK(r.inlier_indices.size() >= static_cast<std::size_t>(score(r.pre_refit_model, obs)));
    }
  }

  TEST_CASE("ng_ransac with uniform guidance reproduces ransac") {
    const auto problem = line_problem(kTau);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const auto s = point_scene(seed, 20, 30);
      const std::span<const Vec2> obs(s.points);
      const auto a = ransac(obs, config(40, seed), problem);
      const auto b = ng_ransac(obs, GuidanceDistribution::uniform(s.points.size()), config(40, seed), problem);
      CHECK(a.selected_index == b.selected_index);
      CHECK(a.model.coefficients() == b.model.coefficients());
      CHECK(a.inlier_indices == b.inlier_indices);
      REQUIRE(a.minimal_sets.size() == b.minimal_sets.size());
      for (std::size_t j = 0; j < a.minimal_sets.size(); ++j) CHECK(a.minimal_sets[j].indices == b.minimal_sets[j].indices);
    }
  }

  TEST_CASE("oracle guidance succeeds at 85% outliers with M = 10") {
    const auto problem = line_problem(kTau);
    std::size_t ok = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      const auto s = point_scene(100 + seed, 15, 85);
      std::vector<double> w(s.points.size(), 0.0);
      for (std::size_t i = 0; i < w.size(); ++i) w[i] = s.inlier[i] ? 1.0 / 15.0 : 0.0;
      const auto r = ng_ransac(std::span<const Vec2>(s.points), GuidanceDistribution(w), config(10, seed), problem);
      ok += deviation(r.model, s.gt) < 2.0 * kTau;
    }
    CHECK(ok >= 99);

    const auto s = point_scene(1, 5, 5);
    std::vector<double> w(10, 0.0);
    w[4] = 1.0;
    CHECK_THROWS_AS(ng_ransac(std::span<const Vec2>(s.points), GuidanceDistribution(w), config(10, 0), problem), Error);
    try {
      ng_ransac(std::span<const Vec2>(s.points), GuidanceDistribution(w), config(10, 0), problem);
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::InsufficientSupport);
    }
  }

  TEST_CASE("ratio filtered ransac") {
    EpipolarSceneConfig c;
    c.n_correspondences = 200;
    c.outlier_rate = 0.5;
    c.side_info = SideInfo::informative();
    c.seed = 4;
    const auto scene = gen_epipolar_scene(c);
    const auto problem = essential_problem();
    EstimatorConfig cfg;
    cfg.sampler = SamplerConfig{200, 8, 1, 100};
    const auto r = ratio_filtered_ransac(scene.correspondences, 0.8, cfg, problem);
    CHECK(r.warnings.empty());
    for (const auto i : r.inlier_indices) CHECK(*scene.correspondences[i].ratio < 0.8);
    CHECK(angular_pose_error(decompose_essential(r.model, scene.correspondences), scene.gt_pose) < 5.0);

    // Every ratio above the threshold: fall back to the full set.
    auto high = scene.correspondences;
    for (auto& y : high) y.ratio = 0.95;
    const auto f = ratio_filtered_ransac(high, 0.8, cfg, problem);
    CHECK(f.warnings.size() == 1);
    const auto plain = ransac(std::span<const Correspondence>(high), cfg, problem);
    CHECK(f.model.m == plain.model.m);
  }

  TEST_CASE("dsac select") {
    CounterRng rng(5, 0);
    const std::vector<double> eq(10, 1.0);
    std::vector<double> counts(10, 0.0);
    const std::size_t draws = 100000;
    for (std::size_t i = 0; i < draws; ++i) counts[dsac_select(eq, rng)] += 1.0;
    const double sd = std::sqrt(draws * 0.1 * 0.9);
    for (const double c : counts) CHECK(std::abs(c - draws * 0.1) < 4 * sd);

    const std::vector<double> dom{0.0, 1000.0, 0.0};
    for (int i = 0; i < 1000; ++i) CHECK(dsac_select(dom, rng) == 1);
    CHECK(dsac_select(std::vector<double>{3.0}, rng) == 0);
  }

  TEST_CASE("dsac expected loss") {
    CHECK(dsac_expected_loss(std::vector<double>{1.0, 1.0}, std::vector<double>{0.0, 1.0}) == doctest::Approx(0.5));
    CHECK(dsac_expected_loss(std::vector<double>{1000.0, 0.0}, std::vector<double>{0.3, 9.0}) ==
          doctest::Approx(0.3).epsilon(1e-12));
    CounterRng rng(6, 0);
    for (int trial = 0; trial < 200; ++trial) {
      std::vector<double> s(3), l(3);
      for (auto& v : s) v = rng.uniform(-5, 5);
      for (auto& v : l) v = rng.uniform(0, 10);
      long double z = 0, acc = 0;
      for (int j = 0; j < 3; ++j) z += std::exp(static_cast<long double>(s[j]));
      for (int j = 0; j < 3; ++j) acc += std::exp(static_cast<long double>(s[j])) / z * l[j];
      const double got = dsac_expected_loss(s, l);
      CHECK(std::abs(got - static_cast<double>(acc)) < 1e-12);
      CHECK(got >= *std::min_element(l.begin(), l.end()) - 1e-12);
      CHECK(got <= *std::max_element(l.begin(), l.end()) + 1e-12);
    }
  }

  TEST_CASE("adaptive budget") {
    CHECK(adaptive_budget(1.0, 2, 0.99) == 1);
    CHECK(adaptive_budget(0.5, 2, 0.99) == 17);
    CHECK(adaptive_budget(0.0, 2, 0.99, 5000) == 5000);
    CHECK_THROWS_AS(adaptive_budget(0.5, 2, 1.0), Error);
    CHECK_THROWS_AS(adaptive_budget(1.5, 2, 0.9), Error);
  }

  TEST_CASE("median loss does not grow with the budget") {
    const auto problem = line_problem(kTau);
    std::vector<double> small, large;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      const auto s = point_scene(500 + seed, 20, 80);
      small.push_back(deviation(ransac(std::span<const Vec2>(s.points), config(10, seed), problem).model, s.gt));
      large.push_back(deviation(ransac(std::span<const Vec2>(s.points), config(1000, seed), problem).model, s.gt));
    }
    std::nth_element(small.begin(), small.begin() + 50, small.end());
    std::nth_element(large.begin(), large.begin() + 50, large.end());
    CHECK(large[50] <= small[50]);
  }

  TEST_CASE("ng-dsac") {
    const GuidanceNetSpec spec{kLineFeatureDim, 8, 1, HeadMode::PointsAndWeights, 1.5};
    SUBCASE("collinear predictions give zero loss") {
      auto net = GuidanceNet::initialize(spec, 3);
      const auto& lay = net.layout();
      for (std::size_t i = lay.w_points; i < lay.w_points + 2 * spec.hidden_dim; ++i) net.values()[i] = 0.0;
      net.values()[lay.b_points] = net.values()[lay.b_points + 1] = 0.0;
      std::vector<Vec2> anchors;
      for (int i = 0; i < 12; ++i) anchors.emplace_back(i / 11.0, 0.25 + 0.5 * i / 11.0);
      CounterRng rng(1, 0);
      Eigen::MatrixXd feats(12, kLineFeatureDim);
      for (int i = 0; i < feats.size(); ++i) feats.data()[i] = rng.normal();
      NgDsacConfig cfg;
      cfg.pool_size = 8;
      const auto r = ng_dsac_estimate(feats, anchors, net, cfg);
      CHECK(line_loss(r.report.model, Line2::normalized(0.5, -1.0, 0.25)).raw < 1e-12);
    }
    SUBCASE("determinism and smoke") {
      const auto net = GuidanceNet::initialize(spec, 4);
      NgDsacConfig cfg;
      cfg.pool_size = 16;
      for (std::uint64_t seed = 0; seed < 1000; ++seed) {
        LineSceneConfig lc;
        lc.seed = seed;
        const auto scene = gen_line_scene(lc);
        cfg.seed = seed;
        const auto r = ng_dsac_estimate(scene.features, scene.anchors, net, cfg);
        const double loss = line_loss(r.report.model, scene.gt_line).value;
        REQUIRE(std::isfinite(loss));
        for (const double p : r.tape.selection) REQUIRE(std::isfinite(p));
        if (seed < 5) {
          const auto again = ng_dsac_estimate(scene.features, scene.anchors, net, cfg);
          CHECK(again.report.model.coefficients() == r.report.model.coefficients());
          CHECK(again.report.selected_index == r.report.selected_index);
          CHECK(again.tape.selection == r.tape.selection);
        }
      }
    }
  }
}
