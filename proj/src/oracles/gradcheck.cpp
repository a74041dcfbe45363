#include "ngsac/oracles.hpp"

#include "ngsac/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace ngsac::oracle {

namespace {

const std::vector<double> kToyLogits = {-0.1, -1.4, 1.5, -1.0, -0.5, -1.7};

// Central differences carry rounding noise of about eps |f| / h (~1e-11 at
// h = 1e-5). Coordinates whose true gradient is exactly zero (biases feeding
// an instance norm) are compared in absolute terms: with a 1e-4 relative
// tolerance the floor must sit ~1e4 above that noise, and it stays well
// below the gradient's own scale.
double fd_floor(std::span<const double> fd) {
  double scale = 0.0;
  for (const double v : fd) scale = std::max(scale, std::abs(v));
  return std::max(1e-5 * scale, 1e-12);
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

CheckResult result(std::string name, double value, double threshold, bool lower_is_better = true,
                   std::string detail = {}) {
  CheckResult r;
  r.name = std::move(name);
  r.value = value;
  r.threshold = threshold;
  r.passed = lower_is_better ? value <= threshold : value >= threshold;
  r.detail = std::move(detail);
  return r;
}

GuidanceNet random_net(const GuidanceNetSpec& spec, std::uint64_t seed) {
  GuidanceNet net = GuidanceNet::initialize(spec, seed);
  CounterRng rng(seed, 99);
  for (auto& v : net.values()) v += rng.uniform(-0.3, 0.3);
  return net;
}

Eigen::MatrixXd toy_features(const ToyInstance& toy) {
  Eigen::MatrixXd f(static_cast<Eigen::Index>(toy.points.size()), 4);
  for (std::size_t i = 0; i < toy.points.size(); ++i) {
    const auto& p = toy.points[i];
    f.row(static_cast<Eigen::Index>(i)) << p.x(), p.y(), p.x() * p.y(), 1.0 - p.x();
  }
  return f;
}

}  // namespace

CheckResult check_toy_enumeration_vs_fd() {
  const ToyInstance toy = make_toy_instance();
  const auto w = weights_from_logits(kToyLogits);
  const auto exact = logit_gradient(kToyLogits, enumerate_toy(toy, w).grad_log_weights);
  const auto fd = central_difference(
      [&](std::span<const double> z) { return enumerate_toy(toy, weights_from_logits(z)).expected_loss; },
      kToyLogits, 1e-5);
  return result("toy enumeration vs finite differences (logits)", max_relative_error(exact, fd), 1e-5);
}

CheckResult check_toy_enumeration_vs_fd_net() {
  const ToyInstance toy = make_toy_instance();
  GuidanceNetSpec spec;
  spec.hidden_dim = 8;
  spec.n_blocks = 1;
  GuidanceNet net = random_net(spec, 5);
  const Eigen::MatrixXd feats = toy_features(toy);
  auto loss_at = [&](std::span<const double> params) {
    GuidanceNet n(spec, GuidanceNetParams{{params.begin(), params.end()}, kModelFormatVersion});
    const auto out = forward(n, feats);
    const auto w = out.weights.weights();
    return enumerate_toy(toy, std::vector<double>(w.begin(), w.end())).expected_loss;
  };
  const auto out = forward(net, feats);
  const auto w = out.weights.weights();
  const auto e = enumerate_toy(toy, std::vector<double>(w.begin(), w.end()));
  const auto analytic = backward(net, out.cache, e.grad_log_weights);
  const auto fd = central_difference(loss_at, net.values(), 1e-5);
  // Same tolerance as the other backward-pass checks.
  return result("toy enumeration vs finite differences (guidance net)",
                max_relative_error(analytic, fd, fd_floor(fd)), 1e-4);
}

MonteCarloComparison compare_toy_monte_carlo(std::size_t k, std::uint64_t seed) {
  const ToyInstance toy = make_toy_instance();
  const auto w = weights_from_logits(kToyLogits);
  const auto en = enumerate_toy(toy, w);
  MonteCarloComparison out;
  out.exact = logit_gradient(kToyLogits, en.grad_log_weights);
  const auto mc = reinforce_gradient(
      std::span<const Vec2>(toy.points), GuidanceDistribution(w), toy.problem,
      [&](const EstimateReport<Line2>& r) { return report_loss(toy, r); }, k, toy.m, seed);
  out.estimate = logit_gradient(kToyLogits, mc.grad);

  // Spread of a single-pool term, from the exact pool distribution.
  std::vector<double> m1(w.size(), 0.0), m2(w.size(), 0.0);
  for_each_pool(toy, w, [&](double p, double loss, const std::vector<double>& dl) {
    const auto gz = logit_gradient(kToyLogits, dl);
    for (std::size_t c = 0; c < w.size(); ++c) {
      const double v = (loss - en.expected_loss) * gz[c];
      m1[c] += p * v;
      m2[c] += p * v * v;
    }
  });
  double err2 = 0.0, norm2 = 0.0, var = 0.0;
  for (std::size_t c = 0; c < w.size(); ++c) {
    const double sd = std::sqrt(std::max(0.0, m2[c] - m1[c] * m1[c]) / static_cast<double>(k));
    out.predicted_sd.push_back(sd);
    const double e = out.estimate[c] - out.exact[c];
    err2 += e * e;
    norm2 += out.exact[c] * out.exact[c];
    var += sd * sd;
    out.max_coordinate_error = std::max(out.max_coordinate_error, std::abs(e) / std::abs(out.exact[c]));
  }
  out.norm_relative_error = std::sqrt(err2 / norm2);
  out.predicted_norm_error = std::sqrt(var / norm2);
  return out;
}

CheckResult check_toy_monte_carlo(std::size_t k) {
  const auto c = compare_toy_monte_carlo(k, 20240611);
  return result("Monte-Carlo (K=" + std::to_string(k) + ") vs enumeration", c.norm_relative_error, 1e-2, true,
                "expected " + fmt(c.predicted_norm_error) + ", worst coordinate " + fmt(c.max_coordinate_error));
}

CheckResult check_baseline_neutrality() {
  const ToyInstance toy = make_toy_instance();
  const auto w = weights_from_logits(kToyLogits);
  const auto plain = logit_gradient(kToyLogits, enumerate_toy(toy, w, 0.0).grad_log_weights);
  double worst = 0.0;
  for (const double b : {enumerate_toy(toy, w).expected_loss, 0.37, -2.0}) {
    const auto with_b = logit_gradient(kToyLogits, enumerate_toy(toy, w, b).grad_log_weights);
    worst = std::max(worst, max_relative_error(plain, with_b));
  }
  return result("baseline neutrality (enumerated)", worst, 1e-10);
}

CheckResult check_baseline_variance(std::size_t trials, std::size_t repeats) {
  const ToyInstance toy = make_toy_instance();
  const auto w = weights_from_logits(kToyLogits);
  const GuidanceDistribution dist(w);
  const std::span<const Vec2> pts(toy.points);
  auto loss = [&](const EstimateReport<Line2>& r) { return report_loss(toy, r); };
  std::size_t lower = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    double var[2] = {0.0, 0.0};
    for (int mode = 0; mode < 2; ++mode) {
      std::vector<double> s1(w.size(), 0.0), s2(w.size(), 0.0);
      for (std::size_t r = 0; r < repeats; ++r) {
        const auto g = reinforce_gradient(pts, dist, toy.problem, loss, 4, toy.m, derive_seed(t, r),
                                          mode == 0 ? Baseline::BatchMean : Baseline::None);
        const auto gz = logit_gradient(kToyLogits, g.grad);
        for (std::size_t c = 0; c < w.size(); ++c) {
          s1[c] += gz[c];
          s2[c] += gz[c] * gz[c];
        }
      }
      const double n = static_cast<double>(repeats);
      for (std::size_t c = 0; c < w.size(); ++c) var[mode] += (s2[c] - s1[c] * s1[c] / n) / (n - 1.0);
    }
    lower += var[0] < var[1];
  }
  return result("baseline lowers estimator variance (trials)", static_cast<double>(lower),
                0.95 * static_cast<double>(trials), false,
                std::to_string(lower) + " of " + std::to_string(trials));
}

CheckResult check_ng_dsac_fd() {
  const LineToy toy = make_line_toy(3);
  const auto e = enumerate_line_toy(toy, toy.net, false);
  const auto spec = toy.net.spec();
  const auto fd = central_difference(
      [&](std::span<const double> params) {
        GuidanceNet n(spec, GuidanceNetParams{{params.begin(), params.end()}, kModelFormatVersion});
        return enumerate_line_toy(toy, n, false).expected_loss;
      },
      toy.net.values(), 1e-5);
  return result("NG-DSAC analytic vs finite differences (4 patches, M=2)",
                max_relative_error(e.grad, fd, fd_floor(fd)), 1e-4, true,
                "distance of hypothesis losses to loss kinks " + fmt(e.min_distance_to_kink));
}

CheckResult check_guidance_backward_fd(std::size_t configs) {
  double worst = 0.0;
  std::string worst_detail;
  for (std::size_t c = 0; c < configs; ++c) {
    CounterRng rng(c, 31);
    GuidanceNetSpec spec;
    spec.input_dim = 3 + rng.uniform_index(3);
    spec.hidden_dim = 3 + rng.uniform_index(4);
    spec.n_blocks = rng.uniform_index(3);
    spec.heads = c % 2 ? HeadMode::PointsAndWeights : HeadMode::WeightsOnly;
    const std::size_t n = 3 + rng.uniform_index(4);
    GuidanceNet net = random_net(spec, 1000 + c);
    Eigen::MatrixXd feats(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(spec.input_dim));
    for (Eigen::Index i = 0; i < feats.size(); ++i) feats.data()[i] = rng.normal();
    std::vector<Vec2> anchors(n), gp;
    std::vector<double> g(n);
    for (std::size_t i = 0; i < n; ++i) {
      anchors[i] = Vec2(rng.uniform(), rng.uniform());
      g[i] = rng.normal();
    }
    if (spec.heads == HeadMode::PointsAndWeights) {
      for (std::size_t i = 0; i < n; ++i) gp.emplace_back(rng.normal(), rng.normal());
    }
    auto objective = [&](std::span<const double> params) {
      GuidanceNet m(spec, GuidanceNetParams{{params.begin(), params.end()}, kModelFormatVersion});
      const auto out = forward(m, feats, anchors);
      double f = 0.0;
      for (std::size_t i = 0; i < n; ++i) f += g[i] * out.log_weights[i];
      for (std::size_t i = 0; i < gp.size(); ++i) f += gp[i].dot(out.points[i]);
      return f;
    };
    const auto out = forward(net, feats, anchors);
    const auto analytic = backward(net, out.cache, g, gp, false);
    const auto fd = central_difference(objective, net.values(), 1e-5);
    const double err = max_relative_error(analytic, fd, fd_floor(fd));
    if (err > worst) {
      worst = err;
      double kink = 1e300;
      for (const auto& b : out.cache.blocks) {
        kink = std::min({kink, b.norm1.cwiseAbs().minCoeff(), b.norm2.cwiseAbs().minCoeff()});
      }
      worst_detail = "worst config " + std::to_string(c) + ", min |relu input| " + fmt(kink);
    }
  }
  return result("guidance backward vs finite differences (" + std::to_string(configs) + " configs)", worst,
                1e-4, true, worst_detail);
}

CheckResult check_instance_norm_fd() {
  CounterRng rng(17, 0);
  Eigen::MatrixXd x(3, 5), gy(3, 5);
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    x.data()[i] = rng.normal();
    gy.data()[i] = rng.normal();
  }
  const auto n = instance_norm(x);
  const Eigen::MatrixXd dx = instance_norm_backward(n.out, n.inv_std, gy);
  std::vector<double> flat(x.data(), x.data() + x.size());
  const auto fd = central_difference(
      [&](std::span<const double> v) {
        const Eigen::MatrixXd xm = Eigen::Map<const Eigen::MatrixXd>(v.data(), 3, 5);
        return instance_norm(xm).out.cwiseProduct(gy).sum();
      },
      flat, 1e-5);
  std::vector<double> an(dx.data(), dx.data() + dx.size());
  return result("instance norm backward vs finite differences", max_relative_error(an, fd, 1e-9), 1e-4);
}

std::vector<CheckResult> run_gradcheck_suite(bool quick) {
  std::vector<CheckResult> out;
  out.push_back(check_instance_norm_fd());
  out.push_back(check_guidance_backward_fd(quick ? 20 : 100));
  out.push_back(check_toy_enumeration_vs_fd());
  out.push_back(check_toy_enumeration_vs_fd_net());
  out.push_back(check_baseline_neutrality());
  out.push_back(check_toy_monte_carlo(quick ? 200000 : 200000));
  out.push_back(check_baseline_variance(quick ? 20 : 100, quick ? 100 : 200));
  out.push_back(check_ng_dsac_fd());
  return out;
}

}  // namespace ngsac::oracle
