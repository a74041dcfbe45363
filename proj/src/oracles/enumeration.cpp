#include "ngsac/oracles.hpp"

#include "ngsac/rng.hpp"

#include <algorithm>
#include <cmath>

namespace ngsac::oracle {

namespace {

std::vector<MinimalSet> ordered_pairs(std::size_t n) {
  std::vector<MinimalSet> out;
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      if (a != b) out.push_back(MinimalSet{{a, b}});
    }
  }
  return out;
}

double set_probability(std::span<const double> w, const MinimalSet& s) {
  return std::exp(exact_set_log_prob(w, s));
}

}  // namespace

double report_loss(const ToyInstance& toy, const EstimateReport<Line2>& report) {
  return line_loss(report.model, toy.gt).value;
}

double pool_loss(const ToyInstance& toy, std::span<const MinimalSet> sets) {
  const std::span<const Vec2> pts(toy.points);
  const auto score = inlier_score(toy.problem);
  HypothesisPool<Line2> pool;
  for (const auto& s : sets) {
    const auto subset = gather(pts, s);
    const Line2 model = toy.problem.solve(std::span<const Vec2>(subset)).front();
    pool.entries.push_back(PoolEntry<Line2>{model, s, score(model, pts), 0.0});
  }
  const EstimatorConfig config{SamplerConfig{sets.size(), 2, 0}, true};
  return report_loss(toy, detail::finalize(pts, std::move(pool), config, toy.problem));
}

ToyInstance make_toy_instance() {
  ToyInstance toy;
  toy.gt = Line2::normalized(-0.1, 1.0, -0.45);  // y = 0.45 + 0.1 x
  // Chosen so every logit coordinate has a large gradient relative to the
  // per-pool spread of the estimator.
  toy.points = {Vec2(0.155, 0.443), Vec2(0.596, 0.496), Vec2(0.41, 0.465),
                Vec2(0.474, 0.132), Vec2(0.278, 0.545), Vec2(0.217, 0.934)};
  toy.problem = line_problem(0.05);
  toy.ordered_sets = ordered_pairs(toy.points.size());
  const std::size_t s = toy.ordered_sets.size();
  toy.pool_loss.assign(s, std::vector<double>(s, 0.0));
  for (std::size_t i = 0; i < s; ++i) {
    for (std::size_t j = 0; j < s; ++j) {
      const MinimalSet sets[2] = {toy.ordered_sets[i], toy.ordered_sets[j]};
      toy.pool_loss[i][j] = pool_loss(toy, sets);
    }
  }
  return toy;
}

std::vector<double> weights_from_logits(std::span<const double> z) {
  std::vector<double> s(z.size());
  double total = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    s[i] = sigmoid(z[i]);
    total += s[i];
  }
  for (auto& v : s) v /= total;
  return s;
}

std::vector<double> logit_gradient(std::span<const double> z, std::span<const double> g) {
  std::vector<double> s(z.size());
  double total = 0.0, g_total = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    s[i] = sigmoid(z[i]);
    total += s[i];
    g_total += g[i];
  }
  std::vector<double> out(z.size());
  for (std::size_t k = 0; k < z.size(); ++k) out[k] = (1.0 - s[k]) * (g[k] - g_total * s[k] / total);
  return out;
}

void for_each_pool(const ToyInstance& toy, std::span<const double> w,
                   const std::function<void(double, double, const std::vector<double>&)>& f) {
  require(toy.m == 2, "toy enumeration is written for M = 2");
  const std::size_t s = toy.ordered_sets.size();
  std::vector<double> p(s);
  std::vector<std::vector<double>> d(s, std::vector<double>(w.size(), 0.0));
  for (std::size_t i = 0; i < s; ++i) {
    p[i] = set_probability(w, toy.ordered_sets[i]);
    accumulate_set_log_prob_gradient(w, toy.ordered_sets[i], 1.0, d[i]);
  }
  std::vector<double> dl(w.size());
  for (std::size_t i = 0; i < s; ++i) {
    for (std::size_t j = 0; j < s; ++j) {
      for (std::size_t c = 0; c < w.size(); ++c) dl[c] = d[i][c] + d[j][c];
      f(p[i] * p[j], toy.pool_loss[i][j], dl);
    }
  }
}

Enumerated enumerate_toy(const ToyInstance& toy, std::span<const double> w, double baseline) {
  Enumerated out;
  out.grad_log_weights.assign(w.size(), 0.0);
  for_each_pool(toy, w, [&](double prob, double loss, const std::vector<double>& dl) {
    out.expected_loss += prob * loss;
    for (std::size_t c = 0; c < w.size(); ++c) out.grad_log_weights[c] += prob * (loss - baseline) * dl[c];
  });
  return out;
}

std::vector<double> central_difference(const std::function<double(std::span<const double>)>& f,
                                       std::vector<double> x, double h) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double x0 = x[i];
    x[i] = x0 + h;
    const double fp = f(x);
    x[i] = x0 - h;
    const double fm = f(x);
    x[i] = x0;
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

double max_relative_error(std::span<const double> a, std::span<const double> b, double floor) {
  require(a.size() == b.size(), "size mismatch");
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double den = std::max({std::abs(a[i]), std::abs(b[i]), floor});
    worst = std::max(worst, std::abs(a[i] - b[i]) / den);
  }
  return worst;
}

namespace {

// Distance of the line loss from its non-smooth points: the robust switch at
// 0.25, the clamp at 1, and the switch between the two columns of the max.
double kink_distance(const Line2& est, const Line2& gt) {
  if (std::abs(est.b) < 1e-12) return 0.0;
  const double d0 = -est.c / est.b + gt.c / gt.b;
  const double d1 = -(est.a + est.c) / est.b + (gt.a + gt.c) / gt.b;
  const double best = std::max(std::abs(d0), std::abs(d1));
  double dist = std::abs(std::abs(d0) - std::abs(d1));
  if (best < 1.0) dist = std::min(dist, std::abs(best - 0.25));
  return std::min({dist, std::abs(best - 1.0), std::abs(best)});
}

}  // namespace

LineToy make_line_toy(std::uint64_t seed) {
  LineSceneConfig sc;
  sc.grid = 16;
  sc.patch = 8;
  sc.n_bright = 24;
  sc.clutter_fraction = 0.25;
  sc.point_noise = 0.5;
  sc.seed = seed;
  LineScene scene = gen_line_scene(sc);
  GuidanceNetSpec spec;
  spec.input_dim = kLineFeatureDim;
  spec.hidden_dim = 6;
  spec.n_blocks = 1;
  spec.heads = HeadMode::PointsAndWeights;
  spec.point_range = line_point_range(sc.grid, sc.patch);
  GuidanceNet net = GuidanceNet::initialize(spec, seed);
  // Give the weight head a non-uniform start.
  CounterRng rng(seed, 7);
  const auto& l = net.layout();
  for (std::size_t i = l.w_weights; i <= l.b_weights; ++i) net.values()[i] = rng.uniform(-0.8, 0.8);
  SoftScoreParams soft;
  soft.tau = 0.1;
  soft.beta = 30.0;
  soft.alpha = 1.0;
  return LineToy{std::move(scene), std::move(net), 2, soft};
}

LineEnumerated enumerate_line_toy(const LineToy& toy, const GuidanceNet& net, bool blockade) {
  require(toy.m == 2, "line toy enumeration is written for M = 2");
  const auto out = forward(net, toy.scene.features, toy.scene.anchors);
  const auto w = out.weights.weights();
  const std::size_t n = w.size();
  const auto sets = ordered_pairs(n);
  std::vector<double> p(sets.size());
  std::vector<std::vector<double>> d(sets.size(), std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < sets.size(); ++i) {
    p[i] = set_probability(w, sets[i]);
    accumulate_set_log_prob_gradient(w, sets[i], 1.0, d[i]);
  }
  LineEnumerated res;
  res.min_distance_to_kink = 1e300;
  std::vector<double> g_logw(n, 0.0);
  std::vector<Vec2> g_points(n, Vec2::Zero());
  for (std::size_t i = 0; i < sets.size(); ++i) {
    for (std::size_t j = 0; j < sets.size(); ++j) {
      const double prob = p[i] * p[j];
      const auto tape = line_pool_tape(out, {sets[i], sets[j]}, toy.soft);
      const auto terms = ng_dsac_pool_terms(tape, toy.scene.gt_line);
      for (const auto& l : tape.lines) {
        res.min_distance_to_kink = std::min(res.min_distance_to_kink, kink_distance(l, toy.scene.gt_line));
      }
      res.expected_loss += prob * terms.expected_loss;
      for (std::size_t c = 0; c < n; ++c) {
        g_logw[c] += prob * terms.expected_loss * (d[i][c] + d[j][c]);
        g_points[c] += prob * terms.grad_points[c];
      }
    }
  }
  res.grad = backward(net, out.cache, g_logw, g_points, blockade);
  return res;
}

}  // namespace ngsac::oracle
