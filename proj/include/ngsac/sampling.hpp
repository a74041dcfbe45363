#pragma once

#include "ngsac/error.hpp"
#include "ngsac/geometry.hpp"
#include "ngsac/problem.hpp"
#include "ngsac/rng.hpp"
#include "ngsac/solvers.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <set>
#include <span>
#include <vector>

namespace ngsac {

/// Categorical distribution p(y; w) over an observation set.
class GuidanceDistribution {
 public:
  GuidanceDistribution() = default;
  /// Validates non-negativity and unit sum (1e-9).
  explicit GuidanceDistribution(std::vector<double> weights);
  static GuidanceDistribution uniform(std::size_t n);
  /// Normalizes non-negative scores; throws InsufficientSupport if all vanish.
  static GuidanceDistribution from_unnormalized(std::span<const double> scores);

  std::size_t size() const { return weights_.size(); }
  std::span<const double> weights() const { return weights_; }
  double operator[](std::size_t i) const { return weights_[i]; }
  /// True when every weight is bitwise identical; sampling then uses the
  /// uniform index path so that guided and plain RANSAC share RNG streams.
  bool is_uniform() const { return uniform_; }
  std::size_t support_size() const { return support_; }

  /// One categorical draw by inverse CDF.
  std::size_t draw(CounterRng& rng) const;

 private:
  std::vector<double> weights_;
  std::vector<double> cdf_;
  bool uniform_ = false;
  std::size_t support_ = 0;
};

struct SamplerConfig {
  std::size_t pool_size = 1;         // M
  std::size_t minimal_set_size = 2;  // N
  std::uint64_t seed = 0;
  std::size_t max_resample_attempts = 100;
};

/// N distinct indices, every unordered subset equally likely.
MinimalSet sample_minimal_set_uniform(std::size_t n_observations, std::size_t n, CounterRng& rng,
                                      std::size_t max_resample_attempts = 100);

/// N distinct indices drawn one at a time from dist; a draw that repeats an
/// index already in the set is rejected and redrawn.
MinimalSet sample_minimal_set_guided(const GuidanceDistribution& dist, std::size_t n,
                                     CounterRng& rng, std::size_t max_resample_attempts = 100);

/// Sum of log weights of the drawn indices (the independent-draw model).
double independent_log_prob(const GuidanceDistribution& dist, const MinimalSet& set);

template <class Model>
struct PoolEntry {
  Model model;
  MinimalSet minimal_set;
  double score = 0.0;
  double log_prob = 0.0;
};

template <class Model>
struct HypothesisPool {
  std::vector<PoolEntry<Model>> entries;
  std::size_t size() const { return entries.size(); }
  std::vector<double> scores() const {
    std::vector<double> s;
    s.reserve(entries.size());
    for (const auto& e : entries) s.push_back(e.score);
    return s;
  }
};

template <class Obs>
std::vector<Obs> gather(std::span<const Obs> observations, const MinimalSet& set) {
  std::vector<Obs> out;
  out.reserve(set.indices.size());
  for (const auto i : set.indices) out.push_back(observations[i]);
  return out;
}

/// Source of minimal sets for a pool: uniform or guided by a distribution.
struct SetSampler {
  const GuidanceDistribution* dist = nullptr;
  std::size_t n_observations = 0;

  MinimalSet operator()(std::size_t n, CounterRng& rng, std::size_t attempts) const {
    return dist ? sample_minimal_set_guided(*dist, n, rng, attempts)
                : sample_minimal_set_uniform(n_observations, n, rng, attempts);
  }
};

/// Builds a hypothesis from a freshly drawn minimal set, redrawing when the
/// solver rejects the set. Multi-solution solvers keep the best-scoring
/// candidate.
template <class Obs, class Model, class Draw>
PoolEntry<Model> draw_hypothesis(std::span<const Obs> observations, const Draw& draw,
                                 const SamplerConfig& config, const Problem<Obs, Model>& problem,
                                 const ScoreFn<Obs, Model>& score, CounterRng& rng,
                                 const GuidanceDistribution* dist) {
  std::size_t failures = 0;
  while (true) {
    MinimalSet set = draw(rng);
    const auto subset = gather(observations, set);
    std::vector<Model> candidates;
    try {
      candidates = problem.solve(std::span<const Obs>(subset));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::DegenerateMinimalSet && e.code() != ErrorCode::RankDeficient) throw;
    }
    if (candidates.empty()) {
      if (++failures >= config.max_resample_attempts) {
        throw Error(ErrorCode::ResampleBudgetExceeded, "too many degenerate minimal sets");
      }
      continue;
    }
    PoolEntry<Model> entry{candidates.front(), set, -std::numeric_limits<double>::infinity(), 0.0};
    for (const auto& m : candidates) {
      const double s = score(m, observations);
      if (s > entry.score) {
        entry.score = s;
        entry.model = m;
      }
    }
    if (dist) {
      entry.log_prob = independent_log_prob(*dist, set);
    } else {
      const double w = 1.0 / static_cast<double>(observations.size());
      for (std::size_t k = 0; k < set.indices.size(); ++k) entry.log_prob += std::log(w);
    }
    return entry;
  }
}

/// Samples M hypotheses. Hypothesis j draws from its own stream
/// CounterRng(config.seed, j), so pools are reproducible and can be built in
/// any order.
template <class Obs, class Model>
HypothesisPool<Model> sample_pool(std::span<const Obs> observations,
                                  const GuidanceDistribution* dist, const SamplerConfig& config,
                                  const Problem<Obs, Model>& problem,
                                  const ScoreFn<Obs, Model>& score) {
  require(config.pool_size >= 1 && config.minimal_set_size >= 1, "pool needs M >= 1 and N >= 1");
  require(config.minimal_set_size == problem.minimal_size, "sampler N must match the solver");
  require(observations.size() >= config.minimal_set_size, "not enough observations for N");
  require(!dist || dist->size() == observations.size(), "distribution size mismatch");
  const SetSampler sampler{dist, observations.size()};
  HypothesisPool<Model> pool;
  pool.entries.reserve(config.pool_size);
  for (std::size_t j = 0; j < config.pool_size; ++j) {
    CounterRng rng(config.seed, j);
    auto draw = [&](CounterRng& r) {
      return sampler(config.minimal_set_size, r, config.max_resample_attempts);
    };
    pool.entries.push_back(draw_hypothesis(observations, draw, config, problem, score, rng, dist));
  }
  return pool;
}

/// PROSAC-style comparator: minimal sets come from a prefix of the
/// priority-sorted observations that starts at N and grows by one after every
/// ceil(growth_rate) draws, or as soon as all its subsets have been emitted.
class ProgressiveSampler {
 public:
  ProgressiveSampler(std::span<const double> priorities, std::size_t n, double growth_rate,
                     std::uint64_t seed);

  MinimalSet next();
  std::size_t prefix_size() const { return prefix_; }
  /// Observation indices sorted by decreasing priority, ties by index.
  const std::vector<std::size_t>& order() const { return order_; }

 private:
  bool prefix_exhausted() const;

  std::vector<std::size_t> order_;
  std::size_t n_;
  std::size_t growth_;
  std::size_t prefix_;
  std::size_t draws_in_prefix_ = 0;
  std::size_t emitted_in_prefix_ = 0;
  std::set<std::vector<std::size_t>> emitted_;
  CounterRng rng_;
};

/// Default growth: spread the budget M evenly over the prefix sizes N..n.
double default_growth_rate(std::size_t budget, std::size_t n_observations, std::size_t n);

std::vector<MinimalSet> progressive_sampler(std::span<const double> priorities,
                                            const SamplerConfig& config, double growth_rate,
                                            std::size_t count);

struct RatioFilterResult {
  std::vector<Correspondence> kept;
  std::vector<std::size_t> kept_indices;
};

/// Keeps correspondences with ratio < threshold, order preserved.
RatioFilterResult ratio_filter(std::span<const Correspondence> correspondences, double threshold);

}  // namespace ngsac
