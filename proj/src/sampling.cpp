#include "ngsac/sampling.hpp"

#include <algorithm>
#include <numeric>

namespace ngsac {

GuidanceDistribution::GuidanceDistribution(std::vector<double> weights) : weights_(std::move(weights)) {
  double total = 0.0;
  for (const double w : weights_) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw Error(ErrorCode::PreconditionViolation, "guidance weights must be finite and >= 0");
    }
    total += w;
  }
  if (weights_.empty() || std::abs(total - 1.0) > 1e-9) {
    throw Error(ErrorCode::PreconditionViolation, "guidance weights must sum to 1");
  }
  cdf_.resize(weights_.size());
  double acc = 0.0;
  uniform_ = true;
  for (std::size_t i = 0; i < weights_.size(); ++i) {
    acc += weights_[i];
    cdf_[i] = acc;
    if (weights_[i] > 0.0) ++support_;
    if (weights_[i] != weights_[0]) uniform_ = false;
  }
}

GuidanceDistribution GuidanceDistribution::uniform(std::size_t n) {
  require(n > 0, "uniform distribution needs n > 0");
  return GuidanceDistribution(std::vector<double>(n, 1.0 / static_cast<double>(n)));
}

GuidanceDistribution GuidanceDistribution::from_unnormalized(std::span<const double> scores) {
  double total = 0.0;
  for (const double s : scores) total += s;
  if (!(total > 0.0)) throw Error(ErrorCode::InsufficientSupport, "all guidance scores vanish");
  std::vector<double> w(scores.begin(), scores.end());
  for (auto& v : w) v /= total;
  return GuidanceDistribution(std::move(w));
}

std::size_t GuidanceDistribution::draw(CounterRng& rng) const {
  if (uniform_) return rng.uniform_index(weights_.size());
  const double target = rng.uniform() * cdf_.back();
  auto it = std::upper_bound(cdf_.begin(), cdf_.end(), target);
  std::size_t i = it == cdf_.end() ? weights_.size() - 1 : static_cast<std::size_t>(it - cdf_.begin());
  while (weights_[i] == 0.0 && i > 0) --i;
  return i;
}

namespace {

template <class DrawOne>
MinimalSet draw_distinct(std::size_t n, std::size_t max_attempts, DrawOne&& draw_one) {
  MinimalSet set;
  set.indices.reserve(n);
  std::size_t rejections = 0;
  while (set.indices.size() < n) {
    const std::size_t idx = draw_one();
    if (std::find(set.indices.begin(), set.indices.end(), idx) != set.indices.end()) {
      if (++rejections >= max_attempts) {
        throw Error(ErrorCode::ResampleBudgetExceeded, "too many duplicate draws in a row");
      }
      continue;
    }
    rejections = 0;
    set.indices.push_back(idx);
  }
  return set;
}

}  // namespace

MinimalSet sample_minimal_set_uniform(std::size_t n_observations, std::size_t n, CounterRng& rng,
                                      std::size_t max_resample_attempts) {
  require(n >= 1 && n <= n_observations, "minimal set larger than the observation set");
  return draw_distinct(n, max_resample_attempts, [&] { return rng.uniform_index(n_observations); });
}

MinimalSet sample_minimal_set_guided(const GuidanceDistribution& dist, std::size_t n,
                                     CounterRng& rng, std::size_t max_resample_attempts) {
  require(n >= 1, "minimal set size must be positive");
  if (dist.support_size() < n) {
    throw Error(ErrorCode::InsufficientSupport, "fewer observations with nonzero weight than N");
  }
  return draw_distinct(n, max_resample_attempts, [&] { return dist.draw(rng); });
}

double independent_log_prob(const GuidanceDistribution& dist, const MinimalSet& set) {
  double lp = 0.0;
  for (const auto i : set.indices) lp += std::log(dist[i]);
  return lp;
}

namespace {

double binomial(std::size_t n, std::size_t k) {
  if (k > n) return 0.0;
  double r = 1.0;
  for (std::size_t i = 1; i <= k; ++i) {
    r *= static_cast<double>(n - k + i) / static_cast<double>(i);
  }
  return std::round(r);
}

}  // namespace

ProgressiveSampler::ProgressiveSampler(std::span<const double> priorities, std::size_t n,
                                       double growth_rate, std::uint64_t seed)
    : n_(n),
      growth_(static_cast<std::size_t>(std::max(1.0, std::ceil(growth_rate)))),
      prefix_(n),
      rng_(seed, 0x50524F53ULL) {
  require(n >= 1 && n <= priorities.size(), "progressive sampler needs N <= n");
  for (const double p : priorities) require(std::isfinite(p), "priorities must be finite");
  order_.resize(priorities.size());
  std::iota(order_.begin(), order_.end(), std::size_t{0});
  std::stable_sort(order_.begin(), order_.end(),
                   [&](std::size_t a, std::size_t b) { return priorities[a] > priorities[b]; });
}

bool ProgressiveSampler::prefix_exhausted() const {
  return static_cast<double>(emitted_.size()) >= binomial(prefix_, n_);
}

MinimalSet ProgressiveSampler::next() {
  const bool started = !emitted_.empty() || draws_in_prefix_ > 0;
  if (started && prefix_ < order_.size() && (draws_in_prefix_ >= growth_ || prefix_exhausted())) {
    ++prefix_;
    draws_in_prefix_ = 0;
  }
  const bool allow_repeat = prefix_exhausted();
  std::vector<std::size_t> positions;
  for (int attempt = 0; attempt < 10000; ++attempt) {
    positions.clear();
    while (positions.size() < n_) {
      const std::size_t pos = rng_.uniform_index(prefix_);
      if (std::find(positions.begin(), positions.end(), pos) == positions.end()) {
        positions.push_back(pos);
      }
    }
    std::sort(positions.begin(), positions.end());
    if (allow_repeat || !emitted_.contains(positions)) break;
  }
  emitted_.insert(positions);
  ++draws_in_prefix_;
  MinimalSet set;
  for (const auto pos : positions) set.indices.push_back(order_[pos]);
  return set;
}

double default_growth_rate(std::size_t budget, std::size_t n_observations, std::size_t n) {
  const std::size_t steps = n_observations > n ? n_observations - n : 1;
  return std::max(1.0, static_cast<double>(budget) / static_cast<double>(steps));
}

std::vector<MinimalSet> progressive_sampler(std::span<const double> priorities,
                                            const SamplerConfig& config, double growth_rate,
                                            std::size_t count) {
  ProgressiveSampler sampler(priorities, config.minimal_set_size, growth_rate, config.seed);
  std::vector<MinimalSet> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(sampler.next());
  return out;
}

RatioFilterResult ratio_filter(std::span<const Correspondence> correspondences, double threshold) {
  RatioFilterResult out;
  for (std::size_t i = 0; i < correspondences.size(); ++i) {
    const auto& c = correspondences[i];
    require(c.ratio.has_value(), "ratio filter needs a ratio on every correspondence");
    if (*c.ratio < threshold) {
      out.kept.push_back(c);
      out.kept_indices.push_back(i);
    }
  }
  return out;
}

}  // namespace ngsac
