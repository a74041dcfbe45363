#include "ngsac/rng.hpp"

#include <cmath>
#include <numbers>

namespace ngsac {

namespace {
constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
}

std::uint64_t mix64(std::uint64_t x) {
  x ^= x >> 30;
  x *= 0xBF58476D1CE4E5B9ULL;
  x ^= x >> 27;
  x *= 0x94D049BB133111EBULL;
  x ^= x >> 31;
  return x;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  return mix64(mix64(seed ^ mix64(a + kGolden)) + b * kGolden + 0x632BE59BD9B4E019ULL);
}

std::uint64_t CounterRng::next_u64() {
  const std::uint64_t base = state_.key ^ mix64(state_.stream + 0xD1B54A32D192ED03ULL);
  return mix64(base + (state_.counter++ + 1) * kGolden);
}

double CounterRng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::size_t CounterRng::uniform_index(std::size_t n) {
  const std::uint64_t bound = static_cast<std::uint64_t>(n);
  const std::uint64_t limit = max() - (max() % bound + 1) % bound;
  std::uint64_t r = next_u64();
  while (r > limit) r = next_u64();
  return static_cast<std::size_t>(r % bound);
}

double CounterRng::normal() {
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace ngsac
