#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>

namespace ngsac {

/// Counter-based generator: output i of stream s under key k is
/// splitmix64-finalize(k ^ mix(s) + i * golden). The whole state is three
/// integers, so it serializes trivially and two generators built from the same
/// (key, stream) pair produce identical sequences on every platform.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  struct State {
    std::uint64_t key = 0;
    std::uint64_t stream = 0;
    std::uint64_t counter = 0;
    bool operator==(const State&) const = default;
  };

  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0) : state_{seed, stream, 0} {}
  explicit CounterRng(State state) : state_(state) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() { return next_u64(); }
  std::uint64_t next_u64();

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n), unbiased (rejection on the top range).
  std::size_t uniform_index(std::size_t n);
  /// Standard normal via Box-Muller; consumes two draws per call.
  double normal();

  State state() const { return state_; }

 private:
  State state_;
};

/// Stateless 64-bit mixer shared by the generator and seed derivation.
std::uint64_t mix64(std::uint64_t x);

/// Deterministic child seed for sub-streams (pool k of an example, cell i of a
/// sweep, ...).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0);

}  // namespace ngsac
