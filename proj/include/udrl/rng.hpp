#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace udrl {

// Seeded random source. All draws are derived from the raw 64-bit engine
// output with our own transforms so that sequences do not depend on the
// standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0);
  // Independent stream for (seed, stream) pairs, e.g. one per evaluation run.
  Rng(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1) with 53 bits of precision.
  double uniform();
  double uniform(double lo, double hi);
  // Uniform over {0, ..., n - 1}; n must be positive.
  std::size_t uniform_index(std::size_t n);
  double normal();

  // Index drawn from a categorical distribution; probs need not be
  // normalized exactly but must be nonnegative with a positive sum.
  std::size_t categorical(std::span<const double> probs);

  // Uniformly random permutation of 0..n-1 (Fisher-Yates).
  std::vector<std::size_t> permutation(std::size_t n);

  std::string serialize() const;
  static Rng deserialize(const std::string& state);

  friend bool operator==(const Rng& a, const Rng& b) { return a.engine_ == b.engine_; }

 private:
  std::mt19937_64 engine_;
};

// SplitMix64 finalizer, used to derive well-separated seeds.
std::uint64_t mix_seed(std::uint64_t x);

}  // namespace udrl
