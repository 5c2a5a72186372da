#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace seasonmatch {

// Deterministic random source. std::mt19937_64 has a standardized bit
// stream, but the std distributions do not, so sampling is done with our
// own fixed mappings. Identical seeds give identical draws on every
// platform and compiler.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Unbiased integer in [0, n) via rejection.
  std::uint64_t uniform_u64(std::uint64_t n);

  int uniform_int(int n) { return static_cast<int>(uniform_u64(static_cast<std::uint64_t>(n))); }

  // [0, 1) with 53 random bits.
  double uniform();

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller (one value per call).
  double normal();

 private:
  std::mt19937_64 gen_;
};

// splitmix64 mixing step; used to derive stage- and item-specific seeds
// from one run seed without correlated streams.
std::uint64_t splitmix64(std::uint64_t x);

// Seed derived from (seed, tag) where tag names the consumer, e.g.
// derive_seed(seed, "head-init"). Stable across runs.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag);
std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag, std::uint64_t n);

}  // namespace seasonmatch
