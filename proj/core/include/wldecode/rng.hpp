#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>
#include <vector>

namespace wld {

// xoshiro256** with splitmix64 seeding.  Every random draw in the project
// flows through this engine so that a run is reproducible from a single
// 64-bit seed regardless of platform or thread count.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next();

  // Uniform in [0, 1).
  double uniform();
  // Uniform in [lo, hi).
  double uniform(double lo, double hi);
  // Standard normal via Box-Muller (pairs cached).
  double normal();
  // Uniform integer in [0, n), unbiased.
  std::uint64_t below(std::uint64_t n);

  // Fisher-Yates shuffle of indices [0, n).
  std::vector<int> permutation(int n);

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  // k distinct indices drawn from [0, n) without replacement, returned in
  // ascending order so downstream consumers keep a stable ordering.
  std::vector<int> sample_without_replacement(int n, int k);

 private:
  std::array<std::uint64_t, 4> s_;
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

std::uint64_t splitmix64(std::uint64_t& state);

// Deterministic seed derivation: a named stream is identified by the base
// seed plus a path of integers (participant, channel, repeat, ...).  Distinct
// paths give statistically independent streams.
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> path);

}  // namespace wld
