#pragma once

#include <cstdint>
#include <initializer_list>

namespace capforge {

// SplitMix64 finalizer. Bijective on 64-bit words.
std::uint64_t mix64(std::uint64_t x) noexcept;

// Folds a list of words into one key; order-sensitive.
std::uint64_t derive_key(std::initializer_list<std::uint64_t> parts) noexcept;

// Counter-based generator: the n-th output is a pure function of (key, n),
// so independent streams can be derived for any (seed, shard, record) tuple
// without sharing state between threads. Distributions are implemented
// here rather than taken from <random> so outputs are identical across
// standard library implementations.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t key) noexcept;
  CounterRng(std::uint64_t seed, std::uint64_t stream, std::uint64_t tag) noexcept;

  std::uint64_t next_u64() noexcept;
  // Uniform in [0, 1).
  double uniform() noexcept;
  // Uniform in (0, 1).
  double uniform_open() noexcept;
  // Uniform integer in [0, n); n must be > 0.
  std::uint64_t below(std::uint64_t n) noexcept;
  // Standard normal via Box-Muller (second variate discarded).
  double normal() noexcept;

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace capforge
