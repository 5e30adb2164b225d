#pragma once

#include <cstdint>

namespace sort3lab {

// Repo-wide deterministic generator (splitmix64).  The state advances by the
// odd constant 0x9E3779B97F4A7C15 and the output is finalized by two
// multiply-xor-shift rounds.  Specified bit-exactly so that workloads and
// random test domains reproduce across implementations:
//
//   state += 0x9E3779B97F4A7C15
//   z = state
//   z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//   z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//   return z ^ (z >> 31)
//
// Bounded draws use plain modulo: next() % n.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  std::uint64_t bounded(std::uint64_t n) { return next() % n; }

  std::int32_t next_i32() { return static_cast<std::int32_t>(next()); }

 private:
  std::uint64_t state_;
};

}  // namespace sort3lab
