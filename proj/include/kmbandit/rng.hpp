#pragma once

#include <cstdint>
#include <random>

namespace kmbandit {

// SplitMix64 finaliser (Steele, Lea & Flood). Used to turn consecutive run
// seeds into decorrelated engine seeds and to derive child streams.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// Seeded random stream owned by a single algorithm run.
//
// Engine: std::mt19937_64 seeded with splitmix64(seed). Consumption contract:
//   - uniform01() and every single Bernoulli pull take exactly one 64-bit draw;
//   - split() takes one draw from the parent;
//   - batched pulls (binomial) and tie-breaking shuffles consume a variable
//     but deterministic number of draws.
// Two streams built from the same seed produce identical sequences.
class RngStream {
 public:
  using result_type = std::uint64_t;

  explicit RngStream(std::uint64_t seed) : seed_(seed), engine_(splitmix64(seed)) {}

  static constexpr result_type min() { return std::mt19937_64::min(); }
  static constexpr result_type max() { return std::mt19937_64::max(); }

  result_type operator()() { return engine_(); }

  std::uint64_t seed() const noexcept { return seed_; }

  // Uniform on [0, 1) with 53 bits of resolution.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform on {0, ..., n - 1}; n must be positive.
  std::uint64_t below(std::uint64_t n) {
    return std::uniform_int_distribution<std::uint64_t>(0, n - 1)(engine_);
  }

  // Independent child stream; its seed is a mix of one parent draw.
  RngStream split() { return RngStream(splitmix64(engine_() ^ 0xD1B54A32D192ED03ull)); }

  friend bool operator==(const RngStream& a, const RngStream& b) {
    return a.seed_ == b.seed_ && a.engine_ == b.engine_;
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace kmbandit
