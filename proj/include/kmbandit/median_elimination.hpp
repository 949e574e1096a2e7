#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "kmbandit/analysis.hpp"
#include "kmbandit/errors.hpp"
#include "kmbandit/rng.hpp"
#include "kmbandit/selection.hpp"

namespace kmbandit {

struct EliminationResult {
  std::size_t index = 0;  // position in the caller's arm list
  std::uint64_t samples = 0;
  std::size_t phases = 0;
};

// Per-arm sample count of one Median Elimination phase:
// ceil(4 / (eps_l / 2)^2 * ln(3 / delta_l)).
inline std::uint64_t median_elimination_phase_samples(double eps_l, double delta_l) {
  const double half = eps_l / 2.0;
  return detail::ceil_count(4.0 / (half * half) * std::log(3.0 / delta_l));
}

// Median Elimination over `num_arms` arms (Even-Dar, Mannor & Mansour).
// `sample_sum(i, count, rng)` returns the reward sum of `count` fresh pulls of
// arm i. Schedule: eps_1 = eps/4, delta_1 = delta/2; each phase samples every
// survivor, keeps the ceil(half) with the highest phase means (ties uniform),
// then eps *= 3/4, delta /= 2. Returns an (eps, 1)-optimal arm w.p. >= 1 - delta.
template <class SampleSum>
EliminationResult median_elimination(std::size_t num_arms, double eps, double delta,
                                     SampleSum&& sample_sum, RngStream& rng) {
  detail::require(num_arms >= 1, "median elimination needs at least one arm");
  detail::require(eps > 0.0 && eps <= 1.0, "median elimination needs eps in (0, 1]");
  detail::require(delta > 0.0 && delta <= 1.0, "median elimination needs delta in (0, 1]");
  EliminationResult result;
  std::vector<std::size_t> alive(num_arms);
  std::iota(alive.begin(), alive.end(), std::size_t{0});
  std::vector<double> phase_mean(num_arms, 0.0);
  double eps_l = eps / 4.0;
  double delta_l = delta / 2.0;
  while (alive.size() > 1) {
    const std::uint64_t per_arm = median_elimination_phase_samples(eps_l, delta_l);
    for (std::size_t a : alive) {
      phase_mean[a] = sample_sum(a, per_arm, rng) / static_cast<double>(per_arm);
      result.samples += per_arm;
    }
    const std::size_t keep = (alive.size() + 1) / 2;
    detail::rank_descending(std::span<std::size_t>(alive),
                            [&](std::size_t a) { return phase_mean[a]; }, {keep}, rng);
    alive.resize(keep);
    eps_l *= 0.75;
    delta_l /= 2.0;
    ++result.phases;
  }
  result.index = alive.front();
  return result;
}

}  // namespace kmbandit
