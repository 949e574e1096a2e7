#pragma once

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "kmbandit/bandit.hpp"
#include "kmbandit/errors.hpp"
#include "kmbandit/rng.hpp"

namespace kmbandit {

// Identity of an arm drawn from a reservoir. Discrete arms use their table
// index as id; continuous arms get a 64-bit tag drawn from the stream, so two
// draws are distinct with overwhelming probability.
struct ArmHandle {
  std::uint64_t id = 0;
  double mean = 0.0;

  friend bool operator==(const ArmHandle& a, const ArmHandle& b) { return a.id == b.id; }
  friend auto operator<=>(const ArmHandle& a, const ArmHandle& b) { return a.id <=> b.id; }
};

// Mean-generating law for continuous reservoirs: a mixture of uniforms on
// consecutive bins [edges[i], edges[i+1]) with the given weights.
class PiecewiseUniformLaw {
 public:
  PiecewiseUniformLaw(std::vector<double> edges, std::vector<double> weights)
      : edges_(std::move(edges)), weights_(std::move(weights)) {
    detail::require(edges_.size() >= 2, "piecewise law needs at least two edges");
    detail::require(weights_.size() + 1 == edges_.size(),
                    "piecewise law needs one weight per bin");
    detail::require(edges_.front() >= 0.0 && edges_.back() <= 1.0,
                    "piecewise law edges must lie in [0, 1]");
    for (std::size_t i = 0; i + 1 < edges_.size(); ++i) {
      detail::require(edges_[i] < edges_[i + 1], "piecewise law edges must be increasing");
    }
    double total = 0.0;
    for (double w : weights_) {
      detail::require(w >= 0.0, "piecewise law weights must be nonnegative");
      total += w;
    }
    detail::require(std::abs(total - 1.0) <= 1e-12, "piecewise law weights must sum to 1");
    cumulative_.resize(weights_.size());
    std::partial_sum(weights_.begin(), weights_.end(), cumulative_.begin());
  }

  static PiecewiseUniformLaw uniform() { return PiecewiseUniformLaw({0.0, 1.0}, {1.0}); }

  const std::vector<double>& edges() const noexcept { return edges_; }
  const std::vector<double>& weights() const noexcept { return weights_; }

  double sample(RngStream& rng) const {
    const double u = rng.uniform01() * cumulative_.back();
    std::size_t bin = static_cast<std::size_t>(
        std::upper_bound(cumulative_.begin(), cumulative_.end(), u) - cumulative_.begin());
    bin = std::min(bin, weights_.size() - 1);
    while (weights_[bin] <= 0.0 && bin > 0) --bin;
    const double lo = edges_[bin];
    const double hi = edges_[bin + 1];
    return lo + rng.uniform01() * (hi - lo);
  }

  // Smallest x with P(mean > x) <= rho.
  double upper_quantile(double rho) const {
    double above = 0.0;
    for (std::size_t i = weights_.size(); i-- > 0;) {
      const double w = weights_[i];
      if (w <= 0.0) continue;
      if (above + w >= rho) {
        const double frac = (rho - above) / w;
        return edges_[i + 1] - frac * (edges_[i + 1] - edges_[i]);
      }
      above += w;
    }
    for (std::size_t i = 0; i < weights_.size(); ++i) {
      if (weights_[i] > 0.0) return edges_[i];
    }
    return edges_.front();
  }

 private:
  std::vector<double> edges_;
  std::vector<double> weights_;
  std::vector<double> cumulative_;
};

// Immutable arm population accessed by i.i.d. draws. Discrete mode carries a
// finite table of (mean, probability); continuous mode draws each arm's mean
// from a PiecewiseUniformLaw. Every drawn arm has Bernoulli rewards.
class ArmReservoir {
 public:
  enum class Mode { discrete, continuous };

  static ArmReservoir discrete(std::vector<double> means, std::vector<double> probs) {
    detail::require(!means.empty(), "discrete reservoir needs at least one arm");
    detail::require(means.size() == probs.size(),
                    "discrete reservoir needs one probability per arm");
    double total = 0.0;
    for (std::size_t i = 0; i < means.size(); ++i) {
      detail::require(means[i] >= 0.0 && means[i] <= 1.0, "arm means must lie in [0, 1]");
      detail::require(probs[i] >= 0.0, "arm probabilities must be nonnegative");
      total += probs[i];
    }
    detail::require(std::abs(total - 1.0) <= 1e-12, "arm probabilities must sum to 1");
    ArmReservoir r(Mode::discrete);
    r.means_ = std::move(means);
    r.probs_ = std::move(probs);
    r.cumulative_.resize(r.probs_.size());
    std::partial_sum(r.probs_.begin(), r.probs_.end(), r.cumulative_.begin());
    return r;
  }

  static ArmReservoir continuous(PiecewiseUniformLaw law) {
    ArmReservoir r(Mode::continuous);
    r.law_ = std::move(law);
    return r;
  }

  static ArmReservoir uniform_means() { return continuous(PiecewiseUniformLaw::uniform()); }

  // Uniform draw over the arms of a finite instance (probability 1/n each).
  static ArmReservoir uniform_over(const FiniteBandit& instance) {
    const std::size_t n = instance.size();
    detail::require(n >= 1, "cannot embed an empty instance");
    std::vector<double> probs(n, 1.0 / static_cast<double>(n));
    double total = std::accumulate(probs.begin(), probs.end(), 0.0);
    probs.back() += 1.0 - total;
    return discrete(instance.means(), std::move(probs));
  }

  Mode mode() const noexcept { return mode_; }
  bool is_discrete() const noexcept { return mode_ == Mode::discrete; }

  // Discrete-mode accessors.
  std::size_t size() const noexcept { return means_.size(); }
  const std::vector<double>& means() const noexcept { return means_; }
  const std::vector<double>& probs() const noexcept { return probs_; }
  // Continuous-mode accessor.
  const PiecewiseUniformLaw& law() const noexcept { return law_; }

  ArmHandle handle(std::size_t id) const {
    detail::require(is_discrete() && id < means_.size(), "no discrete arm with that id");
    return ArmHandle{static_cast<std::uint64_t>(id), means_[id]};
  }

  double sample_reward(const ArmHandle& arm, RngStream& rng) const {
    return BernoulliArm(arm.mean).sample(rng);
  }

  double sample_sum(const ArmHandle& arm, std::uint64_t count, RngStream& rng) const {
    return BernoulliArm(arm.mean).sample_sum(count, rng);
  }

  // The (1 - rho) quantile used by the [eps, rho]-optimality test: an arm is
  // optimal iff mean >= q - eps, where the P_A-mass strictly above q is below
  // rho (up to kMassTolerance) and the mass at or above q reaches rho. On the
  // two-point law {0.9 w.p. 0.2, 0.1 w.p. 0.8} with rho = 0.2 this gives 0.9.
  double upper_quantile(double rho) const {
    detail::require(rho > 0.0 && rho <= 1.0, "quantile fraction must lie in (0, 1]");
    if (mode_ == Mode::continuous) return law_.upper_quantile(rho);
    std::vector<std::size_t> order(means_.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return means_[a] > means_[b]; });
    double above = 0.0;
    std::size_t i = 0;
    double last_positive = means_[order.front()];
    while (i < order.size()) {
      const double level = means_[order[i]];
      double mass = 0.0;
      while (i < order.size() && means_[order[i]] == level) mass += probs_[order[i++]];
      if (mass <= 0.0) continue;
      last_positive = level;
      above += mass;
      if (above >= rho - kMassTolerance) return level;
    }
    return last_positive;
  }

  static constexpr double kMassTolerance = 1e-12;

 private:
  explicit ArmReservoir(Mode mode) : mode_(mode), law_(PiecewiseUniformLaw::uniform()) {}

  Mode mode_;
  std::vector<double> means_;
  std::vector<double> probs_;
  std::vector<double> cumulative_;
  PiecewiseUniformLaw law_;


 public:
  // One draw from P_A, ignoring exclusions.
  ArmHandle draw_unrestricted(RngStream& rng) const {
    if (mode_ == Mode::continuous) {
      const std::uint64_t tag = rng();
      return ArmHandle{tag, law_.sample(rng)};
    }
    const double u = rng.uniform01() * cumulative_.back();
    std::size_t id = static_cast<std::size_t>(
        std::upper_bound(cumulative_.begin(), cumulative_.end(), u) - cumulative_.begin());
    id = std::min(id, means_.size() - 1);
    while (probs_[id] <= 0.0 && id > 0) --id;
    return ArmHandle{static_cast<std::uint64_t>(id), means_[id]};
  }
};

struct DrawOutcome {
  ArmHandle arm;
  std::uint64_t rejections = 0;
};

// Draws from P_A conditioned on not landing in `excluded` by discarding and
// redrawing. `excluded` need not be sorted.
inline DrawOutcome draw_arm_counted(const ArmReservoir& reservoir,
                                    std::span<const ArmHandle> excluded, RngStream& rng) {
  auto is_excluded = [&](const ArmHandle& a) {
    return std::find(excluded.begin(), excluded.end(), a) != excluded.end();
  };
  if (reservoir.is_discrete() && !excluded.empty()) {
    double remaining = 0.0;
    for (std::size_t id = 0; id < reservoir.size(); ++id) {
      if (!is_excluded(reservoir.handle(id))) remaining += reservoir.probs()[id];
    }
    if (remaining <= ArmReservoir::kMassTolerance) {
      throw NoArmAvailable("exclusion set covers the whole reservoir support");
    }
  }
  DrawOutcome out;
  for (;;) {
    out.arm = reservoir.draw_unrestricted(rng);
    if (!is_excluded(out.arm)) return out;
    ++out.rejections;
  }
}

inline ArmHandle draw_arm(const ArmReservoir& reservoir, std::span<const ArmHandle> excluded,
                          RngStream& rng) {
  return draw_arm_counted(reservoir, excluded, rng).arm;
}

}  // namespace kmbandit
