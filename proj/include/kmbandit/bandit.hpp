#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "kmbandit/errors.hpp"
#include "kmbandit/rng.hpp"

namespace kmbandit {

// A reward law supported on [0, 1] with a known mean.
template <class M>
concept RewardModel = requires(const M& model, RngStream& rng, std::uint64_t count) {
  { model.mean() } -> std::convertible_to<double>;
  { model.sample(rng) } -> std::convertible_to<double>;
  { model.sample_sum(count, rng) } -> std::convertible_to<double>;
};

class BernoulliArm {
 public:
  explicit BernoulliArm(double mean) : mean_(mean) {
    detail::require(mean >= 0.0 && mean <= 1.0, "Bernoulli mean must lie in [0, 1]");
  }

  double mean() const noexcept { return mean_; }

  // One draw from the stream per pull.
  double sample(RngStream& rng) const { return rng.uniform01() < mean_ ? 1.0 : 0.0; }

  // Sum of `count` i.i.d. pulls, drawn as a single Binomial(count, mean).
  double sample_sum(std::uint64_t count, RngStream& rng) const {
    if (count == 0 || mean_ <= 0.0) return 0.0;
    if (mean_ >= 1.0) return static_cast<double>(count);
    std::binomial_distribution<std::uint64_t> binomial(count, mean_);
    return static_cast<double>(binomial(rng));
  }

 private:
  double mean_;
};

static_assert(RewardModel<BernoulliArm>);

// Immutable n-armed bandit. Pulling never mutates the instance; all
// randomness comes from the caller's stream.
template <RewardModel Model>
class BasicFiniteBandit {
 public:
  using model_type = Model;

  BasicFiniteBandit() = default;
  explicit BasicFiniteBandit(std::vector<Model> arms) : arms_(std::move(arms)) {}

  std::size_t size() const noexcept { return arms_.size(); }
  double mean(std::size_t arm) const { return arms_.at(arm).mean(); }
  const Model& arm(std::size_t arm) const { return arms_.at(arm); }

  std::vector<double> means() const {
    std::vector<double> out;
    out.reserve(arms_.size());
    for (const auto& a : arms_) out.push_back(a.mean());
    return out;
  }

  double pull(std::size_t arm, RngStream& rng) const {
    check_arm(arm);
    return arms_[arm].sample(rng);
  }

  double pull_many(std::size_t arm, std::uint64_t count, RngStream& rng) const {
    check_arm(arm);
    return arms_[arm].sample_sum(count, rng);
  }

 private:
  void check_arm(std::size_t arm) const {
    if (arm >= arms_.size()) {
      throw UsageError("arm index " + std::to_string(arm) + " out of range for " +
                       std::to_string(arms_.size()) + "-armed instance");
    }
  }

  std::vector<Model> arms_;
};

using FiniteBandit = BasicFiniteBandit<BernoulliArm>;

inline FiniteBandit make_bernoulli_instance(std::span<const double> means) {
  std::vector<BernoulliArm> arms;
  arms.reserve(means.size());
  for (double mu : means) arms.emplace_back(mu);
  return FiniteBandit(std::move(arms));
}

inline FiniteBandit make_bernoulli_instance(std::initializer_list<double> means) {
  return make_bernoulli_instance(std::span<const double>(means.begin(), means.size()));
}

inline double pull(const FiniteBandit& instance, std::size_t arm, RngStream& rng) {
  return instance.pull(arm, rng);
}

// I_n: n Bernoulli arms with means linearly spaced from 0.999 down to 0.001.
inline FiniteBandit make_linear_instance(std::size_t n) {
  detail::require(n >= 2, "linear instance needs n >= 2");
  std::vector<double> means(n);
  const double step = 0.998 / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) means[i] = 0.999 - static_cast<double>(i) * step;
  means.back() = 0.001;
  return make_bernoulli_instance(means);
}

// Hard instance family used by the (k, m, n) lower-bound construction.
// Arms 0..m-k sit at 1/2, arms in `raised` at 1/2 + 2*eps and all others at
// 1/2 - 2*eps. `raised` must have size k-1 or m and avoid 0..m-k.
inline FiniteBandit make_lower_bound_instance(std::size_t n, std::size_t m, std::size_t k,
                                              double eps, std::span<const std::size_t> raised) {
  detail::require(k >= 1 && k <= m, "lower-bound instance needs 1 <= k <= m");
  detail::require(n >= 2 * m, "lower-bound instance needs n >= 2m");
  detail::require(eps > 0.0 && eps <= 1.0 / std::sqrt(32.0),
                  "lower-bound instance needs 0 < eps <= 1/sqrt(32)");
  detail::require(raised.size() == k - 1 || raised.size() == m,
                  "lower-bound instance needs |I| in {k-1, m}");
  const std::size_t base_count = m - k + 1;
  std::vector<double> means(n, 0.5 - 2.0 * eps);
  for (std::size_t a = 0; a < base_count; ++a) means[a] = 0.5;
  std::vector<bool> seen(n, false);
  for (std::size_t a : raised) {
    detail::require(a < n, "lower-bound set member out of range");
    detail::require(a >= base_count, "lower-bound set intersects the fixed half-mean block");
    detail::require(!seen[a], "lower-bound set has a duplicate member");
    seen[a] = true;
    means[a] = 0.5 + 2.0 * eps;
  }
  return make_bernoulli_instance(means);
}

// Online statistics for one arm.
struct ArmState {
  std::uint64_t pulls = 0;
  double sum = 0.0;

  // NaN when the arm has never been pulled.
  double mean() const noexcept {
    return pulls == 0 ? std::numeric_limits<double>::quiet_NaN()
                      : sum / static_cast<double>(pulls);
  }

  void record(double reward) noexcept {
    ++pulls;
    sum += reward;
  }

  void record_batch(std::uint64_t count, double reward_sum) noexcept {
    pulls += count;
    sum += reward_sum;
  }
};

}  // namespace kmbandit
