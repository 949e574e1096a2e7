#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "kmbandit/bandit.hpp"
#include "kmbandit/errors.hpp"
#include "kmbandit/reservoir.hpp"

namespace kmbandit {

namespace detail {

// ceil() that forgives floating-point noise just above an integer, so that
// e.g. ceil(4 * ln(2 / (2/e))) is 4 rather than 5.
inline std::uint64_t ceil_count(double x) {
  if (!(x > 0.0)) return 0;
  const double nearest = std::round(x);
  if (std::abs(x - nearest) <= 1e-12 * std::max(1.0, std::abs(x))) {
    return static_cast<std::uint64_t>(nearest);
  }
  return static_cast<std::uint64_t>(std::ceil(x));
}

}  // namespace detail

// Arm indices sorted by true mean, descending; ties keep index order.
inline std::vector<std::size_t> rank_by_mean(std::span<const double> means) {
  std::vector<std::size_t> order(means.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return means[a] > means[b]; });
  return order;
}

// Ground-truth group of every arm: 0 for B1 (top k), 1 for B2 (ranks k+1..m),
// 2 for B3 (the rest).
inline std::vector<int> ground_truth_groups(std::span<const double> means, std::size_t k,
                                            std::size_t m) {
  const auto order = rank_by_mean(means);
  std::vector<int> group(means.size(), 2);
  for (std::size_t r = 0; r < order.size(); ++r) {
    if (r < k) {
      group[order[r]] = 0;
    } else if (r < m) {
      group[order[r]] = 1;
    }
  }
  return group;
}

// Per-arm gaps, indexed like `means`:
//   B1: mu_a - mu_(m+1);  B2: mu_(k) - mu_(m+1);  B3: mu_(m) - mu_a.
inline std::vector<double> gaps(std::span<const double> means, std::size_t k, std::size_t m) {
  const std::size_t n = means.size();
  detail::require(k >= 1 && k <= m, "gaps need 1 <= k <= m");
  detail::require(m < n, "gaps need m < n");
  const auto order = rank_by_mean(means);
  const double mu_k = means[order[k - 1]];
  const double mu_m = means[order[m - 1]];
  const double mu_m1 = means[order[m]];
  std::vector<double> delta(n);
  for (std::size_t r = 0; r < n; ++r) {
    const std::size_t a = order[r];
    if (r < k) {
      delta[a] = means[a] - mu_m1;
    } else if (r < m) {
      delta[a] = mu_k - mu_m1;
    } else {
      delta[a] = mu_m - means[a];
    }
  }
  return delta;
}

inline std::vector<double> gaps(const FiniteBandit& instance, std::size_t k, std::size_t m) {
  const auto means = instance.means();
  return gaps(means, k, m);
}

// H_eps = sum_a 1 / max(Delta_a, eps/2)^2.
inline double hardness_from_gaps(std::span<const double> deltas, double eps) {
  detail::require(eps > 0.0, "hardness needs eps > 0");
  double h = 0.0;
  for (double d : deltas) {
    const double floor = std::max(d, eps / 2.0);
    h += 1.0 / (floor * floor);
  }
  return h;
}

inline double hardness(const FiniteBandit& instance, std::size_t k, std::size_t m, double eps) {
  const auto d = gaps(instance, k, m);
  return hardness_from_gaps(d, eps);
}

// u*(a, t) = ceil(32 / max(Delta_a, eps/2)^2 * ln(k1 n t^4 / delta)).
inline std::uint64_t u_star(double gap, double eps, std::size_t n, std::uint64_t t,
                            double delta) {
  detail::require(t >= 1, "u_star needs t >= 1");
  const double floor = std::max(gap, eps / 2.0);
  const double tau =
      std::log(1.25 * static_cast<double>(n) / delta) + 4.0 * std::log(static_cast<double>(t));
  return detail::ceil_count(32.0 / (floor * floor) * tau);
}

struct BudgetEstimate {
  std::uint64_t rounds = 0;
  // Set when H_eps <= delta, where the bound degenerates to 0.
  bool degenerate = false;
};

// T* = ceil(2732 H ln(H / delta)). Diagnostic only; no algorithm stops on it.
inline BudgetEstimate predicted_budget(double hardness_value, double delta) {
  detail::require(hardness_value > 0.0, "predicted_budget needs H > 0");
  detail::require(delta > 0.0, "predicted_budget needs delta > 0");
  const double log_term = std::log(hardness_value / delta);
  if (log_term <= 0.0) return {0, true};
  return {detail::ceil_count(2732.0 * hardness_value * log_term), false};
}

// Slack on optimal-set membership so that decimal inputs such as 0.7 against
// 0.8 - 0.1 are judged as written rather than by their binary rounding.
inline constexpr double kMembershipTolerance = 1e-12;

// TOP_m(eps): arms with mean >= (m-th largest mean) - eps, ascending indices.
inline std::vector<std::size_t> top_m_eps(std::span<const double> means, std::size_t m,
                                          double eps) {
  detail::require(m >= 1 && m <= means.size(), "top_m_eps needs 1 <= m <= n");
  std::vector<double> sorted(means.begin(), means.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  const double threshold = sorted[m - 1] - eps - kMembershipTolerance;
  std::vector<std::size_t> out;
  for (std::size_t a = 0; a < means.size(); ++a) {
    if (means[a] >= threshold) out.push_back(a);
  }
  return out;
}

inline std::vector<std::size_t> top_m_eps(const FiniteBandit& instance, std::size_t m,
                                          double eps) {
  const auto means = instance.means();
  return top_m_eps(means, m, eps);
}

// Membership test for TOP_rho(eps) of a reservoir.
class QuantileOracle {
 public:
  QuantileOracle(double quantile, double eps) : quantile_(quantile), eps_(eps) {}

  double quantile() const noexcept { return quantile_; }
  double threshold() const noexcept { return quantile_ - eps_; }

  bool operator()(double mean) const { return mean >= threshold() - kMembershipTolerance; }
  bool operator()(const ArmHandle& arm) const { return (*this)(arm.mean); }

 private:
  double quantile_;
  double eps_;
};

inline QuantileOracle top_rho_eps(const ArmReservoir& reservoir, double rho, double eps) {
  detail::require(eps >= 0.0, "top_rho_eps needs eps >= 0");
  return QuantileOracle(reservoir.upper_quantile(rho), eps);
}

// True iff `returned` has k entries, no duplicates, and lies in TOP_m(eps).
inline bool verify_arms(std::span<const std::size_t> returned, std::size_t k,
                        std::span<const double> means, std::size_t m, double eps) {
  if (returned.size() != k) return false;
  std::vector<std::size_t> sorted(returned.begin(), returned.end());
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) return false;
  if (!sorted.empty() && sorted.back() >= means.size()) return false;
  const auto top = top_m_eps(means, m, eps);
  return std::includes(top.begin(), top.end(), sorted.begin(), sorted.end());
}

// Same check for reservoir outputs against TOP_rho(eps).
inline bool verify_arms(std::span<const ArmHandle> returned, std::size_t k,
                        const QuantileOracle& oracle) {
  if (returned.size() != k) return false;
  for (std::size_t i = 0; i < returned.size(); ++i) {
    if (!oracle(returned[i])) return false;
    for (std::size_t j = i + 1; j < returned.size(); ++j) {
      if (returned[i] == returned[j]) return false;
    }
  }
  return true;
}

struct EquiprobableCheck {
  bool ok = true;
  std::optional<ArmHandle> witness;
  std::size_t top_count = 0;  // |TOP_rho| at eps = 0
};

// At-most-k-equiprobable test: every TOP_rho arm must have probability
// <= rho / k. Discrete reservoirs only.
inline EquiprobableCheck validate_equiprobable(const ArmReservoir& reservoir, std::size_t k,
                                               double rho) {
  detail::require(reservoir.is_discrete(),
                  "equiprobability check needs a discrete reservoir; continuous laws satisfy it "
                  "vacuously");
  detail::require(k >= 1, "equiprobability check needs k >= 1");
  const auto oracle = top_rho_eps(reservoir, rho, 0.0);
  const double limit = rho / static_cast<double>(k) + ArmReservoir::kMassTolerance;
  EquiprobableCheck out;
  double worst = -1.0;
  for (std::size_t id = 0; id < reservoir.size(); ++id) {
    if (reservoir.probs()[id] <= 0.0 || !oracle(reservoir.means()[id])) continue;
    ++out.top_count;
    if (reservoir.probs()[id] > limit && reservoir.probs()[id] > worst) {
      worst = reservoir.probs()[id];
      out.ok = false;
      out.witness = reservoir.handle(id);
    }
  }
  return out;
}

}  // namespace kmbandit
