#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <string_view>

#include "kmbandit/bandit.hpp"
#include "kmbandit/errors.hpp"

namespace kmbandit {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

// tau(t) = ln(k1 * n * t^4 / delta) with k1 = 5/4, natural log throughout.
class ExplorationThreshold {
 public:
  static constexpr double k1 = 1.25;

  ExplorationThreshold(std::size_t n, double delta) : n_(n), delta_(delta) {
    detail::require(n >= 1, "exploration threshold needs n >= 1");
    detail::require(delta > 0.0, "exploration threshold needs delta > 0");
    log_scale_ = std::log(k1 * static_cast<double>(n) / delta);
  }

  std::size_t arms() const noexcept { return n_; }
  double delta() const noexcept { return delta_; }

  double operator()(std::uint64_t t) const {
    return log_scale_ + 4.0 * std::log(static_cast<double>(t));
  }

 private:
  std::size_t n_;
  double delta_;
  double log_scale_;
};

// Hoeffding radius sqrt(tau(t) / (2u)). Infinite for u = 0; a nonpositive
// threshold gives radius 0.
inline double beta(std::uint64_t u, std::uint64_t t, const ExplorationThreshold& threshold) {
  if (u == 0) return kInfinity;
  const double tau = threshold(t);
  if (tau <= 0.0) return 0.0;
  return std::sqrt(tau / (2.0 * static_cast<double>(u)));
}

// Bernoulli KL divergence in nats, with 0 ln 0 = 0.
inline double kl_bernoulli(double p, double q) {
  detail::require(p >= 0.0 && p <= 1.0 && q >= 0.0 && q <= 1.0,
                  "kl_bernoulli arguments must lie in [0, 1]");
  double out = 0.0;
  if (p > 0.0) {
    if (q <= 0.0) return kInfinity;
    out += p * std::log(p / q);
  }
  if (p < 1.0) {
    if (q >= 1.0) return kInfinity;
    out += (1.0 - p) * std::log((1.0 - p) / (1.0 - q));
  }
  return out;
}

namespace detail {

inline constexpr double kBisectionTolerance = 1e-9;
inline constexpr int kBisectionMaxIterations = 80;
// Bisection keeps going past the 1e-9 bracket until u * kl is within this
// much of tau. Where no double gets that close (roots within a few ulps of 0
// or 1), a second bisection over the bit patterns returns the last feasible
// double instead.
inline constexpr double kResidualTolerance = 1e-8;

// Nonnegative doubles order like their bit patterns.
inline double bit_midpoint(double a, double b) {
  const auto ia = std::bit_cast<std::uint64_t>(a);
  const auto ib = std::bit_cast<std::uint64_t>(b);
  const std::uint64_t lo = std::min(ia, ib);
  return std::bit_cast<double>(lo + (std::max(ia, ib) - lo) / 2);
}

// Largest (upper = true) or smallest q between p and the boundary with
// u * kl(p, q) <= tau.
inline double kl_bound(double p, double u, double tau, bool upper) {
  const double boundary = upper ? 1.0 : 0.0;
  if (tau <= 0.0 || p == boundary) return p;
  double inside = p;  // feasible
  double outside = boundary;  // infeasible: kl(p, boundary) = inf
  double divergence = 0.0;
  for (int i = 0; i < kBisectionMaxIterations; ++i) {
    const double mid = 0.5 * (inside + outside);
    if (mid == inside || mid == outside) break;
    const double d = u * kl_bernoulli(p, mid);
    if (d <= tau) {
      inside = mid;
      divergence = d;
      if (std::abs(outside - inside) <= kBisectionTolerance &&
          tau - divergence <= kResidualTolerance) {
        return inside;
      }
    } else {
      outside = mid;
    }
  }
  if (tau - divergence <= kResidualTolerance) return inside;
  for (;;) {
    const double mid = bit_midpoint(inside, outside);
    if (mid == inside || mid == outside) return inside;
    if (u * kl_bernoulli(p, mid) <= tau) {
      inside = mid;
    } else {
      outside = mid;
    }
  }
}

}  // namespace detail

// max{q in [p_hat, 1] : u * kl(p_hat, q) <= tau}.
inline double kl_ucb(double p_hat, std::uint64_t u, double tau) {
  if (u == 0) return kInfinity;
  return detail::kl_bound(p_hat, static_cast<double>(u), tau, true);
}

// min{q in [0, p_hat] : u * kl(p_hat, q) <= tau}.
inline double kl_lcb(double p_hat, std::uint64_t u, double tau) {
  if (u == 0) return -kInfinity;
  return detail::kl_bound(p_hat, static_cast<double>(u), tau, false);
}

inline double kl_ucb(double p_hat, std::uint64_t u, std::uint64_t t,
                     const ExplorationThreshold& threshold) {
  return kl_ucb(p_hat, u, threshold(t));
}

inline double kl_lcb(double p_hat, std::uint64_t u, std::uint64_t t,
                     const ExplorationThreshold& threshold) {
  return kl_lcb(p_hat, u, threshold(t));
}

enum class BoundKind { hoeffding, kl };

inline std::string_view to_string(BoundKind kind) {
  return kind == BoundKind::kl ? "kl" : "hoeffding";
}

inline BoundKind parse_bound_kind(std::string_view text) {
  if (text == "kl") return BoundKind::kl;
  if (text == "hoeffding") return BoundKind::hoeffding;
  throw UsageError("unknown bound scheme '" + std::string(text) + "' (expected kl|hoeffding)");
}

// Confidence-bound strategy. Hoeffding bounds are p_hat +- beta, unclipped;
// KL bounds lie in [0, 1]. Unpulled arms get +inf / -inf.
class BoundScheme {
 public:
  BoundScheme(BoundKind kind, ExplorationThreshold threshold)
      : kind_(kind), threshold_(threshold) {}

  BoundKind kind() const noexcept { return kind_; }
  const ExplorationThreshold& threshold() const noexcept { return threshold_; }

  double ucb(const ArmState& state, std::uint64_t t) const {
    if (state.pulls == 0) return kInfinity;
    return ucb_at(state.mean(), state.pulls, threshold_(t));
  }

  double lcb(const ArmState& state, std::uint64_t t) const {
    if (state.pulls == 0) return -kInfinity;
    return lcb_at(state.mean(), state.pulls, threshold_(t));
  }

  // Same bounds with tau precomputed; used by the per-round loops.
  double ucb_at(double p_hat, std::uint64_t pulls, double tau) const {
    if (kind_ == BoundKind::kl) return kl_ucb(p_hat, pulls, tau);
    return p_hat + hoeffding_radius(pulls, tau);
  }

  double lcb_at(double p_hat, std::uint64_t pulls, double tau) const {
    if (kind_ == BoundKind::kl) return kl_lcb(p_hat, pulls, tau);
    return p_hat - hoeffding_radius(pulls, tau);
  }

  static double hoeffding_radius(std::uint64_t pulls, double tau) {
    if (pulls == 0) return kInfinity;
    if (tau <= 0.0) return 0.0;
    return std::sqrt(tau / (2.0 * static_cast<double>(pulls)));
  }

 private:
  BoundKind kind_;
  ExplorationThreshold threshold_;
};

inline double ucb(const ArmState& state, std::uint64_t t, const BoundScheme& scheme) {
  return scheme.ucb(state, t);
}

inline double lcb(const ArmState& state, std::uint64_t t, const BoundScheme& scheme) {
  return scheme.lcb(state, t);
}

}  // namespace kmbandit
