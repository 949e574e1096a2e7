#pragma once

#include <array>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kmbandit/analysis.hpp"
#include "kmbandit/bandit.hpp"
#include "kmbandit/confidence.hpp"
#include "kmbandit/errors.hpp"
#include "kmbandit/rng.hpp"
#include "kmbandit/selection.hpp"

namespace kmbandit {

// What the sequential algorithms need from an instance: pulls plus ground
// truth means (used only for the per-group pull report, never for decisions).
template <class B>
concept PullableBandit = requires(const B& bandit, std::size_t arm, RngStream& rng) {
  { bandit.size() } -> std::convertible_to<std::size_t>;
  { bandit.pull(arm, rng) } -> std::convertible_to<double>;
  { bandit.mean(arm) } -> std::convertible_to<double>;
};

// Which A1 member LUCB-k-m samples and certifies. argmin_lcb is the weakest
// member of the candidate set; argmax_lcb is the literal reading of the
// algorithm box. They coincide for k = 1.
enum class HStarRule { argmin_lcb, argmax_lcb };

inline std::string_view to_string(HStarRule rule) {
  return rule == HStarRule::argmin_lcb ? "argmin" : "argmax";
}

inline HStarRule parse_h_star_rule(std::string_view text) {
  if (text == "argmin") return HStarRule::argmin_lcb;
  if (text == "argmax") return HStarRule::argmax_lcb;
  throw UsageError("unknown h-star mode '" + std::string(text) + "' (expected argmin|argmax)");
}

struct Partition {
  std::vector<std::size_t> top;     // A1: k highest empirical means
  std::vector<std::size_t> middle;  // A2: next m - k
  std::vector<std::size_t> bottom;  // A3: n - m lowest
  std::size_t h_star = 0;
  std::optional<std::size_t> m_star;  // absent when k = m
  std::size_t l_star = 0;
  double h_star_lcb = 0.0;
  double l_star_ucb = 0.0;
};

namespace detail {

inline void check_km(std::size_t n, std::size_t k, std::size_t m) {
  require(k >= 1, "need k >= 1");
  require(k <= m, "need k <= m");
  require(m < n, "need m < n");
}

// Hoeffding bounds dominate the KL ones (Pinsker), so they serve as cheap
// envelopes for lazy argmax. The slack absorbs rounding in the bisection.
inline constexpr double kEnvelopeSlack = 1e-12;

inline std::size_t least_pulled(std::span<const std::size_t> arms,
                                std::span<const ArmState> states, RngStream& rng) {
  TiedArgmax<double> best;
  for (std::size_t a : arms) best.offer(a, -static_cast<double>(states[a].pulls), rng);
  return best.item();
}

}  // namespace detail

// Splits arms by empirical mean into A1 / A2 / A3 (ties uniform) and picks the
// contentious arm of each group using bounds evaluated at round t.
inline Partition partition(std::span<const ArmState> states, std::size_t k, std::size_t m,
                           std::uint64_t t, const BoundScheme& scheme, RngStream& rng,
                           HStarRule rule = HStarRule::argmin_lcb) {
  const std::size_t n = states.size();
  detail::check_km(n, k, m);
  for (const auto& s : states) detail::require(s.pulls >= 1, "partition needs every arm pulled");

  std::vector<double> mean(n);
  for (std::size_t a = 0; a < n; ++a) mean[a] = states[a].mean();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  detail::rank_descending(std::span<std::size_t>(order), [&](std::size_t a) { return mean[a]; },
                          {k, m}, rng);

  Partition p;
  p.top.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
  p.middle.assign(order.begin() + static_cast<std::ptrdiff_t>(k),
                  order.begin() + static_cast<std::ptrdiff_t>(m));
  p.bottom.assign(order.begin() + static_cast<std::ptrdiff_t>(m), order.end());

  const double tau = scheme.threshold()(t);
  auto radius = [&](std::size_t a) { return BoundScheme::hoeffding_radius(states[a].pulls, tau); };
  auto lcb_of = [&](std::size_t a) { return scheme.lcb_at(mean[a], states[a].pulls, tau); };
  auto ucb_of = [&](std::size_t a) { return scheme.ucb_at(mean[a], states[a].pulls, tau); };

  if (rule == HStarRule::argmin_lcb) {
    const auto h = detail::lazy_argmax(
        p.top, [&](std::size_t a) { return radius(a) - mean[a] + detail::kEnvelopeSlack; },
        [&](std::size_t a) { return -lcb_of(a); }, rng);
    p.h_star = h.item;
    p.h_star_lcb = -h.value;
  } else {
    const auto h = detail::lazy_argmax(
        p.top, [&](std::size_t a) { return mean[a] + detail::kEnvelopeSlack; }, lcb_of, rng);
    p.h_star = h.item;
    p.h_star_lcb = h.value;
  }

  const auto l = detail::lazy_argmax(
      p.bottom, [&](std::size_t a) { return mean[a] + radius(a) + detail::kEnvelopeSlack; },
      ucb_of, rng);
  p.l_star = l.item;
  p.l_star_ucb = l.value;

  if (!p.middle.empty()) p.m_star = detail::least_pulled(p.middle, states, rng);
  return p;
}

// One execution of a finite-instance algorithm.
struct RunRecord {
  std::vector<std::size_t> returned;
  std::size_t k = 0;  // required number of returned arms
  std::size_t m = 0;
  std::uint64_t total_samples = 0;
  std::uint64_t rounds = 0;  // loop iterations after the initial sweep
  std::vector<std::uint64_t> pulls;  // per arm
  std::array<std::uint64_t, 3> pulls_by_group{};  // ground-truth B1, B2, B3
  std::uint64_t seed = 0;
  BoundKind scheme = BoundKind::kl;
  // ucb(l*) - lcb(h*) at the stopping round; <= eps on return.
  double certificate = 0.0;
  std::uint64_t stop_round = 0;  // round index t + 1 at which the rule fired
  std::size_t h_star = 0;        // certified pair at the stopping round
  std::size_t l_star = 0;
};

namespace detail {

template <PullableBandit B>
void fill_groups(RunRecord& record, const B& instance, std::size_t k, std::size_t m) {
  std::vector<double> means(instance.size());
  for (std::size_t a = 0; a < means.size(); ++a) means[a] = instance.mean(a);
  const auto group = ground_truth_groups(means, k, m);
  record.pulls_by_group = {};
  for (std::size_t a = 0; a < means.size(); ++a) {
    record.pulls_by_group[static_cast<std::size_t>(group[a])] += record.pulls[a];
  }
}

template <PullableBandit B>
void pull_into(const B& instance, std::size_t arm, std::vector<ArmState>& states,
               RngStream& rng) {
  states[arm].record(instance.pull(arm, rng));
}

inline void check_eps_delta(double eps, double delta) {
  require(eps > 0.0 && eps <= 1.0, "need eps in (0, 1]");
  require(delta > 0.0 && delta <= 1.0, "need delta in (0, 1]");
}

}  // namespace detail

struct LucbOptions {
  HStarRule h_star = HStarRule::argmin_lcb;
};

// LUCB-k-m: returns k arms that are (eps, m)-optimal w.p. >= 1 - delta.
//
// Pull every arm once (t = n). Then repeatedly partition at round t + 1; stop
// and return A1 once ucb(l*) - lcb(h*) <= eps, otherwise advance t and pull
// h*, m* (if A2 is nonempty) and l*.
template <PullableBandit B>
RunRecord lucb_km(const B& instance, std::size_t k, std::size_t m, double eps, double delta,
                  BoundKind kind, RngStream& rng, LucbOptions options = {}) {
  const std::size_t n = instance.size();
  detail::check_km(n, k, m);
  detail::check_eps_delta(eps, delta);
  const BoundScheme scheme(kind, ExplorationThreshold(n, delta));

  std::vector<ArmState> states(n);
  for (std::size_t a = 0; a < n; ++a) detail::pull_into(instance, a, states, rng);
  std::uint64_t t = n;
  RunRecord record;
  record.k = k;
  record.m = m;
  record.seed = rng.seed();
  record.scheme = kind;
  record.total_samples = n;

  for (;;) {
    Partition p = partition(states, k, m, t + 1, scheme, rng, options.h_star);
    const double gap = p.l_star_ucb - p.h_star_lcb;
    if (gap <= eps) {
      record.returned = std::move(p.top);
      record.certificate = gap;
      record.stop_round = t + 1;
      record.h_star = p.h_star;
      record.l_star = p.l_star;
      break;
    }
    ++t;
    ++record.rounds;
    detail::pull_into(instance, p.h_star, states, rng);
    ++record.total_samples;
    if (p.m_star) {
      detail::pull_into(instance, *p.m_star, states, rng);
      ++record.total_samples;
    }
    detail::pull_into(instance, p.l_star, states, rng);
    ++record.total_samples;
  }

  record.pulls.resize(n);
  for (std::size_t a = 0; a < n; ++a) record.pulls[a] = states[a].pulls;
  detail::fill_groups(record, instance, k, m);
  return record;
}

// F2 baseline for (1, m, n). Each round at t + 1: the arm with the highest LCB
// forms A1; the m - 1 highest-UCB arms among the rest form A2; the others form
// A3. Pulls the A1 arm, the least-pulled A2 arm and the highest-UCB A3 arm.
// Stops when lcb(A1 arm) >= max_{A3} ucb - eps and returns the A1 arm.
template <PullableBandit B>
RunRecord f2(const B& instance, std::size_t m, double eps, double delta, BoundKind kind,
             RngStream& rng) {
  const std::size_t n = instance.size();
  detail::check_km(n, 1, m);
  detail::check_eps_delta(eps, delta);
  const BoundScheme scheme(kind, ExplorationThreshold(n, delta));

  std::vector<ArmState> states(n);
  for (std::size_t a = 0; a < n; ++a) detail::pull_into(instance, a, states, rng);
  std::uint64_t t = n;
  RunRecord record;
  record.k = 1;
  record.m = m;
  record.seed = rng.seed();
  record.scheme = kind;
  record.total_samples = n;

  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), std::size_t{0});
  std::vector<double> mean(n);
  std::vector<std::size_t> rest;
  rest.reserve(n);
  std::vector<std::size_t> middle;

  for (;;) {
    const double tau = scheme.threshold()(t + 1);
    for (std::size_t a = 0; a < n; ++a) mean[a] = states[a].mean();
    auto radius = [&](std::size_t a) {
      return BoundScheme::hoeffding_radius(states[a].pulls, tau);
    };

    const auto leader = detail::lazy_argmax(
        all, [&](std::size_t a) { return mean[a] + detail::kEnvelopeSlack; },
        [&](std::size_t a) { return scheme.lcb_at(mean[a], states[a].pulls, tau); }, rng);

    rest.clear();
    for (std::size_t a = 0; a < n; ++a) {
      if (a != leader.item) rest.push_back(a);
    }
    const auto ranked = detail::lazy_top(
        rest, m, [&](std::size_t a) { return mean[a] + radius(a) + detail::kEnvelopeSlack; },
        [&](std::size_t a) { return scheme.ucb_at(mean[a], states[a].pulls, tau); }, rng);
    middle.clear();
    for (std::size_t i = 0; i + 1 < m; ++i) middle.push_back(ranked[i].item);
    const detail::ArgResult challenger = ranked[m - 1];

    const double gap = challenger.value - leader.value;
    if (gap <= eps) {
      record.returned = {leader.item};
      record.certificate = gap;
      record.stop_round = t + 1;
      record.h_star = leader.item;
      record.l_star = challenger.item;
      break;
    }
    ++t;
    ++record.rounds;
    detail::pull_into(instance, leader.item, states, rng);
    ++record.total_samples;
    if (!middle.empty()) {
      detail::pull_into(instance, detail::least_pulled(middle, states, rng), states, rng);
      ++record.total_samples;
    }
    detail::pull_into(instance, challenger.item, states, rng);
    ++record.total_samples;
  }

  record.pulls.resize(n);
  for (std::size_t a = 0; a < n; ++a) record.pulls[a] = states[a].pulls;
  detail::fill_groups(record, instance, 1, m);
  return record;
}

// True iff the record returned k distinct (eps, m)-optimal arms.
inline bool verify_run(const RunRecord& record, const FiniteBandit& instance, std::size_t m,
                       double eps) {
  const auto means = instance.means();
  return verify_arms(record.returned, record.k, means, m, eps);
}

}  // namespace kmbandit
