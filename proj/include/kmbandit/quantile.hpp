#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <utility>
#include <vector>

#include "kmbandit/analysis.hpp"
#include "kmbandit/bandit.hpp"
#include "kmbandit/confidence.hpp"
#include "kmbandit/errors.hpp"
#include "kmbandit/finite.hpp"
#include "kmbandit/median_elimination.hpp"
#include "kmbandit/reservoir.hpp"
#include "kmbandit/rng.hpp"

namespace kmbandit {

// One run's view of a reservoir: the active exclusion set and a count of
// every reward drawn. Single-owner; not thread-safe.
class ReservoirSession {
 public:
  explicit ReservoirSession(const ArmReservoir& reservoir) : reservoir_(&reservoir) {}

  const ArmReservoir& reservoir() const noexcept { return *reservoir_; }

  ArmHandle draw(RngStream& rng) const { return draw_arm(*reservoir_, excluded_, rng); }

  double pull(const ArmHandle& arm, RngStream& rng) {
    account(arm, 1);
    return reservoir_->sample_reward(arm, rng);
  }

  double sample_sum(const ArmHandle& arm, std::uint64_t count, RngStream& rng) {
    account(arm, count);
    return reservoir_->sample_sum(arm, count, rng);
  }

  void exclude(const ArmHandle& arm) { excluded_.push_back(arm); }
  std::span<const ArmHandle> excluded() const noexcept { return excluded_; }

  std::uint64_t samples() const noexcept { return samples_; }
  // Per-arm pulls, tracked for discrete reservoirs only.
  const std::map<std::uint64_t, std::uint64_t>& pulls_by_id() const noexcept {
    return pulls_by_id_;
  }

 private:
  void account(const ArmHandle& arm, std::uint64_t count) {
    samples_ += count;
    if (reservoir_->is_discrete()) pulls_by_id_[arm.id] += count;
  }

  const ArmReservoir* reservoir_;
  std::vector<ArmHandle> excluded_;
  std::uint64_t samples_ = 0;
  std::map<std::uint64_t, std::uint64_t> pulls_by_id_;
};

// A finite bandit over arms drawn from a reservoir; pulls go through the
// session so they are counted.
class HandleBandit {
 public:
  HandleBandit(ReservoirSession& session, std::vector<ArmHandle> arms)
      : session_(&session), arms_(std::move(arms)) {}

  std::size_t size() const noexcept { return arms_.size(); }
  double mean(std::size_t i) const { return arms_.at(i).mean; }
  const ArmHandle& handle(std::size_t i) const { return arms_.at(i); }
  double pull(std::size_t i, RngStream& rng) const { return session_->pull(arms_.at(i), rng); }

 private:
  ReservoirSession* session_;
  std::vector<ArmHandle> arms_;
};

struct QuantileOptions {
  // Per-copy failure probability of the inner P2 runs.
  double delta_prime = 0.25;
};

struct QuantileRun {
  std::vector<ArmHandle> arms;
  std::uint64_t samples = 0;
  std::vector<double> schedule;               // target quantile per phase
  std::vector<std::uint64_t> phase_samples;   // samples spent per phase
  std::map<std::uint64_t, std::uint64_t> pulls_by_id;  // discrete reservoirs
};

// ceil((1 / rho) ln(2 / delta)).
inline std::uint64_t p2_draw_count(double rho, double delta) {
  return detail::ceil_count(std::log(2.0 / delta) / rho);
}

// ceil((1 / delta') ln(2 / delta)); 4 ln(2 / delta) at delta' = 1/4.
inline std::uint64_t p3_copy_count(double delta, double delta_prime = 0.25) {
  return detail::ceil_count(std::log(2.0 / delta) / delta_prime);
}

// ceil(ln(2 / delta) / (2 (1/2 - delta')^2)); 8 ln(2 / delta) at delta' = 1/4.
inline std::uint64_t opt_qp_copy_count(double delta, double delta_prime = 0.25) {
  const double margin = 0.5 - delta_prime;
  return detail::ceil_count(std::log(2.0 / delta) / (2.0 * margin * margin));
}

// rho^y = rho (k - y + 1) / k for y = 1..k.
inline std::vector<double> kqp1_schedule(double rho, std::size_t k) {
  std::vector<double> out(k);
  for (std::size_t y = 1; y <= k; ++y) {
    out[y - 1] = rho * static_cast<double>(k - y + 1) / static_cast<double>(k);
  }
  return out;
}

namespace detail {

inline void check_quantile_args(double rho, double eps, double delta) {
  require(rho > 0.0 && rho <= 1.0, "need rho in (0, 1]");
  require(eps > 0.0 && eps <= 1.0, "need eps in (0, 1]");
  require(delta > 0.0 && delta <= 1.0, "need delta in (0, 1]");
}

inline void check_delta_prime(double delta_prime) {
  require(delta_prime > 0.0 && delta_prime < 0.5, "need delta' in (0, 1/2)");
}

inline ArmHandle eliminate(ReservoirSession& session, const std::vector<ArmHandle>& arms,
                           double eps, double delta, RngStream& rng) {
  const auto result = median_elimination(
      arms.size(), eps, delta,
      [&](std::size_t i, std::uint64_t count, RngStream& r) {
        return session.sample_sum(arms[i], count, r);
      },
      rng);
  return arms[result.index];
}

inline QuantileRun finish(const ReservoirSession& session, std::vector<ArmHandle> arms) {
  QuantileRun run;
  run.arms = std::move(arms);
  run.samples = session.samples();
  run.pulls_by_id = session.pulls_by_id();
  return run;
}

}  // namespace detail

// P2: draw ceil((1/rho) ln(2/delta)) arms from the (restricted) reservoir and
// return the Median Elimination winner at (eps, delta/2).
inline ArmHandle p2(ReservoirSession& session, double rho, double eps, double delta,
                    RngStream& rng) {
  detail::check_quantile_args(rho, eps, delta);
  const std::uint64_t draws = p2_draw_count(rho, delta);
  std::vector<ArmHandle> drawn;
  drawn.reserve(draws);
  for (std::uint64_t i = 0; i < std::max<std::uint64_t>(draws, 1); ++i) {
    drawn.push_back(session.draw(rng));
  }
  return detail::eliminate(session, drawn, eps, delta / 2.0, rng);
}

// P3: u = ceil((1/delta') ln(2/delta)) independent P2(rho, eps/2, delta')
// copies form a multiset S (duplicates kept); Median Elimination on S at
// (eps/2, delta/2) picks the output.
inline ArmHandle p3(ReservoirSession& session, double rho, double eps, double delta,
                    RngStream& rng, const QuantileOptions& options = {}) {
  detail::check_quantile_args(rho, eps, delta);
  detail::check_delta_prime(options.delta_prime);
  const std::uint64_t copies = p3_copy_count(delta, options.delta_prime);
  std::vector<ArmHandle> shortlist;
  shortlist.reserve(copies);
  for (std::uint64_t c = 0; c < copies; ++c) {
    RngStream child = rng.split();
    shortlist.push_back(p2(session, rho, eps / 2.0, options.delta_prime, child));
  }
  return detail::eliminate(session, shortlist, eps / 2.0, delta / 2.0, rng);
}

inline QuantileRun p2(const ArmReservoir& reservoir, double rho, double eps, double delta,
                      RngStream& rng) {
  ReservoirSession session(reservoir);
  return detail::finish(session, {p2(session, rho, eps, delta, rng)});
}

inline QuantileRun p3(const ArmReservoir& reservoir, double rho, double eps, double delta,
                      RngStream& rng, const QuantileOptions& options = {}) {
  ReservoirSession session(reservoir);
  return detail::finish(session, {p3(session, rho, eps, delta, rng, options)});
}

struct QuantileProblem {
  const ArmReservoir& reservoir;
  double rho;
  std::size_t k;
  double eps;
  double delta;
};

// KQP-1 for at-most-k-equiprobable (k, rho) instances. Phase y runs P3 on the
// reservoir minus the y - 1 arms already returned, with target quantile
// rho (k - y + 1) / k and confidence delta / k.
inline QuantileRun kqp1(const QuantileProblem& problem, RngStream& rng,
                        const QuantileOptions& options = {}) {
  detail::check_quantile_args(problem.rho, problem.eps, problem.delta);
  detail::require(problem.k >= 1, "kqp1 needs k >= 1");
  if (problem.reservoir.is_discrete()) {
    const auto check = validate_equiprobable(problem.reservoir, problem.k, problem.rho);
    detail::require(check.top_count >= problem.k,
                    "invalid (k, rho) instance: fewer than k arms in TOP_rho");
    detail::require(check.ok, "instance is not at-most-k-equiprobable: arm " +
                                  std::to_string(check.witness ? check.witness->id : 0) +
                                  " exceeds rho / k");
  }
  ReservoirSession session(problem.reservoir);
  const auto schedule = kqp1_schedule(problem.rho, problem.k);
  const double phase_delta = problem.delta / static_cast<double>(problem.k);
  std::vector<ArmHandle> out;
  std::vector<std::uint64_t> phase_samples;
  for (double rho_y : schedule) {
    const std::uint64_t before = session.samples();
    const ArmHandle arm = p3(session, rho_y, problem.eps, phase_delta, rng, options);
    out.push_back(arm);
    session.exclude(arm);
    phase_samples.push_back(session.samples() - before);
  }
  QuantileRun run = detail::finish(session, std::move(out));
  run.schedule = schedule;
  run.phase_samples = std::move(phase_samples);
  return run;
}

// k independent P3 copies at confidence delta / k. Only valid on continuous
// reservoirs, where the outputs are distinct with probability 1.
inline QuantileRun k_independent_qp(const QuantileProblem& problem, RngStream& rng,
                                    const QuantileOptions& options = {}) {
  detail::check_quantile_args(problem.rho, problem.eps, problem.delta);
  detail::require(problem.k >= 1, "k_independent_qp needs k >= 1");
  detail::require(!problem.reservoir.is_discrete(),
                  "k_independent_qp needs a continuous reservoir (distinctness is not "
                  "guaranteed on discrete ones)");
  ReservoirSession session(problem.reservoir);
  const double phase_delta = problem.delta / static_cast<double>(problem.k);
  std::vector<ArmHandle> out;
  std::vector<std::uint64_t> phase_samples;
  for (std::size_t c = 0; c < problem.k; ++c) {
    RngStream child = rng.split();
    const std::uint64_t before = session.samples();
    out.push_back(p3(session, problem.rho, problem.eps, phase_delta, child, options));
    phase_samples.push_back(session.samples() - before);
  }
  QuantileRun run = detail::finish(session, std::move(out));
  run.schedule.assign(problem.k, problem.rho);
  run.phase_samples = std::move(phase_samples);
  return run;
}

// (1, m, n) solvers usable as the OptQP back end.
struct LucbQfSolver {
  BoundKind kind = BoundKind::kl;
  LucbOptions options{};

  std::size_t operator()(const HandleBandit& bandit, std::size_t m, double eps, double delta,
                         RngStream& rng) const {
    return lucb_km(bandit, 1, m, eps, delta, kind, rng, options).returned.front();
  }
};

struct F2QfSolver {
  BoundKind kind = BoundKind::kl;

  std::size_t operator()(const HandleBandit& bandit, std::size_t m, double eps, double delta,
                         RngStream& rng) const {
    return f2(bandit, m, eps, delta, kind, rng).returned.front();
  }
};

template <class Solver>
concept QfSolver = requires(const Solver& solver, const HandleBandit& bandit, std::size_t m,
                            double x, RngStream& rng) {
  { solver(bandit, m, x, x, rng) } -> std::convertible_to<std::size_t>;
};

// OptQP: u = ceil(ln(2/delta) / (2 (1/2 - delta')^2)) P2(rho, eps/2, delta')
// copies form S; the (1, floor(u/2), u) finite solver picks the output at
// (eps/2, delta/2).
template <QfSolver Solver>
QuantileRun opt_qp(const ArmReservoir& reservoir, double rho, double eps, double delta,
                   const Solver& solver, RngStream& rng, const QuantileOptions& options = {}) {
  detail::check_quantile_args(rho, eps, delta);
  detail::check_delta_prime(options.delta_prime);
  ReservoirSession session(reservoir);
  const std::uint64_t copies = opt_qp_copy_count(delta, options.delta_prime);
  std::vector<ArmHandle> shortlist;
  shortlist.reserve(copies);
  for (std::uint64_t c = 0; c < copies; ++c) {
    RngStream child = rng.split();
    shortlist.push_back(p2(session, rho, eps / 2.0, options.delta_prime, child));
  }
  const std::size_t m = static_cast<std::size_t>(copies / 2);
  const HandleBandit view(session, shortlist);
  const std::size_t pick = solver(view, m, eps / 2.0, delta / 2.0, rng);
  return detail::finish(session, {shortlist.at(pick)});
}

namespace detail {

inline RunRecord to_finite_record(const FiniteBandit& instance, const QuantileRun& run,
                                  std::size_t k, std::size_t m, std::uint64_t seed) {
  RunRecord record;
  record.k = k;
  record.m = m;
  record.seed = seed;
  record.total_samples = run.samples;
  for (const auto& arm : run.arms) record.returned.push_back(static_cast<std::size_t>(arm.id));
  record.pulls.assign(instance.size(), 0);
  for (const auto& [id, count] : run.pulls_by_id) record.pulls[id] += count;
  fill_groups(record, instance, k, m);
  return record;
}

}  // namespace detail

// Solves (1, m, n) by posing the instance as a uniform reservoir with
// rho' = m / n and running P3.
inline RunRecord solve_qf_via_p3(const FiniteBandit& instance, std::size_t m, double eps,
                                 double delta, RngStream& rng,
                                 const QuantileOptions& options = {}) {
  detail::check_km(instance.size(), 1, m);
  const auto reservoir = ArmReservoir::uniform_over(instance);
  const double rho = static_cast<double>(m) / static_cast<double>(instance.size());
  const auto run = p3(reservoir, rho, eps, delta, rng, options);
  return detail::to_finite_record(instance, run, 1, m, rng.seed());
}

// Solves (k, m, n), k >= 2, through the same uniform embedding and KQP-1.
inline RunRecord solve_kmn_via_kqp1(const FiniteBandit& instance, std::size_t k, std::size_t m,
                                    double eps, double delta, RngStream& rng,
                                    const QuantileOptions& options = {}) {
  detail::check_km(instance.size(), k, m);
  detail::require(k >= 2, "solve_kmn_via_kqp1 needs k >= 2; use solve_qf_via_p3 for k = 1");
  const auto reservoir = ArmReservoir::uniform_over(instance);
  const double rho = static_cast<double>(m) / static_cast<double>(instance.size());
  const auto run = kqp1({reservoir, rho, k, eps, delta}, rng, options);
  return detail::to_finite_record(instance, run, k, m, rng.seed());
}

}  // namespace kmbandit
