// Picks 2 of the best 4 arms of a 10-arm linear instance with LUCB-k-m and
// compares its sample count with the gap-based hardness.

#include <cstdio>

#include "kmbandit/analysis.hpp"
#include "kmbandit/finite.hpp"

int main() {
  using namespace kmbandit;
  const auto instance = make_linear_instance(10);
  const std::size_t k = 2;
  const std::size_t m = 4;
  const double eps = 0.05;
  const double delta = 0.01;

  RngStream rng(42);
  const auto record = lucb_km(instance, k, m, eps, delta, BoundKind::kl, rng);

  std::printf("returned:");
  for (auto a : record.returned) std::printf(" %zu (mu=%.3f)", a, instance.mean(a));
  std::printf("\nsamples: %llu over %llu rounds, correct: %s\n",
              static_cast<unsigned long long>(record.total_samples),
              static_cast<unsigned long long>(record.rounds),
              verify_run(record, instance, m, eps) ? "yes" : "no");
  std::printf("H_eps: %.1f\n", hardness(instance, k, m, eps));
}
