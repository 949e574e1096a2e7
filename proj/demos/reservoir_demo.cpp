// Three distinct arms from the top 15% of a 100-arm reservoir with KQP-1.

#include <cstdio>
#include <vector>

#include "kmbandit/analysis.hpp"
#include "kmbandit/quantile.hpp"

int main() {
  using namespace kmbandit;
  std::vector<double> means(100, 0.1);
  for (int i = 0; i < 15; ++i) means[i] = 0.9;
  const auto reservoir = ArmReservoir::discrete(means, std::vector<double>(100, 0.01));

  RngStream rng(7);
  const auto run = kqp1({reservoir, 0.15, 3, 0.05, 0.1}, rng);
  const auto oracle = top_rho_eps(reservoir, 0.15, 0.05);

  for (std::size_t y = 0; y < run.arms.size(); ++y) {
    std::printf("phase %zu: rho=%.2f arm %llu mu=%.1f samples=%llu\n", y + 1, run.schedule[y],
                static_cast<unsigned long long>(run.arms[y].id), run.arms[y].mean,
                static_cast<unsigned long long>(run.phase_samples[y]));
  }
  std::printf("all optimal and distinct: %s\n", verify_arms(run.arms, 3, oracle) ? "yes" : "no");
}
