#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <vector>

#include "kmbandit/analysis.hpp"
#include "kmbandit/bandit.hpp"
#include "kmbandit/instance_io.hpp"
#include "kmbandit/reservoir.hpp"
#include "kmbandit/rng.hpp"

using namespace kmbandit;

TEST(Rng, SameSeedSameStream) {
  RngStream a(123);
  RngStream b(123);
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(a(), b());
  RngStream c(124);
  RngStream d(123);
  int equal = 0;
  for (int i = 0; i < 100; ++i) equal += c() == d();
  EXPECT_LT(equal, 2);
}

TEST(Rng, SplitIsDeterministicAndDiffersFromParent) {
  RngStream a(9);
  RngStream b(9);
  RngStream ca = a.split();
  RngStream cb = b.split();
  EXPECT_TRUE(a == b);
  for (int i = 0; i < 100; ++i) ASSERT_EQ(ca(), cb());
  RngStream parent(9);
  RngStream child = parent.split();
  EXPECT_NE(parent(), child());
}

TEST(Rng, Uniform01InUnitInterval) {
  RngStream r(1);
  for (int i = 0; i < 10000; ++i) {
    const double u = r.uniform01();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
}

TEST(Pull, DegenerateArms) {
  const auto inst = make_bernoulli_instance({1.0, 0.0});
  RngStream r(5);
  for (int i = 0; i < 1000; ++i) {
    ASSERT_EQ(pull(inst, 0, r), 1.0);
    ASSERT_EQ(pull(inst, 1, r), 0.0);
  }
}

TEST(Pull, OneDrawPerPull) {
  const auto inst = make_bernoulli_instance({0.3});
  RngStream r(77);
  RngStream shadow(77);
  for (int i = 0; i < 100; ++i) {
    const double reward = pull(inst, 0, r);
    ASSERT_EQ(reward, shadow.uniform01() < 0.3 ? 1.0 : 0.0);
  }
  EXPECT_TRUE(r == shadow);
}

TEST(Pull, LawOfLargeNumbers) {
  const auto inst = make_bernoulli_instance({0.5});
  RngStream r(2024);
  double sum = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) sum += pull(inst, 0, r);
  EXPECT_NEAR(sum / n, 0.5, 0.01);
}

TEST(Pull, ThreeSigmaConcentration) {
  const int trials = 1000;
  const int n = 10000;
  for (double mu : {0.1, 0.5, 0.85}) {
    const auto inst = make_bernoulli_instance({mu});
    int within = 0;
    for (int s = 0; s < trials; ++s) {
      RngStream r(static_cast<std::uint64_t>(s) * 7919 + 1);
      double sum = 0.0;
      for (int i = 0; i < n; ++i) sum += inst.pull(0, r);
      within += std::abs(sum / n - mu) <= 3.0 * std::sqrt(mu * (1 - mu) / n) + 1e-6;
    }
    EXPECT_GE(within, 990) << "mu=" << mu;
  }
}

TEST(Pull, OutOfRangeArmIsUsageError) {
  const auto inst = make_bernoulli_instance({0.5, 0.5});
  RngStream r(1);
  EXPECT_THROW(pull(inst, 2, r), UsageError);
}

TEST(Bandit, RejectsMeansOutsideUnitInterval) {
  EXPECT_THROW(make_bernoulli_instance({0.5, 1.5}), UsageError);
  EXPECT_THROW(make_bernoulli_instance({-0.1}), UsageError);
}

TEST(Bandit, SameSeedSameRewards) {
  const auto inst = make_linear_instance(10);
  RngStream a(11);
  RngStream b(11);
  for (int i = 0; i < 500; ++i) ASSERT_EQ(inst.pull(i % 10, a), inst.pull(i % 10, b));
}

TEST(LinearInstance, TenArms) {
  const auto inst = make_linear_instance(10);
  ASSERT_EQ(inst.size(), 10u);
  EXPECT_DOUBLE_EQ(inst.mean(0), 0.999);
  EXPECT_NEAR(inst.mean(1), 0.88811111111111111, 1e-15);
  EXPECT_NEAR(inst.mean(2), 0.77722222222222222, 1e-15);
  EXPECT_DOUBLE_EQ(inst.mean(9), 0.001);
  for (std::size_t i = 1; i < 10; ++i) {
    EXPECT_NEAR(inst.mean(i - 1) - inst.mean(i), 0.998 / 9, 1e-12);
  }
}

TEST(LinearInstance, EndpointsAndMidpoint) {
  const auto two = make_linear_instance(2);
  EXPECT_EQ(two.means(), (std::vector<double>{0.999, 0.001}));
  const auto big = make_linear_instance(200);
  EXPECT_DOUBLE_EQ(big.mean(0), 0.999);
  EXPECT_DOUBLE_EQ(big.mean(199), 0.001);
  EXPECT_NEAR(big.mean(100), 0.49749246231155779, 1e-15);
  EXPECT_THROW(make_linear_instance(1), UsageError);
}

TEST(LowerBoundInstance, Examples) {
  const std::vector<std::size_t> none;
  const auto a = make_lower_bound_instance(6, 2, 1, 0.1, none);
  const std::vector<double> expect_a = {0.5, 0.5, 0.3, 0.3, 0.3, 0.3};
  for (std::size_t i = 0; i < 6; ++i) EXPECT_NEAR(a.mean(i), expect_a[i], 1e-15);

  const std::vector<std::size_t> raised = {2, 3};
  const auto b = make_lower_bound_instance(6, 2, 1, 0.1, raised);
  const std::vector<double> expect_b = {0.5, 0.5, 0.7, 0.7, 0.3, 0.3};
  for (std::size_t i = 0; i < 6; ++i) EXPECT_NEAR(b.mean(i), expect_b[i], 1e-15);
}

TEST(LowerBoundInstance, Preconditions) {
  const std::vector<std::size_t> none;
  EXPECT_THROW(make_lower_bound_instance(6, 2, 1, 0.2, none), UsageError);
  const std::vector<std::size_t> one = {3};
  EXPECT_THROW(make_lower_bound_instance(6, 2, 1, 0.1, one), UsageError);  // |I| not in {0, 2}
  const std::vector<std::size_t> hits_i0 = {1, 3};
  EXPECT_THROW(make_lower_bound_instance(6, 2, 1, 0.1, hits_i0), UsageError);
  EXPECT_THROW(make_lower_bound_instance(3, 2, 1, 0.1, none), UsageError);  // n < 2m
}

TEST(LowerBoundInstance, TopSetStructure) {
  // |I| = k - 1: exactly m arms at or above 1/2, and they include I0.
  for (std::size_t k = 1; k <= 3; ++k) {
    const std::size_t n = 8;
    const std::size_t m = 3;
    std::vector<std::size_t> raised;
    for (std::size_t i = 0; i + 1 < k; ++i) raised.push_back(m - k + 1 + i + 2);
    const auto inst = make_lower_bound_instance(n, m, k, 0.1, raised);
    std::size_t at_least_half = 0;
    for (std::size_t a = 0; a < n; ++a) at_least_half += inst.mean(a) >= 0.5;
    EXPECT_EQ(at_least_half, m);
    const auto top = top_m_eps(inst, m, 0.0);
    for (std::size_t a = 0; a <= m - k; ++a) {
      EXPECT_NE(std::find(top.begin(), top.end(), a), top.end());
    }
  }
  // |I| = m: the top-m set is exactly I.
  const std::vector<std::size_t> raised = {4, 5, 7};
  const auto inst = make_lower_bound_instance(8, 3, 2, 0.1, raised);
  EXPECT_EQ(top_m_eps(inst, 3, 0.0), raised);
}

TEST(Reservoir, DiscreteProbabilitiesMustSumToOne) {
  EXPECT_THROW(ArmReservoir::discrete({0.1, 0.2}, {0.5, 0.4}), UsageError);
  EXPECT_NO_THROW(ArmReservoir::discrete({0.1, 0.2}, {0.5, 0.5 + 1e-13}));
}

TEST(Reservoir, ExclusionForcesRemainingArm) {
  const auto r = ArmReservoir::discrete({0.3, 0.7}, {0.5, 0.5});
  const std::vector<ArmHandle> excluded = {r.handle(0)};
  RngStream rng(3);
  for (int i = 0; i < 200; ++i) EXPECT_EQ(draw_arm(r, excluded, rng).id, 1u);
}

TEST(Reservoir, FullExclusionIsNoArmAvailable) {
  const auto r = ArmReservoir::discrete({0.3, 0.7}, {0.5, 0.5});
  const std::vector<ArmHandle> excluded = {r.handle(0), r.handle(1)};
  RngStream rng(3);
  EXPECT_THROW(draw_arm(r, excluded, rng), NoArmAvailable);
}

TEST(Reservoir, RejectionPreservesConditionalProbabilities) {
  const auto r = ArmReservoir::discrete({0.1, 0.2, 0.3}, {0.2, 0.3, 0.5});
  const std::vector<ArmHandle> excluded = {r.handle(2)};
  RngStream rng(99);
  std::map<std::uint64_t, int> counts;
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) ++counts[draw_arm(r, excluded, rng).id];
  EXPECT_EQ(counts.count(2), 0u);
  EXPECT_NEAR(counts[0] / static_cast<double>(draws), 0.4, 0.01);
  EXPECT_NEAR(counts[1] / static_cast<double>(draws), 0.6, 0.01);
}

TEST(Reservoir, ContinuousExclusionNeverRejects) {
  const auto r = ArmReservoir::uniform_means();
  RngStream rng(4);
  std::vector<ArmHandle> excluded;
  for (int i = 0; i < 50; ++i) excluded.push_back(draw_arm(r, {}, rng));
  for (int i = 0; i < 10000; ++i) {
    const auto out = draw_arm_counted(r, excluded, rng);
    ASSERT_EQ(out.rejections, 0u);
    ASSERT_GE(out.arm.mean, 0.0);
    ASSERT_LT(out.arm.mean, 1.0);
  }
}

TEST(Reservoir, UpperQuantileConvention) {
  // Two-level law: 20% at 0.9, 80% at 0.1.
  const auto two = ArmReservoir::discrete({0.9, 0.1}, {0.2, 0.8});
  EXPECT_DOUBLE_EQ(two.upper_quantile(0.2), 0.9);
  EXPECT_DOUBLE_EQ(two.upper_quantile(0.1), 0.9);
  EXPECT_DOUBLE_EQ(two.upper_quantile(0.3), 0.1);
  EXPECT_DOUBLE_EQ(two.upper_quantile(1.0), 0.1);
  EXPECT_DOUBLE_EQ(ArmReservoir::uniform_means().upper_quantile(0.1), 0.9);
  const auto pw = ArmReservoir::continuous(PiecewiseUniformLaw({0.0, 0.5, 1.0}, {0.8, 0.2}));
  EXPECT_NEAR(pw.upper_quantile(0.1), 0.75, 1e-15);
  EXPECT_NEAR(pw.upper_quantile(0.6), 0.25, 1e-15);
}

TEST(Reservoir, UniformEmbeddingQuantileIsMthMean) {
  const auto inst = make_linear_instance(10);
  const auto r = ArmReservoir::uniform_over(inst);
  for (std::size_t m = 1; m < 10; ++m) {
    EXPECT_DOUBLE_EQ(r.upper_quantile(static_cast<double>(m) / 10.0), inst.mean(m - 1)) << m;
  }
}

TEST(InstanceFile, FiniteRoundTrip) {
  const auto inst = make_linear_instance(7);
  const auto text = format_instance(inst);
  const auto back = parse_instance(text);
  ASSERT_TRUE(std::holds_alternative<FiniteBandit>(back));
  EXPECT_EQ(std::get<FiniteBandit>(back).means(), inst.means());
  EXPECT_EQ(format_instance(back), text);
}

TEST(InstanceFile, ReservoirRoundTrip) {
  for (const auto& r :
       {ArmReservoir::discrete({0.9, 0.1}, {0.2, 0.8}), ArmReservoir::uniform_means(),
        ArmReservoir::continuous(PiecewiseUniformLaw({0.0, 0.3, 1.0}, {0.25, 0.75}))}) {
    const auto text = format_instance(r);
    EXPECT_EQ(format_instance(parse_instance(text)), text);
  }
}

TEST(InstanceFile, CommentsAndWhitespace) {
  const auto inst = parse_instance("# header\n  kind = finite \nmeans = [ 0.5 , 0.25 ]  # two\n");
  EXPECT_EQ(std::get<FiniteBandit>(inst).means(), (std::vector<double>{0.5, 0.25}));
}

TEST(InstanceFile, Errors) {
  EXPECT_THROW(parse_instance("kind=finite\n"), UsageError);
  EXPECT_THROW(parse_instance("kind=finite\nmeans=[0.5]\nmeans=[0.4]\n"), UsageError);
  EXPECT_THROW(parse_instance("kind=finite\nmeans=[0.5, x]\n"), UsageError);
  EXPECT_THROW(parse_instance("kind=finite\nmeans=[0.5]\nextra=1\n"), UsageError);
  EXPECT_THROW(parse_instance("kind=reservoir\nlaw=gaussian\n"), UsageError);
  EXPECT_THROW(parse_instance("kind=finite\nmeans 0.5\n"), UsageError);
}
