#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "armlab/bandit.hpp"
#include "armlab/rng.hpp"

using namespace armlab;

TEST(Instance, HardAndEasyShapes) {
  const auto hard = make_instance(InstanceKind::kHard);
  EXPECT_EQ(hard.num_arms(), 5u);
  EXPECT_DOUBLE_EQ(hard.means[0], 0.6);
  for (std::size_t a = 1; a < 5; ++a) EXPECT_DOUBLE_EQ(hard.means[a], 0.4);
  const auto easy = make_instance(InstanceKind::kEasy, 50);
  EXPECT_EQ(easy.num_arms(), 4u);
  EXPECT_DOUBLE_EQ(easy.means[0], 0.75);
  EXPECT_DOUBLE_EQ(easy.means[3], 0.25);
  EXPECT_EQ(easy.horizon, 50u);
  EXPECT_EQ(parse_instance_kind("easy"), InstanceKind::kEasy);
  EXPECT_THROW(parse_instance_kind("medium"), ConfigError);
}

TEST(Instance, RejectsBadParameters) {
  EXPECT_THROW(make_instance(1, 0.2, 10), ConfigError);
  EXPECT_THROW(make_instance(3, 0.0, 10), ConfigError);
  EXPECT_THROW(make_instance(3, 1.5, 10), ConfigError);
  EXPECT_THROW(make_instance(3, 0.2, 0), ConfigError);
  EXPECT_NO_THROW(make_instance(2, 1.0, 1));
}

TEST(Instance, ShuffleIsAPermutationAndTracksBestArm) {
  const auto base = make_instance(InstanceKind::kHard);
  std::set<std::vector<ArmIndex>> seen;
  for (std::size_t r = 0; r < 200; ++r) {
    SeededRng rng(7, {1, r, StreamRole::kPermutation});
    const auto inst = shuffle_arms(base, rng);
    auto sorted = inst.permutation;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < sorted.size(); ++i) EXPECT_EQ(sorted[i], i);
    EXPECT_DOUBLE_EQ(inst.means[best_arm(inst)], 0.6);
    EXPECT_EQ(best_arm(inst), inst.permutation[0]);
    seen.insert(inst.permutation);
  }
  EXPECT_GT(seen.size(), 50u);
}

TEST(Instance, PullRejectsUnknownArm) {
  const auto inst = make_instance(InstanceKind::kEasy);
  SeededRng rng(1, {0, 0, StreamRole::kReward});
  EXPECT_THROW(pull(inst, 4, rng), UsageError);
}

TEST(Instance, PullFrequenciesMatchMeans) {
  const auto inst = make_instance(InstanceKind::kEasy);
  SeededRng rng(3, {0, 0, StreamRole::kReward});
  const int n = 40000;
  for (ArmIndex a = 0; a < inst.num_arms(); ++a) {
    int hits = 0;
    for (int i = 0; i < n; ++i) hits += pull(inst, a, rng);
    EXPECT_NEAR(hits / double(n), inst.means[a], 0.01);
  }
}

TEST(Rng, StreamsAreReproducibleAndDistinct) {
  SeededRng a(42, {5, 3, StreamRole::kAgent});
  SeededRng b(42, {5, 3, StreamRole::kAgent});
  SeededRng c(42, {5, 3, StreamRole::kReward});
  SeededRng d(42, {5, 4, StreamRole::kAgent});
  bool differs_c = false, differs_d = false;
  for (int i = 0; i < 16; ++i) {
    const auto x = a();
    EXPECT_EQ(x, b());
    differs_c |= x != c();
    differs_d |= x != d();
  }
  EXPECT_TRUE(differs_c);
  EXPECT_TRUE(differs_d);
}

TEST(Rng, BelowIsUnbiasedAndUniformInRange) {
  SeededRng rng(9, {0, 0, StreamRole::kAgent});
  std::vector<int> counts(7, 0);
  for (int i = 0; i < 70000; ++i) {
    const auto v = rng.below(7);
    ASSERT_LT(v, 7u);
    ++counts[v];
  }
  for (int c : counts) EXPECT_NEAR(c, 10000, 400);
  for (int i = 0; i < 1000; ++i) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
}

TEST(Rng, BetaHasExpectedMean) {
  SeededRng rng(11, {0, 0, StreamRole::kAgent});
  double sum = 0.0;
  const int n = 50000;
  for (int i = 0; i < n; ++i) sum += rng.beta(3.0, 7.0);
  EXPECT_NEAR(sum / n, 0.3, 0.005);
}
