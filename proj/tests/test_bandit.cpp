#include <gtest/gtest.h>

#include <random>

#include "cora/bandit.hpp"

using namespace cora;

TEST(UcbIndex, Examples) {
  BanditState b = BanditState::fresh(1, 1, 1.0, 100);
  b.mean_reward(0, 0) = 0.5;
  b.pulls(0, 0) = 4;
  EXPECT_NEAR(ucb_index(b)(0, 0), 0.5 + std::sqrt(std::log(100.0) / 4.0), 1e-15);
  EXPECT_NEAR(ucb_index(b)(0, 0), 1.5729, 1e-4);
  b.exploration_coeff = 0.0;
  EXPECT_EQ(ucb_index(b)(0, 0), 0.5);
  EXPECT_EQ(ucb_index(BanditState::fresh(2, 2, 1.0, 10))(1, 1), kUnpulledIndex);
}

TEST(UcbIndex, ShortHorizonThrows) {
  EXPECT_THROW(ucb_index(BanditState::fresh(1, 1, 1.0, 1)), std::invalid_argument);
}

TEST(Observe, Examples) {
  BanditState b = BanditState::fresh(1, 1, 1.0, 100);
  b.mean_reward(0, 0) = 0.5;
  b.pulls(0, 0) = 4;
  const BanditState n = observe(b, CoefficientMatrix{{0.8}}, {2});
  EXPECT_DOUBLE_EQ(n.pulls(0, 0), 6.0);
  EXPECT_DOUBLE_EQ(n.mean_reward(0, 0), 0.6);

  const BanditState same = observe(b, CoefficientMatrix{{0.8}}, {0});
  EXPECT_EQ(same.mean_reward.data, b.mean_reward.data);
  EXPECT_EQ(same.pulls.data, b.pulls.data);

  const BanditState first = observe(BanditState::fresh(1, 1, 1.0, 10), CoefficientMatrix{{0.7}}, {3});
  EXPECT_DOUBLE_EQ(first.mean_reward(0, 0), 0.7);
}

TEST(Observe, RejectsNegativeAllocationAndBadShape) {
  const BanditState b = BanditState::fresh(1, 2, 1.0, 10);
  EXPECT_THROW(observe(b, CoefficientMatrix{{0.1, 0.2}}, {-1, 0}), std::invalid_argument);
  EXPECT_THROW(observe(b, CoefficientMatrix{{0.1}}, {1}), std::invalid_argument);
}

// psi-bar * L equals the resource-weighted sum of observed coefficients.
TEST(Observe, BookkeepingIdentity) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0, 1);
  for (int rep = 0; rep < 50; ++rep) {
    BanditState b = BanditState::fresh(2, 3, 1.0, 1000);
    CoefficientMatrix weighted(2, 3), units(2, 3);
    for (int t = 0; t < 200; ++t) {
      CoefficientMatrix z(2, 3);
      for (double& v : z.data) v = u(rng);
      ResourceVector r{u(rng) < 0.3 ? 0.0 : 5 * u(rng), 5 * u(rng), 0.0};
      b = observe(b, z, r);
      for (std::size_t d = 0; d < 2; ++d)
        for (std::size_t k = 0; k < 3; ++k) {
          weighted(d, k) += z(d, k) * r[k];
          units(d, k) += r[k];
        }
    }
    for (std::size_t i = 0; i < b.pulls.data.size(); ++i) {
      EXPECT_NEAR(b.pulls.data[i], units.data[i], 1e-9);
      EXPECT_NEAR(b.mean_reward.data[i] * b.pulls.data[i], weighted.data[i], 1e-9);
    }
    EXPECT_EQ(ucb_index(b)(0, 2), kUnpulledIndex);
  }
}

TEST(UcbIndex, BonusShrinksWithPulls) {
  // The first pull's bonus sqrt(log T) exceeds the unpulled sentinel, so
  // monotonicity starts from there.
  BanditState b = observe(BanditState::fresh(1, 1, 1.0, 1000), CoefficientMatrix{{0.3}}, {1.0});
  double prev = ucb_index(b)(0, 0);
  for (int t = 0; t < 100; ++t) {
    b = observe(b, CoefficientMatrix{{0.3}}, {1.0});
    const double idx = ucb_index(b)(0, 0);
    EXPECT_LT(idx, prev);
    EXPECT_GE(idx, 0.3);
    prev = idx;
  }
}
