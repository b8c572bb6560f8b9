#include <gtest/gtest.h>

#include <random>

#include "cora/lyapunov.hpp"

using namespace cora;

TEST(UpdateQueue, Examples) {
  const ResourceBudget b{{10}, {2}};
  EXPECT_EQ(update_queue({{5}}, {3}, b).lengths, (std::vector<double>{6}));
  EXPECT_EQ(update_queue({{0}}, {0}, b).lengths, (std::vector<double>{0}));
  EXPECT_EQ(update_queue({{1}}, {0}, b).lengths, (std::vector<double>{0}));
}

TEST(UpdateQueue, DimensionMismatchThrows) {
  EXPECT_THROW(update_queue({{1, 2}}, {0}, ResourceBudget{{1}, {1}}), std::invalid_argument);
}

TEST(LyapunovValue, Examples) {
  EXPECT_EQ(lyapunov_value({{0, 0}}), 0.0);
  EXPECT_DOUBLE_EQ(lyapunov_value({{3, 4}}), 12.5);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0, 100);
  for (int i = 0; i < 20; ++i) {
    const double c = u(rng);
    EXPECT_DOUBLE_EQ(lyapunov_value({{c}}), c * c / 2);
  }
}

TEST(DriftPlusPenalty, Examples) {
  EXPECT_EQ(drift_plus_penalty({{4, 1}}, {{4, 1}}, 3.0, 0.0), 0.0);
  EXPECT_DOUBLE_EQ(drift_plus_penalty({{0}}, {{2}}, 10.0, 0.5), 7.0);
}

// Random trajectories: nonnegativity, the per-slot drift bound, telescoping
// and the time-average inequality hold on every slot.
TEST(QueueProperties, RandomTrajectories) {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(0, 1);
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t k = 1 + rep % 3;
    ResourceBudget b{ResourceVector::zeros(k), ResourceVector::zeros(k)};
    for (std::size_t i = 0; i < k; ++i) {
      b.per_slot_cap[i] = 1 + 20 * u(rng);
      b.long_term_avg[i] = b.per_slot_cap[i] * u(rng) + 1e-3;
    }
    const double theta = 100 * u(rng);
    VirtualQueueState q = VirtualQueueState::zeros(k);
    ConstraintLedger ledger(k);
    for (int t = 0; t < 300; ++t) {
      ResourceVector r = ResourceVector::zeros(k);
      for (std::size_t i = 0; i < k; ++i) r[i] = u(rng) < 0.3 ? 0.0 : b.per_slot_cap[i] * u(rng);
      const double pen = u(rng);
      const VirtualQueueState next = update_queue(q, r, b);
      for (double v : next.lengths) ASSERT_GE(v, 0.0);
      const double d = drift_bound_constant(b.per_slot_cap, b.long_term_avg);
      ASSERT_LE(drift_plus_penalty(q, next, theta, pen), drift_plus_penalty_bound(q, r, theta, pen, d) + 1e-9);
      ledger.record(r, b);
      ASSERT_TRUE(ledger.telescoping_holds(next));
      ASSERT_TRUE(ledger.average_constraint_holds(next, b));
      q = next;
    }
  }
}

TEST(ConstraintLedger, DetectsQueueBelowExcess) {
  ConstraintLedger ledger(1);
  const ResourceBudget b{{10}, {1}};
  ledger.record({5}, b);
  EXPECT_DOUBLE_EQ(ledger.cumulative_excess()[0], 4.0);
  EXPECT_TRUE(ledger.telescoping_holds({{4}}));
  EXPECT_FALSE(ledger.telescoping_holds({{3.5}}));
  EXPECT_FALSE(ledger.average_constraint_holds({{3.5}}, b));
  EXPECT_EQ(ledger.slots(), 1);
}
