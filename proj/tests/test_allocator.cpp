#include <gtest/gtest.h>

#include <random>

#include "cora/allocator.hpp"
#include "cora/cli.hpp"

using namespace cora;

namespace {

SlotProblem one_resource(double theta, double a, double q, double c, double cap) {
  return {c, {a}, {q}, {cap}, theta, {}};
}

double brute_1d(const SlotProblem& p, double step) {
  double best = std::numeric_limits<double>::infinity();
  for (double r = 0.0; r <= p.caps[0] + 1e-12; r += step) best = std::min(best, per_slot_objective(p, {std::min(r, p.caps[0])}));
  return best;
}

}  // namespace

TEST(BuildSlotProblem, SyntheticPattern) {
  const ClassifierWeights w{0.0, {-1.0, -1.0}};
  const SlotProblem p = build_slot_problem(w, {1, 2}, CoefficientMatrix{{0, 0}, {0, 1}}, {{0, 0}}, {5, 5}, 40.0);
  EXPECT_EQ(p.efficiency, (std::vector<double>{0.0, 1.0}));
  EXPECT_FALSE(p.active(0));
  EXPECT_TRUE(p.active(1));
  EXPECT_DOUBLE_EQ(p.offset, 3.0);
}

TEST(BuildSlotProblem, ZeroModelExcludesEverything) {
  const SlotProblem p = build_slot_problem(ClassifierWeights::zeros(2), {1, 2}, CoefficientMatrix{{1, 0}, {0, 1}},
                                           {{0, 0}}, {5, 5}, 40.0);
  EXPECT_EQ(p.active_count(), 0u);
  EXPECT_EQ(solve_per_slot(p), (ResourceVector{0, 0}));
}

TEST(BuildSlotProblem, DimensionMismatchThrows) {
  EXPECT_THROW(build_slot_problem(ClassifierWeights::zeros(2), {1, 2}, CoefficientMatrix{{1}, {0}}, {{0, 0}}, {5, 5}, 1.0),
               std::invalid_argument);
}

TEST(PerSlotObjective, Examples) {
  EXPECT_DOUBLE_EQ(per_slot_objective(one_resource(10, 1, 1, 0, 5), {0}), 5.0);
  EXPECT_NEAR(per_slot_objective(one_resource(1, 1, 0, 0, 5), {2}), 0.11920292202211755, 1e-15);
  EXPECT_THROW(per_slot_objective(one_resource(1, 1, 0, 0, 5), {6}), std::invalid_argument);
  EXPECT_THROW(per_slot_objective(one_resource(1, 1, 0, 0, 5), {-1}), std::invalid_argument);
}

TEST(PriorityOrder, Examples) {
  SlotProblem p{0, {1, 2}, {1, 1}, {1, 1}, 1, {}};
  EXPECT_EQ(priority_order(p), (std::vector<std::size_t>{1, 0}));
  p.queues = {0, 1};
  EXPECT_EQ(priority_order(p), (std::vector<std::size_t>{0, 1}));
  p = {0, {1, 2, 3}, {1, 2, 3}, {1, 1, 1}, 1, {}};
  EXPECT_EQ(priority_order(p), (std::vector<std::size_t>{0, 1, 2}));
}

TEST(ClosedForm, Examples) {
  EXPECT_EQ(closed_form_rk(one_resource(10, 1, 0, 0, 7), 0, 0.0), 7.0);
  EXPECT_EQ(closed_form_rk(one_resource(1, 1, 0.3, 0, 7), 0, 0.0), 0.0);
}

TEST(ClosedForm, InteriorRootMinimisesAgainstFineGrid) {
  const SlotProblem p = one_resource(40, 1, 1, 0, 20);
  const double r = closed_form_rk(p, 0, 0.0);
  EXPECT_NEAR(r, std::log(-1.0 + (40.0 + std::sqrt(1440.0)) / 2.0), 1e-12);
  EXPECT_NEAR(r, 3.6369, 1e-4);
  EXPECT_LE(per_slot_objective(p, {r}), brute_1d(p, 1e-4) + 1e-9);
  EXPECT_LT(check_kkt(p, {r}).max_interior_residual, 1e-9);
}

TEST(ClosedForm, RandomOneDimensionalAgainstGrid) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0, 1);
  for (int rep = 0; rep < 100; ++rep) {
    const double theta = 1 + 99 * u(rng), a = 0.01 + 2 * u(rng);
    const SlotProblem p = one_resource(theta, a, theta * a / 4 * u(rng), -5 + 10 * u(rng), 0.5 + 9.5 * u(rng));
    EXPECT_LE(per_slot_objective(p, solve_per_slot(p)), brute_1d(p, 1e-3) + 1e-6);
  }
}

TEST(SolvePerSlot, EmptyQueuesSaturate) {
  const SlotProblem p{0.3, {1, 0.5}, {0, 0}, {4, 2}, 10, {}};
  EXPECT_EQ(solve_per_slot(p), (ResourceVector{4, 2}));
}

TEST(SolvePerSlot, ZeroThetaAllocatesNothing) {
  EXPECT_EQ(solve_per_slot(one_resource(0, 1, 1, 0, 5)), (ResourceVector{0}));
  EXPECT_EQ(solve_per_slot(one_resource(0, 1, 0, 0, 5)), (ResourceVector{0}));
}

TEST(SolvePerSlot, GridExamples) {
  const SlotProblem p = one_resource(10, 1, 0, 0, 5);
  EXPECT_EQ(solve_per_slot(p), (ResourceVector{5}));
  EXPECT_EQ(grid_oracle(p, 0.01), (ResourceVector{5}));
}

TEST(SolvePerSlot, ExcludedResourcesGetZero) {
  SlotProblem p{0.0, {-1.0, 1.0}, {0.0, 0.0}, {3.0, 3.0}, 5.0, {true, false}};
  EXPECT_EQ(solve_per_slot(p)[0], 0.0);
}

TEST(SolvePerSlot, InvalidProblemThrows) {
  SlotProblem p = one_resource(1, 1, -1, 0, 1);
  EXPECT_THROW(solve_per_slot(p), std::invalid_argument);
  p = one_resource(-1, 1, 1, 0, 1);
  EXPECT_THROW(solve_per_slot(p), std::invalid_argument);
}

// Objective no worse than the grid, sequential, and stationary where interior.
TEST(SolvePerSlot, MatchesGridOracleOnRandomInstances) {
  Rng rng(31337);
  for (int i = 0; i < 200; ++i) {
    const SlotProblem p = cli::random_slot_problem(rng);
    const ResourceVector r = solve_per_slot(p);
    const ResourceVector g = grid_oracle(p, p.size() == 3 ? 0.02 : 0.01);
    ASSERT_LE(per_slot_objective(p, r), per_slot_objective(p, g) + 1e-3) << i;
    const KktReport kkt = check_kkt(p, r);
    EXPECT_TRUE(kkt.sequential) << i;
    EXPECT_LT(kkt.max_interior_residual, 1e-6) << i;
  }
}

TEST(SolvePerSlot, CandidatesCoverEveryPrefix) {
  const SlotProblem p{-2.0, {1.0, 0.5, 2.0}, {0.5, 0.2, 3.0}, {2, 2, 2}, 30, {}};
  SolveOptions opt;
  opt.keep_candidates = true;
  const SlotSolution sol = solve_per_slot_detailed(p, opt);
  ASSERT_EQ(sol.candidates.size(), 4u);
  double best = std::numeric_limits<double>::infinity();
  for (const auto& c : sol.candidates) {
    EXPECT_NEAR(c.objective, per_slot_objective(p, c.allocation), 1e-12);
    best = std::min(best, c.objective);
  }
  EXPECT_DOUBLE_EQ(sol.objective, best);
}

// The sufficient condition used as a gate can discard the true optimum: a
// user already far on the positive side has h' ~ 0 at zero allocation.
TEST(SolvePerSlot, GateRestrictionCanLoseOptimum) {
  const SlotProblem p = one_resource(100, 1, 0.5, -8, 20);
  SolveOptions gated;
  gated.restrict_to_gated = true;
  const double free_obj = solve_per_slot_detailed(p).objective;
  const double gated_obj = solve_per_slot_detailed(p, gated).objective;
  EXPECT_LT(free_obj, gated_obj - 1.0);
  EXPECT_LE(free_obj, per_slot_objective(p, grid_oracle(p, 0.01)) + 1e-9);
}

TEST(GridOracle, RejectsFourActiveResources) {
  const SlotProblem p{0, {1, 1, 1, 1}, {1, 1, 1, 1}, {1, 1, 1, 1}, 1, {}};
  EXPECT_THROW(grid_oracle(p, 0.1), UnsupportedError);
  EXPECT_NO_THROW(solve_per_slot(p));
}

TEST(Kkt, FlagsNonSequentialAllocation) {
  const SlotProblem p{0, {2, 1}, {1, 1}, {1, 1}, 10, {}};
  EXPECT_FALSE(check_kkt(p, {0.0, 0.5}).sequential);
  EXPECT_TRUE(check_kkt(p, {1.0, 0.5}).sequential);
}
