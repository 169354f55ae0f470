#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "crowdal/sampling.hpp"

using namespace crowdal;

namespace {

// -0.9 ln 0.9 - 0.1 ln 0.1, from a 30-digit evaluation.
constexpr double kRiskNineTenths = 0.3250829733914482;

std::vector<WorkerIndex> all_workers(std::size_t m) {
  std::vector<WorkerIndex> v(m);
  std::iota(v.begin(), v.end(), 0);
  return v;
}

double sum(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

}  // namespace

TEST(Risk, Examples) {
  EXPECT_NEAR(risk(0.5), std::log(2.0), 1e-15);
  EXPECT_EQ(risk(1.0), 0.0);
  EXPECT_EQ(risk(0.0), 0.0);
  EXPECT_NEAR(risk(0.9), kRiskNineTenths, 1e-15);
}

TEST(Risk, OutsideUnitIntervalIsDomainError) {
  EXPECT_THROW(risk(-0.01), DomainError);
  EXPECT_THROW(risk(1.01), DomainError);
  EXPECT_THROW(risk(std::nan("")), DomainError);
}

TEST(Risk, SymmetricAndUnimodal) {
  double prev = risk(0.0);
  for (int k = 1; k <= 500; ++k) {
    const double p = k / 1000.0;
    EXPECT_NEAR(risk(p), risk(1.0 - p), 1e-15);
    const double cur = risk(p);
    EXPECT_GT(cur, prev);
    prev = cur;
  }
  for (int k = 501; k <= 1000; ++k) {
    const double cur = risk(k / 1000.0);
    EXPECT_LT(cur, prev);
    prev = cur;
  }
}

TEST(SelectTask, ProposedPicksMaximumRisk) {
  Eligibility e(2, 3, 1);
  TaskStrategy s{TaskPolicy::Proposed, 0};
  RandomStream rng(1);
  EXPECT_EQ(select_task({0.9, 0.5, 0.99}, e, s, rng), 1u);
}

TEST(SelectTask, ProposedTieGoesToSmallestIndex) {
  Eligibility e(2, 2, 1);
  TaskStrategy s{TaskPolicy::Proposed, 0};
  RandomStream rng(1);
  EXPECT_EQ(select_task({0.5, 0.5}, e, s, rng), 0u);
  // 0.3 and 0.7 have equal entropy
  EXPECT_EQ(select_task({0.7, 0.3}, e, s, rng), 0u);
}

TEST(SelectTask, ProposedSkipsTasksWithoutEligibleWorkers) {
  Eligibility e(1, 3, 1);
  e.consume(0, 1);
  TaskStrategy s{TaskPolicy::Proposed, 0};
  RandomStream rng(1);
  EXPECT_EQ(select_task({0.9, 0.5, 0.8}, e, s, rng), 2u);
}

TEST(SelectTask, ProposedInvariantUnderMonotoneRiskTransform) {
  // argmax of risk equals argmin of |p - 0.5|, a different monotone score
  RandomStream gen(8);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> p(7);
    for (double& v : p) v = gen.uniform();
    Eligibility e(1, 7, 1);
    TaskStrategy s{TaskPolicy::Proposed, 0};
    const auto chosen = *select_task(p, e, s, gen);
    std::size_t best = 0;
    for (std::size_t j = 1; j < p.size(); ++j) {
      if (std::abs(p[j] - 0.5) < std::abs(p[best] - 0.5)) best = j;
    }
    EXPECT_EQ(chosen, best);
  }
}

TEST(SelectTask, TraversalSkipsCyclically) {
  Eligibility e(1, 3, 1);
  e.consume(0, 2);
  TaskStrategy s{TaskPolicy::Traversal, 2};
  RandomStream rng(1);
  EXPECT_EQ(select_task({0.5, 0.5, 0.5}, e, s, rng), 0u);
  EXPECT_EQ(s.cursor, 1u);
  EXPECT_EQ(select_task({0.5, 0.5, 0.5}, e, s, rng), 1u);
  EXPECT_EQ(select_task({0.5, 0.5, 0.5}, e, s, rng), 0u);
}

TEST(SelectTask, RandomStaysEligibleAndCoversAll) {
  Eligibility e(1, 5, 1);
  e.consume(0, 3);
  TaskStrategy s{TaskPolicy::Random, 0};
  RandomStream rng(4);
  std::vector<int> counts(5, 0);
  for (int k = 0; k < 4000; ++k) ++counts[*select_task(std::vector<double>(5, 0.5), e, s, rng)];
  EXPECT_EQ(counts[3], 0);
  for (int j : {0, 1, 2, 4}) EXPECT_NEAR(counts[j], 1000, 4 * std::sqrt(4000 * 0.25 * 0.75));
}

TEST(SelectTask, ExhaustionReturnsNullopt) {
  Eligibility e(1, 2, 1);
  e.consume(0, 0);
  e.consume(0, 1);
  RandomStream rng(1);
  for (auto policy : {TaskPolicy::Proposed, TaskPolicy::Traversal, TaskPolicy::Random}) {
    TaskStrategy s{policy, 0};
    EXPECT_FALSE(select_task({0.5, 0.5}, e, s, rng).has_value());
  }
}

TEST(WeightedProbs, Examples) {
  const std::vector<double> a{2, 1, 1};
  const auto p = weighted_probs(a, all_workers(3));
  EXPECT_NEAR(p[0], 0.5, 1e-15);
  EXPECT_NEAR(p[1], 0.25, 1e-15);
  EXPECT_NEAR(p[2], 0.25, 1e-15);

  const std::vector<double> single{3};
  EXPECT_EQ(weighted_probs(single, all_workers(1)), std::vector<double>{1.0});

  const std::vector<double> negative{-5, 1};
  const auto q = weighted_probs(negative, all_workers(2));
  EXPECT_NEAR(q[0], 1e-6 / (1 + 1e-6), 1e-18);
  EXPECT_NEAR(q[1], 1 / (1 + 1e-6), 1e-15);
}

TEST(WeightedProbs, ProperOverEligibleSubset) {
  const std::vector<double> a{0.3, 2.0, -1.0, 0.7, 1.1};
  const std::vector<WorkerIndex> eligible{1, 2, 4};
  const auto p = weighted_probs(a, eligible);
  ASSERT_EQ(p.size(), 3u);
  EXPECT_NEAR(sum(p), 1.0, 1e-12);
  for (double v : p) EXPECT_GE(v, 0.0);
  EXPECT_NEAR(p[0] / p[2], 2.0 / 1.1, 1e-12);
  EXPECT_THROW(weighted_probs(a, {}), ContractError);
}

TEST(EpsilonGreedyProbs, Examples) {
  std::vector<double> a(24, 1.0);
  a[5] = 3.0;
  const auto p = epsilon_greedy_probs(a, all_workers(24), 0.5);
  EXPECT_NEAR(p[5], 0.5 + 0.5 / 24, 1e-15);
  EXPECT_NEAR(p[5], 0.5208333333333334, 1e-15);
  EXPECT_NEAR(p[0], 0.5 / 24, 1e-15);
  EXPECT_NEAR(sum(p), 1.0, 1e-12);

  std::vector<double> b(20, 0.0);
  b[0] = 1.0;
  const auto q = epsilon_greedy_probs(b, all_workers(20), 0.1);
  EXPECT_NEAR(q[0], 0.905, 1e-15);
  for (std::size_t k = 1; k < 20; ++k) EXPECT_NEAR(q[k], 0.005, 1e-15);

  const auto r = epsilon_greedy_probs(b, all_workers(20), 0.0);
  EXPECT_EQ(r[0], 1.0);
}

TEST(EpsilonGreedyProbs, TieAndDomain) {
  const std::vector<double> a{1.0, 2.0, 2.0};
  const auto p = epsilon_greedy_probs(a, all_workers(3), 0.3);
  EXPECT_NEAR(p[1], 0.7 + 0.1, 1e-15);
  EXPECT_NEAR(p[2], 0.1, 1e-15);
  EXPECT_THROW(epsilon_greedy_probs(a, all_workers(3), 1.0), DomainError);
  EXPECT_THROW(epsilon_greedy_probs(a, all_workers(3), -0.1), DomainError);
}

TEST(SelectWorker, BestWorkerExamples) {
  RandomStream rng(1);
  const WorkerStrategy best{};
  const std::vector<double> a{0.2, 1.7, 1.7};
  EXPECT_EQ(select_worker(a, all_workers(3), best, rng), 1u);
  const std::vector<double> b{9, 1};
  EXPECT_EQ(select_worker(b, std::vector<WorkerIndex>{1}, best, rng), 1u);
  EXPECT_THROW(select_worker(b, {}, best, rng), ContractError);
}

TEST(SelectWorker, EpsilonGreedyFrequencyWithinThreeSigma) {
  std::vector<double> a(24, 0.5);
  a[7] = 2.0;
  RandomStream rng(2024);
  const WorkerStrategy s{WorkerPolicy::EpsilonGreedy, 0.5};
  const int n = 10000;
  int hits = 0;
  for (int k = 0; k < n; ++k) hits += select_worker(a, all_workers(24), s, rng) == 7;
  const double p = 0.5 + 0.5 / 24;
  EXPECT_NEAR(hits, n * p, 3 * std::sqrt(n * p * (1 - p)));
}

TEST(SelectWorker, RandomizedPoliciesConsumeOneDraw) {
  const std::vector<double> a{0.5, 1.5, 1.0};
  for (const WorkerStrategy s : {WorkerStrategy{WorkerPolicy::Weighted, 0.0},
                                 WorkerStrategy{WorkerPolicy::EpsilonGreedy, 0.2},
                                 WorkerStrategy{WorkerPolicy::Uniform, 0.0}}) {
    RandomStream used(5), reference(5);
    select_worker(a, all_workers(3), s, used);
    reference.next_u64();
    EXPECT_EQ(used.next_u64(), reference.next_u64());
  }
  RandomStream untouched(5), reference(5);
  select_worker(a, all_workers(3), WorkerStrategy{}, untouched);
  EXPECT_EQ(untouched.next_u64(), reference.next_u64());
}

TEST(SelectWorker, NeverLeavesEligibleSet) {
  const std::vector<double> a{5.0, 0.1, 3.0, 2.0};
  const std::vector<WorkerIndex> eligible{1, 3};
  RandomStream rng(6);
  for (const WorkerStrategy s :
       {WorkerStrategy{}, WorkerStrategy{WorkerPolicy::Weighted, 0.0},
        WorkerStrategy{WorkerPolicy::EpsilonGreedy, 0.9}, WorkerStrategy{WorkerPolicy::Uniform, 0.0}}) {
    for (int k = 0; k < 200; ++k) {
      const auto w = select_worker(a, eligible, s, rng);
      EXPECT_TRUE(w == 1 || w == 3);
    }
  }
}

TEST(WorkerStrategy, ValidateAndNames) {
  EXPECT_THROW((WorkerStrategy{WorkerPolicy::EpsilonGreedy, 1.0}.validate()), DomainError);
  EXPECT_NO_THROW((WorkerStrategy{WorkerPolicy::EpsilonGreedy, 0.0}.validate()));
  EXPECT_EQ(to_string(TaskPolicy::Traversal), "traversal");
  EXPECT_EQ(to_string(WorkerStrategy{WorkerPolicy::EpsilonGreedy, 0.5}), "egreedy0.5");
}

TEST(Eligibility, ConsumeRemovesPairPermanently) {
  Eligibility e(2, 2, 1);
  EXPECT_EQ(e.eligible_task_count(), 2u);
  e.consume(0, 0);
  EXPECT_FALSE(e.is_eligible(0, 0));
  EXPECT_EQ(e.eligible_workers(0), std::vector<WorkerIndex>{1});
  EXPECT_THROW(e.consume(0, 0), ContractError);
  e.consume(1, 0);
  EXPECT_FALSE(e.task_has_eligible(0));
  EXPECT_EQ(e.eligible_task_count(), 1u);
  EXPECT_TRUE(e.any());
}

TEST(Eligibility, CapacityFunction) {
  Eligibility e(2, 1, [](WorkerIndex i, TaskIndex) { return i == 0 ? 2u : 0u; });
  EXPECT_EQ(e.remaining(0, 0), 2u);
  EXPECT_EQ(e.eligible_worker_count(0), 1u);
  e.consume(0, 0);
  EXPECT_TRUE(e.is_eligible(0, 0));
  e.consume(0, 0);
  EXPECT_FALSE(e.any());
}
