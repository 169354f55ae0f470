#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "crowdal/glad_model.hpp"
#include "oracles.hpp"

using namespace crowdal;

namespace {

// 1 / (1 + e^-1), from a 30-digit evaluation.
constexpr double kSigmoidOne = 0.7310585786300049;
// ln 0.5 + ln 0.9 and ln 0.5, from a 30-digit evaluation.
constexpr double kLogHalfPlusLogNineTenths = -0.7985076962177716;
constexpr double kLogHalf = -0.6931471805599453;

const PriorConfig kFlatPrior{};
const PriorConfig kRegularized{0.5, GaussianPrior{1.0, 1.0}, GaussianPrior{0.0, 1.0}};

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) d = std::max(d, std::abs(a[k] - b[k]));
  return d;
}

// Relative error with a small floor so gradients near zero are compared on an
// absolute scale.
double rel_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-3});
}

LabelMatrix three_task_instance() {
  LabelMatrix l(2, 3);
  for (WorkerIndex i = 0; i < 2; ++i) {
    l.add(i, 0, Label::Positive);
    l.add(i, 1, Label::Positive);
    l.add(i, 2, Label::Negative);
  }
  return l;
}

}  // namespace

TEST(CorrectLabelProb, Examples) {
  EXPECT_EQ(correct_label_prob(0.0, 5.0), 0.5);
  EXPECT_NEAR(correct_label_prob(1.0, 1.0), kSigmoidOne, 1e-15);
  EXPECT_GE(correct_label_prob(10.0, 5.0), 1.0 - 1e-20);
  EXPECT_LT(correct_label_prob(-10.0, 5.0), 1e-20);
}

TEST(CorrectLabelProb, RejectsBadArguments) {
  EXPECT_THROW(correct_label_prob(1.0, 0.0), DomainError);
  EXPECT_THROW(correct_label_prob(1.0, -1.0), DomainError);
  EXPECT_THROW(correct_label_prob(1.0, std::numeric_limits<double>::infinity()), DomainError);
  EXPECT_THROW(correct_label_prob(std::nan(""), 1.0), DomainError);
}

TEST(CorrectLabelProb, StrictlyIncreasingInAlphaAndBeta) {
  for (double beta : {0.1, 0.7, 1.0, 3.0}) {
    double prev = correct_label_prob(-4.0, beta);
    for (double a = -3.9; a <= 4.0; a += 0.1) {
      const double cur = correct_label_prob(a, beta);
      EXPECT_GT(cur, prev);
      EXPECT_GT(cur, 0.0);
      EXPECT_LT(cur, 1.0);
      prev = cur;
    }
  }
  for (double alpha : {0.2, 1.0, 2.5}) {
    double prev = correct_label_prob(alpha, 0.05);
    for (double b = 0.1; b <= 4.0; b += 0.05) {
      const double cur = correct_label_prob(alpha, b);
      EXPECT_GT(cur, prev);
      prev = cur;
    }
  }
}

TEST(EStep, TaskWithoutLabelsGetsPrior) {
  LabelMatrix l(1, 2);
  l.add(0, 0, Label::Positive);
  const auto theta = ModelParams::uniform(1, 2);
  EXPECT_EQ(e_step(l, theta, kFlatPrior)[1], 0.5);
  PriorConfig skewed;
  skewed.pi = 0.3;
  EXPECT_EQ(e_step(l, theta, skewed)[1], 0.3);
}

TEST(EStep, SingleLabelFromNinetyPercentWorker) {
  LabelMatrix l(1, 1);
  l.add(0, 0, Label::Positive);
  ModelParams theta{{std::log(9.0)}, {0.0}};  // sigmoid(ln 9) = 0.9
  EXPECT_NEAR(e_step(l, theta, kFlatPrior)[0], 0.9, 1e-12);
}

TEST(EStep, OppositeLabelsFromIdenticalWorkersCancel) {
  LabelMatrix l(2, 1);
  l.add(0, 0, Label::Positive);
  l.add(1, 0, Label::Negative);
  ModelParams theta{{1.3, 1.3}, {0.4}};
  EXPECT_NEAR(e_step(l, theta, kFlatPrior)[0], 0.5, 1e-15);
}

TEST(EStep, MatchesEnumeratedBayesOnRandomInstances) {
  std::mt19937_64 gen(2024);
  for (int trial = 0; trial < 200; ++trial) {
    const auto inst = oracle::random_instance(gen, 4, 6, 12);
    const double pi = trial % 2 ? 0.5 : 0.35;
    PriorConfig prior;
    prior.pi = pi;
    const auto p = e_step(inst.labels, inst.theta, prior);
    const auto expected = oracle::enumerated_posterior(inst.labels, inst.theta, pi);
    ASSERT_LT(max_abs_diff(p, expected), 1e-10) << "trial " << trial;
    for (double v : p) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
      // both branches sum to one by construction of the returned value
      EXPECT_NEAR(v + (1.0 - v), 1.0, 1e-12);
    }
  }
}

TEST(EStep, StableForExtremeParameters) {
  LabelMatrix l(3, 1);
  for (WorkerIndex i = 0; i < 3; ++i) l.add(i, 0, Label::Positive);
  ModelParams theta{{10.0, 10.0, 10.0}, {5.0}};
  const auto p = e_step(l, theta, kFlatPrior);
  EXPECT_TRUE(std::isfinite(p[0]));
  EXPECT_EQ(p[0], 1.0);
}

TEST(EStep, DimensionMismatchIsContractError) {
  LabelMatrix l(2, 2);
  EXPECT_THROW(e_step(l, ModelParams::uniform(3, 2), kFlatPrior), ContractError);
  EXPECT_THROW(e_step(l, ModelParams::uniform(2, 1), kFlatPrior), ContractError);
}

TEST(PriorConfig, Validation) {
  PriorConfig p;
  p.pi = 0.0;
  EXPECT_THROW(p.validate(), DomainError);
  p.pi = 1.0;
  EXPECT_THROW(p.validate(), DomainError);
  p.pi = 0.5;
  p.alpha_reg = GaussianPrior{1.0, 0.0};
  EXPECT_THROW(p.validate(), DomainError);
}

TEST(QFunction, EmptyMatrixLeavesOnlyPrior) {
  LabelMatrix l(1, 1);
  EXPECT_NEAR(q_function(l, {0.5}, ModelParams::uniform(1, 1), kFlatPrior), kLogHalf, 1e-15);
}

TEST(QFunction, DegeneratePosteriorSingleEvent) {
  LabelMatrix l(1, 1);
  l.add(0, 0, Label::Positive);
  ModelParams theta{{std::log(9.0)}, {0.0}};
  EXPECT_NEAR(q_function(l, {1.0}, theta, kFlatPrior), kLogHalfPlusLogNineTenths, 1e-15);
}

TEST(QFunction, MatchesDirectDefinition) {
  std::mt19937_64 gen(77);
  for (int trial = 0; trial < 100; ++trial) {
    const auto inst = oracle::random_instance(gen, 5, 6, 20);
    const double q = q_function(inst.labels, inst.posterior, inst.theta, kFlatPrior);
    const double expected = oracle::direct_q(inst.labels, inst.posterior, inst.theta, 0.5);
    EXPECT_NEAR(q, expected, 1e-10 * std::max(1.0, std::abs(expected)));
  }
}

TEST(QFunction, RegularizerAddsGaussianLogDensity) {
  LabelMatrix l(1, 1);
  PriorConfig prior;
  prior.alpha_reg = GaussianPrior{1.0, 2.0};
  ModelParams theta{{3.0}, {0.0}};
  const double base = q_function(l, {0.5}, theta, kFlatPrior);
  const double z = (3.0 - 1.0) / 2.0;
  const double density = -0.5 * z * z - std::log(2.0) - 0.5 * std::log(2.0 * M_PI);
  EXPECT_NEAR(q_function(l, {0.5}, theta, prior) - base, density, 1e-14);
}

TEST(QGradient, OpposingLabelsAtHalfPosterior) {
  LabelMatrix both(2, 2), one(2, 2);
  both.add(0, 0, Label::Positive);
  both.add(0, 0, Label::Negative);
  both.add(1, 1, Label::Positive);
  one.add(0, 0, Label::Positive);
  one.add(1, 1, Label::Positive);
  // at alpha = 0 every label is a coin flip and the gradient vanishes
  const ModelParams at_zero{{0.0, 1.2}, {0.3, -0.2}};
  EXPECT_EQ(q_gradient(both, {0.5, 0.5}, at_zero, kFlatPrior).alpha[0], 0.0);
  // elsewhere the +1 and -1 labels pull alpha the same way, toward zero
  const ModelParams theta{{0.8, 1.2}, {0.3, -0.2}};
  const double g_both = q_gradient(both, {0.5, 0.5}, theta, kFlatPrior).alpha[0];
  const double g_one = q_gradient(one, {0.5, 0.5}, theta, kFlatPrior).alpha[0];
  EXPECT_NEAR(g_both, 2.0 * g_one, 1e-15);
  EXPECT_LT(g_both, 0.0);
}

TEST(QGradient, RegularizerOnlyGradient) {
  LabelMatrix l(3, 1);
  PriorConfig prior;
  prior.alpha_reg = GaussianPrior{1.0, 1.0};
  ModelParams theta{{-2.0, 0.5, 4.0}, {0.0}};
  const auto g = q_gradient(l, {0.5}, theta, prior);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(g.alpha[i], 1.0 - theta.alpha[i], 1e-15);
  EXPECT_EQ(g.gamma[0], 0.0);
}

TEST(QGradient, MatchesCentralDifferences) {
  std::mt19937_64 gen(5);
  const double h = 1e-5;
  PriorConfig regularized;
  regularized.alpha_reg = GaussianPrior{1.0, 1.5};
  regularized.gamma_reg = GaussianPrior{0.0, 2.0};
  for (int trial = 0; trial < 100; ++trial) {
    const auto inst = oracle::random_instance(gen, 3, 4, 8);
    const PriorConfig& prior = trial % 3 == 0 ? regularized : kFlatPrior;
    const auto g = q_gradient(inst.labels, inst.posterior, inst.theta, prior);
    auto q_at = [&](const ModelParams& t) { return q_function(inst.labels, inst.posterior, t, prior); };
    for (std::size_t i = 0; i < inst.theta.alpha.size(); ++i) {
      ModelParams up = inst.theta, down = inst.theta;
      up.alpha[i] += h;
      down.alpha[i] -= h;
      const double fd = (q_at(up) - q_at(down)) / (2 * h);
      EXPECT_LT(rel_error(g.alpha[i], fd), 1e-5) << "trial " << trial << " alpha " << i;
    }
    for (std::size_t j = 0; j < inst.theta.gamma.size(); ++j) {
      ModelParams up = inst.theta, down = inst.theta;
      up.gamma[j] += h;
      down.gamma[j] -= h;
      const double fd = (q_at(up) - q_at(down)) / (2 * h);
      EXPECT_LT(rel_error(g.gamma[j], fd), 1e-5) << "trial " << trial << " gamma " << j;
    }
  }
}

TEST(MStep, StationaryPointIsFixed) {
  const LabelMatrix l = three_task_instance();
  const Posterior post{0.9, 0.8, 0.2};
  OptimizerConfig opt;
  const auto first = m_step(l, post, ModelParams::uniform(2, 3), kFlatPrior, opt);
  ASSERT_LE(first.gradient_norm, opt.tolerance);
  const auto second = m_step(l, post, first.params, kFlatPrior, opt);
  EXPECT_EQ(second.params, first.params);
  EXPECT_EQ(second.steps, 0);
}

TEST(MStep, NoEvidenceLeavesThetaUnchanged) {
  LabelMatrix l(2, 2);
  ModelParams theta{{0.3, -1.0}, {0.5, 0.0}};
  EXPECT_EQ(m_step(l, {0.5, 0.5}, theta, kFlatPrior, {}).params, theta);
}

TEST(MStep, AgreeingDegenerateLabelDrivesAlphaToBound) {
  LabelMatrix l(1, 1);
  l.add(0, 0, Label::Positive);
  OptimizerConfig fixed_ease;
  fixed_ease.bounds.gamma_min = fixed_ease.bounds.gamma_max = 0.0;
  const auto r = m_step(l, {1.0}, ModelParams::uniform(1, 1), kFlatPrior, fixed_ease);
  EXPECT_EQ(r.params.alpha[0], 10.0);
  EXPECT_EQ(r.params.gamma[0], 0.0);
  EXPECT_GT(r.q_after, r.q_before);

  // with beta free as well, the product saturates before alpha reaches its bound
  const auto free = m_step(l, {1.0}, ModelParams::uniform(1, 1), kFlatPrior, {});
  EXPECT_GT(free.params.alpha[0], 1.0);
  EXPECT_GT(free.params.gamma[0], 0.0);
  EXPECT_GT(correct_label_prob(free.params.alpha[0], free.params.beta(0)), 1.0 - 1e-6);
}

TEST(MStep, FirstStepFromZeroStrictlyIncreasesQ) {
  LabelMatrix l(3, 4);
  l.add(0, 0, Label::Positive);
  l.add(1, 0, Label::Positive);
  l.add(2, 1, Label::Negative);
  l.add(0, 1, Label::Negative);
  l.add(1, 2, Label::Positive);
  l.add(2, 2, Label::Negative);
  l.add(0, 3, Label::Positive);
  l.add(2, 3, Label::Positive);
  const Posterior post{0.95, 0.1, 0.6, 0.85};
  const ModelParams zero = ModelParams::uniform(3, 4, 0.0, 0.0);
  const auto g = q_gradient(l, post, zero, kFlatPrior);
  double norm = 0.0;
  for (double v : g.alpha) norm += v * v;
  ASSERT_GT(norm, 0.0);
  OptimizerConfig one_step;
  one_step.max_steps = 1;
  const auto r = m_step(l, post, zero, kFlatPrior, one_step);
  EXPECT_EQ(r.steps, 1);
  EXPECT_GT(q_function(l, post, r.params, kFlatPrior), q_function(l, post, zero, kFlatPrior));
}

TEST(MStep, AscentAndBoundsOnRandomInstances) {
  std::mt19937_64 gen(99);
  OptimizerConfig opt;
  for (int trial = 0; trial < 100; ++trial) {
    const auto inst = oracle::random_instance(gen, 5, 8, 25);
    const auto r = m_step(inst.labels, inst.posterior, inst.theta, kFlatPrior, opt);
    const double before = q_function(inst.labels, inst.posterior, inst.theta, kFlatPrior);
    const double after = q_function(inst.labels, inst.posterior, r.params, kFlatPrior);
    EXPECT_GE(after, before - 1e-9);
    EXPECT_EQ(after, r.q_after);
    EXPECT_LE(r.steps, opt.max_steps);
    for (double a : r.params.alpha) {
      EXPECT_GE(a, -10.0);
      EXPECT_LE(a, 10.0);
    }
    for (double g : r.params.gamma) {
      EXPECT_GE(g, -5.0);
      EXPECT_LE(g, 5.0);
    }
  }
}

TEST(MStep, RespectsCustomBounds) {
  LabelMatrix l(1, 1);
  l.add(0, 0, Label::Positive);
  OptimizerConfig opt;
  opt.bounds.alpha_max = 2.0;
  opt.bounds.gamma_max = 0.5;
  const auto r = m_step(l, {1.0}, ModelParams::uniform(1, 1), kFlatPrior, opt);
  EXPECT_EQ(r.params.alpha[0], 2.0);
  EXPECT_EQ(r.params.gamma[0], 0.5);
}

TEST(MStep, RejectsStartOutsideBounds) {
  LabelMatrix l(1, 1);
  EXPECT_THROW(m_step(l, {0.5}, ModelParams::uniform(1, 1, 11.0), kFlatPrior, {}), ContractError);
  EXPECT_THROW(m_step(l, {0.5, 0.5}, ModelParams::uniform(1, 1), kFlatPrior, {}), ContractError);
}

TEST(EmFit, EmptyMatrixReturnsStartAndPrior) {
  LabelMatrix l(2, 3);
  PriorConfig prior;
  prior.pi = 0.3;
  const auto theta0 = ModelParams::uniform(2, 3);
  const auto r = em_fit(l, theta0, prior, {});
  EXPECT_EQ(r.params, theta0);
  for (double p : r.posterior) EXPECT_EQ(p, 0.3);

  prior.alpha_reg = GaussianPrior{1.0, 1.0};
  prior.gamma_reg = GaussianPrior{0.0, 1.0};
  EXPECT_EQ(em_fit(l, theta0, prior, {}).params, theta0);
}

TEST(EmFit, PosteriorMatchesEnumerationAtReturnedTheta) {
  const LabelMatrix l = three_task_instance();
  const auto r = em_fit(l, ModelParams::uniform(2, 3), kFlatPrior, {});
  const auto expected = oracle::enumerated_posterior(l, r.params, 0.5);
  EXPECT_LT(max_abs_diff(r.posterior, expected), 1e-12);
  EXPECT_EQ(r.posterior, e_step(l, r.params, kFlatPrior));
}

TEST(EmFit, LabelFlipSymmetry) {
  std::mt19937_64 gen(13);
  // the regularizers pin the alpha/beta scale, so the optimum is unique
  for (int trial = 0; trial < 30; ++trial) {
    const auto inst = oracle::random_instance(gen, 4, 6, 20);
    const auto theta0 = ModelParams::uniform(inst.labels.worker_count(), inst.labels.task_count());
    const auto a = em_fit(inst.labels, theta0, kRegularized, {});
    const auto b = em_fit(inst.labels.flipped(), theta0, kRegularized, {});
    ASSERT_EQ(a.rounds.size(), b.rounds.size());
    for (std::size_t j = 0; j < a.posterior.size(); ++j) {
      EXPECT_NEAR(b.posterior[j], 1.0 - a.posterior[j], 1e-9);
    }
    for (std::size_t i = 0; i < a.params.alpha.size(); ++i) {
      EXPECT_NEAR(std::abs(a.params.alpha[i]), std::abs(b.params.alpha[i]), 1e-9);
    }
    const auto pa = predict_labels(a.posterior);
    const auto pb = predict_labels(b.posterior);
    for (std::size_t j = 0; j < pa.size(); ++j) {
      // posteriors within rounding of 0.5 carry no decision
      if (std::abs(a.posterior[j] - 0.5) > 1e-9) {
        EXPECT_EQ(pb[j], negate(pa[j]));
      }
    }
  }
}

TEST(EmFit, RoundsNeverLoseGround) {
  std::mt19937_64 gen(31);
  for (int trial = 0; trial < 50; ++trial) {
    const auto inst = oracle::random_instance(gen, 5, 8, 30);
    const auto r = em_fit(inst.labels,
                          ModelParams::uniform(inst.labels.worker_count(), inst.labels.task_count()),
                          kFlatPrior, {});
    double prev_ll = r.initial_log_likelihood;
    for (const auto& round : r.rounds) {
      EXPECT_GE(round.q_after_mstep, round.q_start - 1e-9);
      EXPECT_GE(round.log_likelihood, prev_ll - 1e-9);
      prev_ll = round.log_likelihood;
    }
  }
}

TEST(EmFit, WarmRestartAtFixpointStaysPut) {
  std::mt19937_64 gen(47);
  for (int trial = 0; trial < 20; ++trial) {
    const auto inst = oracle::random_instance(gen, 4, 8, 30);
    const auto theta0 = ModelParams::uniform(inst.labels.worker_count(), inst.labels.task_count());
    const auto first = em_fit(inst.labels, theta0, kRegularized, {});
    if (!first.converged) continue;
    const auto second = em_fit(inst.labels, first.params, kRegularized, {});
    EXPECT_TRUE(second.converged);
    EXPECT_LT(max_abs_diff(second.params.alpha, first.params.alpha), 1e-3);
    EXPECT_LT(max_abs_diff(second.params.gamma, first.params.gamma), 1e-3);
  }
}

TEST(EmFit, Deterministic) {
  std::mt19937_64 gen(3);
  const auto inst = oracle::random_instance(gen, 4, 6, 20);
  const auto theta0 = ModelParams::uniform(inst.labels.worker_count(), inst.labels.task_count());
  const auto a = em_fit(inst.labels, theta0, kFlatPrior, {});
  const auto b = em_fit(inst.labels, theta0, kFlatPrior, {});
  EXPECT_EQ(a.params, b.params);
  EXPECT_EQ(a.posterior, b.posterior);
}

TEST(PredictLabels, ThresholdAndTie) {
  EXPECT_EQ(predict_labels({0.9, 0.1}), (std::vector<Label>{Label::Positive, Label::Negative}));
  EXPECT_EQ(predict_labels({0.5}), std::vector<Label>{Label::Positive});
  EXPECT_EQ(predict_labels({0.5000001}), std::vector<Label>{Label::Positive});
  EXPECT_EQ(predict_labels({0.4999999}), std::vector<Label>{Label::Negative});
}
