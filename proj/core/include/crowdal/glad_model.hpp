#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

#include "crowdal/label_matrix.hpp"
#include "crowdal/types.hpp"

namespace crowdal {

/// Worker expertise alpha and log task ease gamma, with beta = exp(gamma) > 0.
struct ModelParams {
  std::vector<double> alpha;
  std::vector<double> gamma;

  static ModelParams uniform(std::size_t workers, std::size_t tasks, double alpha0 = 1.0,
                             double gamma0 = 0.0) {
    return {std::vector<double>(workers, alpha0), std::vector<double>(tasks, gamma0)};
  }

  double beta(TaskIndex task) const { return std::exp(gamma[task]); }
  std::vector<double> betas() const;

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

/// P(z_j = +1 | L, theta) per task.
using Posterior = std::vector<double>;

struct GaussianPrior {
  double mean = 0.0;
  double stddev = 1.0;
};

struct PriorConfig {
  double pi = 0.5;  ///< class prior P(z = +1)
  std::optional<GaussianPrior> alpha_reg;
  std::optional<GaussianPrior> gamma_reg;

  /// Throws DomainError unless pi is in (0,1) and regularizer stddevs are positive.
  void validate() const;
};

struct ParamBounds {
  double alpha_min = -10.0;
  double alpha_max = 10.0;
  double gamma_min = -5.0;
  double gamma_max = 5.0;
};

struct OptimizerConfig {
  int max_steps = 50;
  double tolerance = 1e-6;  ///< projected gradient norm
  ParamBounds bounds;
};

struct EmConfig {
  int max_rounds = 50;
  double rel_tolerance = 1e-6;
  OptimizerConfig optimizer;
};

struct QGradient {
  std::vector<double> alpha;
  std::vector<double> gamma;
};

/// 1 / (1 + exp(-alpha * beta)). Throws DomainError for non-finite alpha or beta <= 0.
double correct_label_prob(double alpha, double beta);

/// Posterior over the true label of each task, computed in log space.
Posterior e_step(const LabelMatrix& labels, const ModelParams& theta, const PriorConfig& prior);

/// Expected complete-data log-likelihood under `posterior`, plus regularizer
/// log-densities when configured.
double q_function(const LabelMatrix& labels, const Posterior& posterior, const ModelParams& theta,
                  const PriorConfig& prior);

/// Analytic partial derivatives of q_function w.r.t. alpha and gamma.
QGradient q_gradient(const LabelMatrix& labels, const Posterior& posterior,
                     const ModelParams& theta, const PriorConfig& prior);

/// Marginal log-likelihood ln p(L | theta) plus regularizer log-densities.
/// EM never decreases it.
double log_likelihood(const LabelMatrix& labels, const ModelParams& theta,
                      const PriorConfig& prior);

struct MStepResult {
  ModelParams params;
  int steps = 0;
  double q_before = 0.0;
  double q_after = 0.0;
  double gradient_norm = 0.0;  ///< projected, at the returned params
};

/// Maximizes q_function over theta for a fixed posterior.
///
/// Each step moves along the analytic gradient rescaled by a damped Newton
/// system over all free coordinates (coordinates pinned at a bound are held),
/// halving the step until Q does not decrease. Parameters are projected onto
/// the box in `opt.bounds`; the input must already lie inside it. Stops when
/// the projected gradient norm is at most opt.tolerance, after opt.max_steps,
/// or when no step improves Q beyond its rounding level.
MStepResult m_step(const LabelMatrix& labels, const Posterior& posterior, const ModelParams& theta,
                   const PriorConfig& prior, const OptimizerConfig& opt);

struct EmRound {
  double q_start = 0.0;        ///< Q(theta_t, posterior_t)
  double q_after_mstep = 0.0;  ///< Q(theta_{t+1}, posterior_t)
  double q_end = 0.0;          ///< Q(theta_{t+1}, posterior_{t+1})
  double log_likelihood = 0.0; ///< at theta_{t+1}
  int mstep_steps = 0;
};

struct EmResult {
  ModelParams params;
  Posterior posterior;  ///< e_step at params
  std::vector<EmRound> rounds;
  double initial_log_likelihood = 0.0;
  bool converged = false;
};

/// Alternates e_step and m_step from theta0 until the round-to-round change
/// in Q is at most rel_tolerance * |Q| or max_rounds is reached.
EmResult em_fit(const LabelMatrix& labels, const ModelParams& theta0, const PriorConfig& prior,
                const EmConfig& em);

/// +1 when p > 0.5 or p == 0.5, -1 when p < 0.5.
std::vector<Label> predict_labels(const Posterior& posterior);

}  // namespace crowdal
