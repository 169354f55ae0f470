#include "crowdal/glad_model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <utility>

namespace crowdal {

namespace {

constexpr double kCurvatureDamping = 1e-8;
// Relative damping of the curvature diagonal. The likelihood is flat along
// (alpha * c, gamma - ln c), so the undamped system is singular.
constexpr double kRelativeDamping = 1e-4;
constexpr double kMaxNewtonStep = 4.0;
constexpr int kMaxHalvings = 40;
constexpr double kRoundingScale = 1e-15;

// ln(sigmoid(x)) and sigmoid(x), stable for large |x|.
struct SigmoidTerms {
  double log_sigma;
  double sigma;
  double sigma_slope;  // sigma * (1 - sigma)
};

inline SigmoidTerms sigmoid_terms(double x) {
  const double e = std::exp(-std::abs(x));
  const double inv = 1.0 / (1.0 + e);
  if (x >= 0.0) return {-std::log1p(e), inv, e * inv * inv};
  return {x - std::log1p(e), e * inv, e * inv * inv};
}

inline double log_sigmoid(double x) {
  return x >= 0.0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
}

inline double log_add_exp(double a, double b) {
  const double hi = std::max(a, b);
  return hi + std::log1p(std::exp(-std::abs(a - b)));
}

double gaussian_log_density(double x, const GaussianPrior& g) {
  const double z = (x - g.mean) / g.stddev;
  return -0.5 * z * z - std::log(g.stddev) - 0.5 * std::log(2.0 * std::numbers::pi);
}

double regularizer_value(const ModelParams& theta, const PriorConfig& prior) {
  double r = 0.0;
  if (prior.alpha_reg) {
    for (double a : theta.alpha) r += gaussian_log_density(a, *prior.alpha_reg);
  }
  if (prior.gamma_reg) {
    for (double g : theta.gamma) r += gaussian_log_density(g, *prior.gamma_reg);
  }
  return r;
}

void check_params(const LabelMatrix& labels, const ModelParams& theta) {
  if (theta.alpha.size() != labels.worker_count() || theta.gamma.size() != labels.task_count()) {
    throw ContractError("parameter dimensions (" + std::to_string(theta.alpha.size()) + ", " +
                        std::to_string(theta.gamma.size()) + ") do not match label matrix (" +
                        std::to_string(labels.worker_count()) + ", " +
                        std::to_string(labels.task_count()) + ")");
  }
}

void check_posterior(const LabelMatrix& labels, const Posterior& posterior) {
  if (posterior.size() != labels.task_count()) {
    throw ContractError("posterior has " + std::to_string(posterior.size()) +
                        " entries, label matrix has " + std::to_string(labels.task_count()) +
                        " tasks");
  }
}

void check_bounds(const ModelParams& theta, const ParamBounds& b) {
  for (double a : theta.alpha) {
    if (!(a >= b.alpha_min && a <= b.alpha_max)) {
      throw ContractError("alpha " + std::to_string(a) + " outside optimizer bounds");
    }
  }
  for (double g : theta.gamma) {
    if (!(g >= b.gamma_min && g <= b.gamma_max)) {
      throw ContractError("gamma " + std::to_string(g) + " outside optimizer bounds");
    }
  }
}

// Posterior, Q and marginal log-likelihood from a single task-major pass.
struct FusedPass {
  Posterior posterior;
  double q = 0.0;
  double log_likelihood = 0.0;
};

FusedPass fused_e_step(const LabelMatrix& labels, const ModelParams& theta,
                       const PriorConfig& prior) {
  const double log_pi = std::log(prior.pi);
  const double log_not_pi = std::log1p(-prior.pi);
  const auto events = labels.events();
  const std::vector<double> beta = theta.betas();

  FusedPass out;
  out.posterior.resize(labels.task_count());
  std::vector<double> xs;
  std::vector<double> lss;
  for (TaskIndex j = 0; j < labels.task_count(); ++j) {
    const auto idx = labels.task_events(j);
    xs.resize(idx.size());
    lss.resize(idx.size());
    // log-joint of each branch: z = +1 and z = -1
    double log_pos = log_pi;
    double log_neg = log_not_pi;
    for (std::size_t k = 0; k < idx.size(); ++k) {
      const LabelEvent& e = events[idx[k]];
      const double x = theta.alpha[e.worker] * beta[j];
      const double ls = log_sigmoid(x);
      xs[k] = x;
      lss[k] = ls;
      // ln sigmoid(-x) = ln sigmoid(x) - x
      if (e.label == Label::Positive) {
        log_pos += ls;
        log_neg += ls - x;
      } else {
        log_pos += ls - x;
        log_neg += ls;
      }
    }
    const double log_norm = log_add_exp(log_pos, log_neg);
    const double p = idx.empty() ? prior.pi : std::exp(log_pos - log_norm);
    out.posterior[j] = p;
    out.log_likelihood += log_norm;

    double q_task = p * log_pi + (1.0 - p) * log_not_pi;
    for (std::size_t k = 0; k < idx.size(); ++k) {
      const double w = events[idx[k]].label == Label::Positive ? p : 1.0 - p;
      q_task += lss[k] - (1.0 - w) * xs[k];
    }
    out.q += q_task;
  }
  const double reg = regularizer_value(theta, prior);
  out.q += reg;
  out.log_likelihood += reg;
  return out;
}

struct Evaluation {
  double q = 0.0;
  std::vector<double> g_alpha, g_gamma;
  // Gauss-Newton curvature: diagonals plus the alpha/gamma coupling of each
  // event, stored in task-major traversal order.
  std::vector<double> h_alpha, h_gamma;
  std::vector<double> coupling;
  // w - sigma per event in the same order; with it the exact Hessian follows.
  std::vector<double> residual;
};

// Q(theta) for a fixed posterior, with its gradient and diagonal curvature.
// Summation order matches fused_e_step so both routes agree bit-for-bit on Q.
class Objective {
 public:
  Objective(const LabelMatrix& labels, const Posterior& posterior, const PriorConfig& prior)
      : labels_(labels), posterior_(posterior), prior_(prior) {
    log_pi_ = std::log(prior.pi);
    log_not_pi_ = std::log1p(-prior.pi);
  }

  double value(const ModelParams& theta) const {
    Evaluation ev;
    run(theta, ev, false);
    return ev.q;
  }

  void evaluate(const ModelParams& theta, Evaluation& ev) const { run(theta, ev, true); }

 private:
  void run(const ModelParams& theta, Evaluation& ev, bool derivatives) const {
    const auto events = labels_.events();
    const std::size_t m = labels_.worker_count();
    const std::size_t n = labels_.task_count();
    if (derivatives) {
      ev.g_alpha.assign(m, 0.0);
      ev.h_alpha.assign(m, 0.0);
      ev.g_gamma.assign(n, 0.0);
      ev.h_gamma.assign(n, 0.0);
      ev.coupling.clear();
      ev.coupling.reserve(events.size());
      ev.residual.clear();
      ev.residual.reserve(events.size());
    }
    double q = 0.0;
    for (TaskIndex j = 0; j < n; ++j) {
      const double p = posterior_[j];
      const double beta = std::exp(theta.gamma[j]);
      double q_task = p * log_pi_ + (1.0 - p) * log_not_pi_;
      for (std::size_t pos : labels_.task_events(j)) {
        const LabelEvent& e = events[pos];
        const double w = e.label == Label::Positive ? p : 1.0 - p;
        const double alpha = theta.alpha[e.worker];
        const double x = alpha * beta;
        const SigmoidTerms s = sigmoid_terms(x);
        q_task += s.log_sigma - (1.0 - w) * x;
        if (derivatives) {
          const double dx = w - s.sigma;
          ev.g_alpha[e.worker] += dx * beta;
          ev.h_alpha[e.worker] += s.sigma_slope * beta * beta;
          ev.g_gamma[j] += dx * x;
          ev.h_gamma[j] += s.sigma_slope * x * x;
          ev.coupling.push_back(s.sigma_slope * beta * x);
          ev.residual.push_back(dx);
        }
      }
      q += q_task;
    }
    q += regularizer_value(theta, prior_);
    if (derivatives) {
      if (prior_.alpha_reg) {
        const double var = prior_.alpha_reg->stddev * prior_.alpha_reg->stddev;
        for (std::size_t i = 0; i < m; ++i) {
          ev.g_alpha[i] += (prior_.alpha_reg->mean - theta.alpha[i]) / var;
          ev.h_alpha[i] += 1.0 / var;
        }
      }
      if (prior_.gamma_reg) {
        const double var = prior_.gamma_reg->stddev * prior_.gamma_reg->stddev;
        for (std::size_t j = 0; j < n; ++j) {
          ev.g_gamma[j] += (prior_.gamma_reg->mean - theta.gamma[j]) / var;
          ev.h_gamma[j] += 1.0 / var;
        }
      }
    }
    ev.q = q;
  }

  const LabelMatrix& labels_;
  const Posterior& posterior_;
  const PriorConfig& prior_;
  double log_pi_ = 0.0;
  double log_not_pi_ = 0.0;
};

// Gradient component with moves that would leave the box removed.
inline double projected(double g, double x, double lo, double hi) {
  if (x <= lo && g < 0.0) return 0.0;
  if (x >= hi && g > 0.0) return 0.0;
  return g;
}

double projected_norm(const ModelParams& theta, const Evaluation& ev, const ParamBounds& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < theta.alpha.size(); ++i) {
    const double g = projected(ev.g_alpha[i], theta.alpha[i], b.alpha_min, b.alpha_max);
    s += g * g;
  }
  for (std::size_t j = 0; j < theta.gamma.size(); ++j) {
    const double g = projected(ev.g_gamma[j], theta.gamma[j], b.gamma_min, b.gamma_max);
    s += g * g;
  }
  return std::sqrt(s);
}

inline bool pinned(double g, double x, double lo, double hi) {
  return (x <= lo && g <= 0.0) || (x >= hi && g >= 0.0);
}

// In-place Cholesky solve of a dense symmetric system; false if not positive definite.
bool cholesky_solve(std::vector<double>& a, std::vector<double>& b, std::size_t n) {
  for (std::size_t c = 0; c < n; ++c) {
    double d = a[c * n + c];
    for (std::size_t k = 0; k < c; ++k) d -= a[c * n + k] * a[c * n + k];
    if (!(d > 0.0)) return false;
    d = std::sqrt(d);
    a[c * n + c] = d;
    for (std::size_t r = c + 1; r < n; ++r) {
      double v = a[r * n + c];
      for (std::size_t k = 0; k < c; ++k) v -= a[r * n + k] * a[c * n + k];
      a[r * n + c] = v / d;
    }
  }
  for (std::size_t r = 0; r < n; ++r) {
    double v = b[r];
    for (std::size_t k = 0; k < r; ++k) v -= a[r * n + k] * b[k];
    b[r] = v / a[r * n + r];
  }
  for (std::size_t r = n; r-- > 0;) {
    double v = b[r];
    for (std::size_t k = r + 1; k < n; ++k) v -= a[k * n + r] * b[k];
    b[r] = v / a[r * n + r];
  }
  return true;
}

// Damped Newton direction over all free coordinates. Gamma is eliminated task
// by task, leaving a dense system in alpha only. With `exact` false, or for a
// task whose exact gamma curvature is not positive, the Gauss-Newton terms are
// used instead. Returns false if the reduced system is not positive definite.
bool joint_direction(const LabelMatrix& labels, const ModelParams& theta, const Evaluation& ev,
                     const ParamBounds& b, bool exact, std::vector<double>& d_alpha,
                     std::vector<double>& d_gamma) {
  const std::size_t m = theta.alpha.size();
  const std::size_t n = theta.gamma.size();
  const auto events = labels.events();
  std::vector<char> free_a(m), free_g(n);
  for (std::size_t i = 0; i < m; ++i) {
    free_a[i] = !pinned(ev.g_alpha[i], theta.alpha[i], b.alpha_min, b.alpha_max);
  }
  for (std::size_t j = 0; j < n; ++j) {
    free_g[j] = !pinned(ev.g_gamma[j], theta.gamma[j], b.gamma_min, b.gamma_max);
  }

  // per-event coupling actually used, and the gamma curvature per task
  std::vector<double> coupling = ev.coupling;
  std::vector<double> dg(n, 0.0);
  {
    std::size_t cursor = 0;
    for (TaskIndex j = 0; j < n; ++j) {
      const auto idx = labels.task_events(j);
      double h = ev.h_gamma[j];
      if (exact) {
        const double beta = std::exp(theta.gamma[j]);
        double extra = 0.0;
        for (std::size_t a = 0; a < idx.size(); ++a) {
          const double x = theta.alpha[events[idx[a]].worker] * beta;
          extra += ev.residual[cursor + a] * x;
        }
        if (h - extra > 0.0) {
          h -= extra;
          for (std::size_t a = 0; a < idx.size(); ++a) {
            coupling[cursor + a] -= ev.residual[cursor + a] * beta;
          }
        }
      }
      dg[j] = h * (1.0 + kRelativeDamping) + kCurvatureDamping;
      cursor += idx.size();
    }
  }
  std::vector<double> s(m * m, 0.0);
  std::vector<double> rhs(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    if (free_a[i]) {
      s[i * m + i] = ev.h_alpha[i] * (1.0 + kRelativeDamping) + kCurvatureDamping;
      rhs[i] = ev.g_alpha[i];
    } else {
      s[i * m + i] = 1.0;
    }
  }
  std::size_t cursor = 0;
  for (TaskIndex j = 0; j < n; ++j) {
    const auto idx = labels.task_events(j);
    const double* c = coupling.data() + cursor;
    cursor += idx.size();
    if (!free_g[j]) continue;
    const double r = ev.g_gamma[j] / dg[j];
    for (std::size_t a = 0; a < idx.size(); ++a) {
      const WorkerIndex ia = events[idx[a]].worker;
      if (!free_a[ia]) continue;
      rhs[ia] -= c[a] * r;
      const double ca = c[a] / dg[j];
      for (std::size_t e = 0; e < idx.size(); ++e) {
        const WorkerIndex ie = events[idx[e]].worker;
        if (free_a[ie]) s[ia * m + ie] -= ca * c[e];
      }
    }
  }

  d_alpha = rhs;
  if (!cholesky_solve(s, d_alpha, m)) return false;
  d_gamma.assign(n, 0.0);
  cursor = 0;
  for (TaskIndex j = 0; j < n; ++j) {
    const auto idx = labels.task_events(j);
    const double* c = coupling.data() + cursor;
    cursor += idx.size();
    if (!free_g[j]) continue;
    double v = ev.g_gamma[j];
    for (std::size_t a = 0; a < idx.size(); ++a) v -= c[a] * d_alpha[events[idx[a]].worker];
    d_gamma[j] = v / dg[j];
  }

  double largest = 0.0;
  for (double v : d_alpha) largest = std::max(largest, std::abs(v));
  for (double v : d_gamma) largest = std::max(largest, std::abs(v));
  if (largest > kMaxNewtonStep) {
    const double scale = kMaxNewtonStep / largest;
    for (double& v : d_alpha) v *= scale;
    for (double& v : d_gamma) v *= scale;
  }
  return true;
}

// One damped Gauss-Newton step with step halving. On success `theta` and `ev`
// hold the accepted point; returns whether theta changed.
bool joint_step(const LabelMatrix& labels, const Objective& objective, const ParamBounds& b,
                ModelParams& theta, Evaluation& ev, Evaluation& scratch) {
  std::vector<double> d_alpha, d_gamma;
  if (!joint_direction(labels, theta, ev, b, true, d_alpha, d_gamma) &&
      !joint_direction(labels, theta, ev, b, false, d_alpha, d_gamma)) {
    // fall back to a diagonally scaled gradient
    d_alpha.assign(theta.alpha.size(), 0.0);
    d_gamma.assign(theta.gamma.size(), 0.0);
    for (std::size_t i = 0; i < d_alpha.size(); ++i) {
      const double g = projected(ev.g_alpha[i], theta.alpha[i], b.alpha_min, b.alpha_max);
      d_alpha[i] = std::clamp(g / (ev.h_alpha[i] + kCurvatureDamping), -kMaxNewtonStep,
                              kMaxNewtonStep);
    }
    for (std::size_t j = 0; j < d_gamma.size(); ++j) {
      const double g = projected(ev.g_gamma[j], theta.gamma[j], b.gamma_min, b.gamma_max);
      d_gamma[j] = std::clamp(g / (ev.h_gamma[j] + kCurvatureDamping), -kMaxNewtonStep,
                              kMaxNewtonStep);
    }
  }

  double predicted = 0.0;
  for (std::size_t i = 0; i < d_alpha.size(); ++i) predicted += ev.g_alpha[i] * d_alpha[i];
  for (std::size_t j = 0; j < d_gamma.size(); ++j) predicted += ev.g_gamma[j] * d_gamma[j];
  // Gains below this are lost in the rounding of Q itself.
  const double resolution = kRoundingScale * (1.0 + std::abs(ev.q));

  const ModelParams origin = theta;
  double t = 1.0;
  for (int halving = 0; halving <= kMaxHalvings && t * predicted > resolution;
       ++halving, t *= 0.5) {
    bool changed = false;
    for (std::size_t i = 0; i < theta.alpha.size(); ++i) {
      theta.alpha[i] = std::clamp(origin.alpha[i] + t * d_alpha[i], b.alpha_min, b.alpha_max);
      changed = changed || theta.alpha[i] != origin.alpha[i];
    }
    for (std::size_t j = 0; j < theta.gamma.size(); ++j) {
      theta.gamma[j] = std::clamp(origin.gamma[j] + t * d_gamma[j], b.gamma_min, b.gamma_max);
      changed = changed || theta.gamma[j] != origin.gamma[j];
    }
    if (!changed) break;
    objective.evaluate(theta, scratch);
    if (scratch.q >= ev.q) {
      std::swap(ev, scratch);
      return true;
    }
  }
  theta = origin;
  return false;
}

}  // namespace

std::vector<double> ModelParams::betas() const {
  std::vector<double> out(gamma.size());
  std::transform(gamma.begin(), gamma.end(), out.begin(), [](double g) { return std::exp(g); });
  return out;
}

void PriorConfig::validate() const {
  if (!(pi > 0.0 && pi < 1.0)) throw DomainError("class prior pi must lie strictly in (0,1)");
  if (alpha_reg && !(alpha_reg->stddev > 0.0)) {
    throw DomainError("alpha regularizer stddev must be positive");
  }
  if (gamma_reg && !(gamma_reg->stddev > 0.0)) {
    throw DomainError("gamma regularizer stddev must be positive");
  }
}

double correct_label_prob(double alpha, double beta) {
  if (!std::isfinite(alpha)) throw DomainError("alpha must be finite");
  if (!std::isfinite(beta) || !(beta > 0.0)) throw DomainError("beta must be finite and > 0");
  return 1.0 / (1.0 + std::exp(-alpha * beta));
}

Posterior e_step(const LabelMatrix& labels, const ModelParams& theta, const PriorConfig& prior) {
  check_params(labels, theta);
  prior.validate();
  return fused_e_step(labels, theta, prior).posterior;
}

double q_function(const LabelMatrix& labels, const Posterior& posterior, const ModelParams& theta,
                  const PriorConfig& prior) {
  check_params(labels, theta);
  check_posterior(labels, posterior);
  prior.validate();
  return Objective(labels, posterior, prior).value(theta);
}

QGradient q_gradient(const LabelMatrix& labels, const Posterior& posterior,
                     const ModelParams& theta, const PriorConfig& prior) {
  check_params(labels, theta);
  check_posterior(labels, posterior);
  prior.validate();
  Evaluation ev;
  Objective(labels, posterior, prior).evaluate(theta, ev);
  return {std::move(ev.g_alpha), std::move(ev.g_gamma)};
}

double log_likelihood(const LabelMatrix& labels, const ModelParams& theta,
                      const PriorConfig& prior) {
  check_params(labels, theta);
  prior.validate();
  return fused_e_step(labels, theta, prior).log_likelihood;
}

MStepResult m_step(const LabelMatrix& labels, const Posterior& posterior, const ModelParams& theta,
                   const PriorConfig& prior, const OptimizerConfig& opt) {
  check_params(labels, theta);
  check_posterior(labels, posterior);
  prior.validate();
  check_bounds(theta, opt.bounds);

  const Objective objective(labels, posterior, prior);
  MStepResult result{theta, 0, 0.0, 0.0, 0.0};
  Evaluation ev;
  Evaluation scratch;
  objective.evaluate(result.params, ev);
  result.q_before = ev.q;

  double norm = projected_norm(result.params, ev, opt.bounds);
  while (norm > opt.tolerance && result.steps < opt.max_steps) {
    ++result.steps;
    const bool moved = joint_step(labels, objective, opt.bounds, result.params, ev, scratch);
    norm = projected_norm(result.params, ev, opt.bounds);
    if (!moved) break;
  }
  result.q_after = ev.q;
  result.gradient_norm = norm;
  return result;
}

EmResult em_fit(const LabelMatrix& labels, const ModelParams& theta0, const PriorConfig& prior,
                const EmConfig& em) {
  check_params(labels, theta0);
  prior.validate();
  check_bounds(theta0, em.optimizer.bounds);

  EmResult result;
  result.params = theta0;
  FusedPass pass = fused_e_step(labels, result.params, prior);
  result.initial_log_likelihood = pass.log_likelihood;

  for (int round = 0; round < em.max_rounds; ++round) {
    EmRound r;
    r.q_start = pass.q;
    MStepResult ms = m_step(labels, pass.posterior, result.params, prior, em.optimizer);
    r.q_after_mstep = ms.q_after;
    r.mstep_steps = ms.steps;
    result.params = std::move(ms.params);
    pass = fused_e_step(labels, result.params, prior);
    r.q_end = pass.q;
    r.log_likelihood = pass.log_likelihood;
    result.rounds.push_back(r);
    if (std::abs(r.q_end - r.q_start) <= em.rel_tolerance * std::abs(r.q_start)) {
      result.converged = true;
      break;
    }
  }
  result.posterior = std::move(pass.posterior);
  return result;
}

std::vector<Label> predict_labels(const Posterior& posterior) {
  std::vector<Label> out(posterior.size());
  for (std::size_t j = 0; j < posterior.size(); ++j) {
    out[j] = posterior[j] >= 0.5 ? Label::Positive : Label::Negative;
  }
  return out;
}

}  // namespace crowdal
