#include "crowdal/sampling.hpp"

#include <algorithm>
#include <cmath>

namespace crowdal {

namespace {

void require_eligible(std::span<const double> alpha, std::span<const WorkerIndex> eligible) {
  if (eligible.empty()) throw ContractError("no eligible workers");
  for (WorkerIndex w : eligible) {
    if (w >= alpha.size()) throw ContractError("eligible worker index out of range");
  }
}

WorkerIndex draw(std::span<const WorkerIndex> eligible, const std::vector<double>& probs,
                 RandomStream& rng) {
  const double u = rng.uniform();
  double cumulative = 0.0;
  for (std::size_t k = 0; k < eligible.size(); ++k) {
    cumulative += probs[k];
    if (u < cumulative) return eligible[k];
  }
  return eligible.back();
}

}  // namespace

double risk(double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("risk: probability outside [0,1]");
  double h = 0.0;
  if (p > 0.0) h -= p * std::log(p);
  if (p < 1.0) h -= (1.0 - p) * std::log1p(-p);
  return h;
}

void WorkerStrategy::validate() const {
  if (policy == WorkerPolicy::EpsilonGreedy && !(epsilon >= 0.0 && epsilon < 1.0)) {
    throw DomainError("epsilon must lie in [0,1)");
  }
}

std::string to_string(TaskPolicy policy) {
  switch (policy) {
    case TaskPolicy::Proposed: return "proposed";
    case TaskPolicy::Traversal: return "traversal";
    case TaskPolicy::Random: return "random";
  }
  return "unknown";
}

std::string to_string(const WorkerStrategy& strategy) {
  switch (strategy.policy) {
    case WorkerPolicy::BestWorker: return "best";
    case WorkerPolicy::Weighted: return "weighted";
    case WorkerPolicy::Uniform: return "uniform";
    case WorkerPolicy::EpsilonGreedy: {
      std::string eps = std::to_string(strategy.epsilon);
      while (eps.size() > 1 && eps.back() == '0') eps.pop_back();
      if (!eps.empty() && eps.back() == '.') eps.pop_back();
      return "egreedy" + eps;
    }
  }
  return "unknown";
}

Eligibility::Eligibility(std::size_t workers, std::size_t tasks, std::uint32_t capacity)
    : workers_(workers), tasks_(tasks), remaining_(workers * tasks, capacity) {
  recount();
}

Eligibility::Eligibility(std::size_t workers, std::size_t tasks,
                         const std::function<std::uint32_t(WorkerIndex, TaskIndex)>& capacity)
    : workers_(workers), tasks_(tasks), remaining_(workers * tasks, 0) {
  for (TaskIndex j = 0; j < tasks; ++j) {
    for (WorkerIndex i = 0; i < workers; ++i) remaining_[j * workers + i] = capacity(i, j);
  }
  recount();
}

void Eligibility::recount() {
  eligible_per_task_.assign(tasks_, 0);
  eligible_tasks_ = 0;
  for (TaskIndex j = 0; j < tasks_; ++j) {
    for (WorkerIndex i = 0; i < workers_; ++i) {
      if (remaining_[j * workers_ + i] > 0) ++eligible_per_task_[j];
    }
    if (eligible_per_task_[j] > 0) ++eligible_tasks_;
  }
}

void Eligibility::consume(WorkerIndex worker, TaskIndex task) {
  if (worker >= workers_ || task >= tasks_) throw ContractError("pair out of range");
  std::uint32_t& r = remaining_[task * workers_ + worker];
  if (r == 0) {
    throw ContractError("worker " + std::to_string(worker) + " is not eligible for task " +
                        std::to_string(task));
  }
  if (--r == 0) {
    if (--eligible_per_task_[task] == 0) --eligible_tasks_;
  }
}

std::vector<WorkerIndex> Eligibility::eligible_workers(TaskIndex task) const {
  std::vector<WorkerIndex> out;
  out.reserve(eligible_per_task_.at(task));
  for (WorkerIndex i = 0; i < workers_; ++i) {
    if (remaining_[task * workers_ + i] > 0) out.push_back(i);
  }
  return out;
}

std::optional<TaskIndex> select_task(const Posterior& posterior, const Eligibility& eligibility,
                                     TaskStrategy& strategy, RandomStream& rng) {
  const std::size_t n = eligibility.task_count();
  if (posterior.size() != n) throw ContractError("posterior size does not match eligibility");
  if (!eligibility.any()) return std::nullopt;

  switch (strategy.policy) {
    case TaskPolicy::Proposed: {
      std::optional<TaskIndex> best;
      double best_risk = -1.0;
      for (TaskIndex j = 0; j < n; ++j) {
        if (!eligibility.task_has_eligible(j)) continue;
        const double r = risk(posterior[j]);
        if (r > best_risk) {
          best_risk = r;
          best = j;
        }
      }
      return best;
    }
    case TaskPolicy::Traversal: {
      for (std::size_t step = 0; step < n; ++step) {
        const TaskIndex j = (strategy.cursor + step) % n;
        if (eligibility.task_has_eligible(j)) {
          strategy.cursor = (j + 1) % n;
          return j;
        }
      }
      return std::nullopt;
    }
    case TaskPolicy::Random: {
      std::size_t pick = rng.uniform_index(eligibility.eligible_task_count());
      for (TaskIndex j = 0; j < n; ++j) {
        if (!eligibility.task_has_eligible(j)) continue;
        if (pick == 0) return j;
        --pick;
      }
      return std::nullopt;
    }
  }
  return std::nullopt;
}

std::vector<double> weighted_probs(std::span<const double> alpha,
                                   std::span<const WorkerIndex> eligible) {
  require_eligible(alpha, eligible);
  std::vector<double> probs(eligible.size());
  double total = 0.0;
  for (std::size_t k = 0; k < eligible.size(); ++k) {
    probs[k] = std::max(alpha[eligible[k]], kWeightFloor);
    total += probs[k];
  }
  for (double& p : probs) p /= total;
  return probs;
}

WorkerIndex best_worker(std::span<const double> alpha, std::span<const WorkerIndex> eligible) {
  require_eligible(alpha, eligible);
  WorkerIndex best = eligible.front();
  for (WorkerIndex w : eligible) {
    if (alpha[w] > alpha[best] || (alpha[w] == alpha[best] && w < best)) best = w;
  }
  return best;
}

std::vector<double> epsilon_greedy_probs(std::span<const double> alpha,
                                         std::span<const WorkerIndex> eligible, double epsilon) {
  if (!(epsilon >= 0.0 && epsilon < 1.0)) throw DomainError("epsilon must lie in [0,1)");
  require_eligible(alpha, eligible);
  const WorkerIndex best = best_worker(alpha, eligible);
  const double share = epsilon / static_cast<double>(eligible.size());
  std::vector<double> probs(eligible.size(), share);
  for (std::size_t k = 0; k < eligible.size(); ++k) {
    if (eligible[k] == best) probs[k] = 1.0 - epsilon + share;
  }
  return probs;
}

WorkerIndex select_worker(std::span<const double> alpha, std::span<const WorkerIndex> eligible,
                          const WorkerStrategy& strategy, RandomStream& rng) {
  strategy.validate();
  require_eligible(alpha, eligible);
  switch (strategy.policy) {
    case WorkerPolicy::BestWorker:
      return best_worker(alpha, eligible);
    case WorkerPolicy::Weighted:
      return draw(eligible, weighted_probs(alpha, eligible), rng);
    case WorkerPolicy::EpsilonGreedy:
      return draw(eligible, epsilon_greedy_probs(alpha, eligible, strategy.epsilon), rng);
    case WorkerPolicy::Uniform:
      return eligible[rng.uniform_index(eligible.size())];
  }
  throw ContractError("unknown worker policy");
}

}  // namespace crowdal
