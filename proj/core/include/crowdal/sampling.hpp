#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "crowdal/glad_model.hpp"
#include "crowdal/random.hpp"
#include "crowdal/types.hpp"

namespace crowdal {

/// Binary entropy in nats; 0 at p in {0,1}, ln 2 at p = 0.5.
/// Throws DomainError for p outside [0,1].
double risk(double p);

enum class TaskPolicy { Proposed, Traversal, Random };

struct TaskStrategy {
  TaskPolicy policy = TaskPolicy::Proposed;
  TaskIndex cursor = 0;  ///< next task to try under Traversal
};

enum class WorkerPolicy {
  BestWorker,
  Weighted,
  EpsilonGreedy,
  Uniform,  ///< random worker, used by the traversal and random baselines
};

struct WorkerStrategy {
  WorkerPolicy policy = WorkerPolicy::BestWorker;
  double epsilon = 0.0;  ///< EpsilonGreedy only, in [0,1)

  void validate() const;
};

std::string to_string(TaskPolicy policy);
std::string to_string(const WorkerStrategy& strategy);

/// Remaining query capacity of each (worker, task) pair.
///
/// A pair is eligible while its capacity is positive; every issued query
/// consumes one unit and a pair never regains capacity. Simulated oracles give
/// every pair capacity 1; replay oracles give each pair its recorded count.
class Eligibility {
 public:
  Eligibility() = default;
  Eligibility(std::size_t workers, std::size_t tasks, std::uint32_t capacity);
  Eligibility(std::size_t workers, std::size_t tasks,
              const std::function<std::uint32_t(WorkerIndex, TaskIndex)>& capacity);

  std::size_t worker_count() const noexcept { return workers_; }
  std::size_t task_count() const noexcept { return tasks_; }

  std::uint32_t remaining(WorkerIndex worker, TaskIndex task) const {
    return remaining_[task * workers_ + worker];
  }
  bool is_eligible(WorkerIndex worker, TaskIndex task) const { return remaining(worker, task) > 0; }

  /// Throws ContractError if the pair has no capacity left.
  void consume(WorkerIndex worker, TaskIndex task);

  /// Eligible workers for a task, in increasing index order.
  std::vector<WorkerIndex> eligible_workers(TaskIndex task) const;
  bool task_has_eligible(TaskIndex task) const { return eligible_per_task_[task] > 0; }
  std::size_t eligible_worker_count(TaskIndex task) const { return eligible_per_task_[task]; }
  std::size_t eligible_task_count() const noexcept { return eligible_tasks_; }
  bool any() const noexcept { return eligible_tasks_ > 0; }

 private:
  void recount();

  std::size_t workers_ = 0;
  std::size_t tasks_ = 0;
  std::vector<std::uint32_t> remaining_;  // task-major
  std::vector<std::size_t> eligible_per_task_;
  std::size_t eligible_tasks_ = 0;
};

/// Picks the next task among tasks with at least one eligible worker.
/// Returns nullopt when no such task exists.
std::optional<TaskIndex> select_task(const Posterior& posterior, const Eligibility& eligibility,
                                     TaskStrategy& strategy, RandomStream& rng);

/// Selection probabilities proportional to max(alpha, 1e-6) over `eligible`.
std::vector<double> weighted_probs(std::span<const double> alpha,
                                   std::span<const WorkerIndex> eligible);

/// 1 - eps + eps/m for the best eligible worker, eps/m for the others, where
/// m = eligible.size().
std::vector<double> epsilon_greedy_probs(std::span<const double> alpha,
                                         std::span<const WorkerIndex> eligible, double epsilon);

/// Eligible worker with the largest alpha, smallest index on ties.
WorkerIndex best_worker(std::span<const double> alpha, std::span<const WorkerIndex> eligible);

/// Chooses a worker from `eligible`. Randomized policies consume exactly one
/// rng draw; BestWorker consumes none.
WorkerIndex select_worker(std::span<const double> alpha, std::span<const WorkerIndex> eligible,
                          const WorkerStrategy& strategy, RandomStream& rng);

inline constexpr double kWeightFloor = 1e-6;

}  // namespace crowdal
