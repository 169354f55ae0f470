#pragma once

#include <cstddef>
#include <optional>
#include <variant>
#include <vector>

#include "crowdal/random.hpp"
#include "crowdal/types.hpp"

namespace crowdal {

enum class WorkerType { Good, Bad };
enum class TaskType { Easy, Hard };

/// Probability of a correct label per (worker type, task type).
struct AccuracyTable {
  double good_hard = 0.95;
  double good_easy = 1.0;
  double bad_hard = 0.54;
  double bad_easy = 1.0;

  double at(WorkerType worker, TaskType task) const;
};

struct BinaryPoolSpec {
  std::size_t good_workers = 8;
  std::size_t bad_workers = 16;
  std::size_t easy_tasks = 500;
  std::size_t hard_tasks = 250;
  AccuracyTable acc;
  // Stand-in expertise values, used only for correlation scoring.
  double alpha_good = 2.0;
  double alpha_bad = 0.1;

  std::size_t workers() const { return good_workers + bad_workers; }
  std::size_t tasks() const { return easy_tasks + hard_tasks; }
  void validate() const;
};

struct NormalDist {
  double mean = 1.0;
  double stddev = 1.0;
};

struct GaussianPoolSpec {
  std::size_t workers = 50;
  std::size_t tasks = 1000;
  NormalDist alpha;
  NormalDist beta;  ///< rejection-sampled to be strictly positive

  void validate() const;
};

/// True labels and, when known, true worker expertise and task ease.
/// Tasks without a known label are excluded from accuracy.
struct GroundTruth {
  std::vector<std::optional<Label>> z_true;
  std::optional<std::vector<double>> alpha_true;
  std::optional<std::vector<double>> beta_true;

  std::size_t task_count() const { return z_true.size(); }
  std::size_t scored_count() const;
  /// Throws ContractError when the task has no known label.
  Label label(TaskIndex task) const;
};

struct BinaryPool {
  BinaryPoolSpec spec;
  std::vector<WorkerType> worker_types;
  std::vector<TaskType> task_types;
  GroundTruth truth;
};

struct GaussianPool {
  GaussianPoolSpec spec;
  GroundTruth truth;
};

using Population = std::variant<BinaryPool, GaussianPool>;

/// Worker and task types are assigned by count, then shuffled so that index
/// order carries no information about type.
BinaryPool generate_binary_pool(const BinaryPoolSpec& spec, RandomStream& rng);

/// Each worker's alpha, each task's beta and label come from sub-streams
/// keyed by their index, so values do not depend on generation order.
GaussianPool generate_gaussian_pool(const GaussianPoolSpec& spec, RandomStream& rng);

const GroundTruth& truth_of(const Population& pool);
std::size_t worker_count(const Population& pool);
std::size_t task_count(const Population& pool);

/// Probability that `worker` labels `task` correctly.
double correct_probability(const Population& pool, WorkerIndex worker, TaskIndex task);

/// Returns the true label with probability correct_probability, the opposite
/// label otherwise. Consumes exactly one rng draw.
Label sample_label(WorkerIndex worker, TaskIndex task, const Population& pool, RandomStream& rng);

}  // namespace crowdal
