#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "crowdal/glad_model.hpp"
#include "crowdal/label_matrix.hpp"
#include "crowdal/random.hpp"
#include "crowdal/sampling.hpp"
#include "crowdal/simulation.hpp"

namespace crowdal {

/// Raised when an oracle cannot answer a query it advertised capacity for.
class OracleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Source of labels for (worker, task) queries.
class Oracle {
 public:
  virtual ~Oracle() = default;

  virtual std::size_t worker_count() const = 0;
  virtual std::size_t task_count() const = 0;
  /// Total number of queries the pair can ever answer.
  virtual std::uint32_t capacity(WorkerIndex worker, TaskIndex task) const = 0;
  virtual Label query(WorkerIndex worker, TaskIndex task) = 0;
};

/// Answers every pair once by sampling from a simulated population.
class SimulatedOracle final : public Oracle {
 public:
  SimulatedOracle(const Population& pool, RandomStream rng) : pool_(pool), rng_(std::move(rng)) {}

  std::size_t worker_count() const override { return crowdal::worker_count(pool_); }
  std::size_t task_count() const override { return crowdal::task_count(pool_); }
  std::uint32_t capacity(WorkerIndex, TaskIndex) const override { return 1; }
  Label query(WorkerIndex worker, TaskIndex task) override {
    return sample_label(worker, task, pool_, rng_);
  }

 private:
  const Population& pool_;
  RandomStream rng_;
};

/// Serves recorded labels. A pair with several recorded events answers them
/// in recorded order, one per query.
class ReplayOracle final : public Oracle {
 public:
  explicit ReplayOracle(const LabelMatrix& recorded);

  std::size_t worker_count() const override { return workers_; }
  std::size_t task_count() const override { return tasks_; }
  std::uint32_t capacity(WorkerIndex worker, TaskIndex task) const override;
  Label query(WorkerIndex worker, TaskIndex task) override;

 private:
  struct Queue {
    std::vector<Label> labels;
    std::size_t next = 0;
  };
  std::uint64_t key(WorkerIndex worker, TaskIndex task) const { return task * workers_ + worker; }

  std::size_t workers_ = 0;
  std::size_t tasks_ = 0;
  std::unordered_map<std::uint64_t, Queue> queues_;
};

struct TraceRecord {
  std::size_t iteration = 0;
  std::size_t labels_total = 0;
  std::optional<double> accuracy;
  std::optional<double> pearson;
  std::optional<double> spearman;
  std::optional<TaskIndex> task;
  std::optional<WorkerIndex> worker;

  friend bool operator==(const TraceRecord&, const TraceRecord&) = default;
};

/// Worst-case EM behavior seen over every fit of a run. Drops are positive
/// when the quantity decreased.
struct EmDiagnostics {
  std::size_t fits = 0;
  std::size_t rounds = 0;
  std::size_t unconverged_fits = 0;
  double worst_mstep_drop = 0.0;   ///< Q(theta_t, post_t) - Q(theta_{t+1}, post_t)
  double worst_round_drop = 0.0;   ///< Q(theta_t, post_t) - Q(theta_{t+1}, post_{t+1})
  double worst_loglik_drop = 0.0;  ///< marginal log-likelihood between rounds

  void absorb(const EmResult& fit);
};

struct LoopConfig {
  std::size_t budget = 0;
  std::size_t metric_stride = 1;
  PriorConfig prior;
  EmConfig em;
};

struct ExperimentState {
  LabelMatrix labels;
  ModelParams theta;
  Posterior posterior;
  std::size_t initial_labels = 0;
  std::size_t budget_remaining = 0;
  Eligibility eligibility;
  std::vector<TraceRecord> trace;
  bool exhausted = false;  ///< stopped because no eligible pair remained
  EmDiagnostics diagnostics;
};

/// Seeds the pool: for every task, k distinct workers are drawn uniformly
/// among the workers the oracle can serve for that task (all of them if fewer
/// than k) and queried. Throws ContractError when k exceeds the worker count.
LabelMatrix initialize(std::size_t workers, std::size_t tasks, std::size_t k, Oracle& oracle,
                       RandomStream& rng);

/// Eligibility left after `labels` were obtained from `oracle`.
Eligibility remaining_eligibility(const Oracle& oracle, const LabelMatrix& labels);

/// Fits the model on the initial labels and records trace entry 0.
ExperimentState prepare(LabelMatrix initial, const Oracle& oracle, const ModelParams& theta0,
                        const LoopConfig& config, const GroundTruth* truth);

/// Spends the remaining budget one query at a time: select a task, select a
/// worker among that task's eligible workers, query, refit (warm-started)
/// and record. Stops early, setting `exhausted`, when no eligible pair is left.
void run(ExperimentState& state, TaskStrategy& task_strategy, const WorkerStrategy& worker_strategy,
         Oracle& oracle, const GroundTruth* truth, RandomStream& task_rng,
         RandomStream& worker_rng, const LoopConfig& config);

}  // namespace crowdal
