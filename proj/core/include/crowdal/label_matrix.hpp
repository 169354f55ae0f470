#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "crowdal/types.hpp"

namespace crowdal {

struct LabelEvent {
  WorkerIndex worker;
  TaskIndex task;
  Label label;

  friend bool operator==(const LabelEvent&, const LabelEvent&) = default;
};

/// Multiset of observed labels for an m-worker, n-task population.
///
/// Events are kept in insertion order and never removed. Repeated events on
/// the same (worker, task) pair are retained. Per-task and per-worker indexes
/// hold positions into events().
class LabelMatrix {
 public:
  LabelMatrix() = default;
  LabelMatrix(std::size_t workers, std::size_t tasks);

  /// Throws ContractError when the worker or task index is out of range.
  void add(const LabelEvent& event);
  void add(WorkerIndex worker, TaskIndex task, Label label) { add({worker, task, label}); }

  std::size_t worker_count() const noexcept { return workers_; }
  std::size_t task_count() const noexcept { return tasks_; }
  std::size_t size() const noexcept { return events_.size(); }
  bool empty() const noexcept { return events_.empty(); }

  std::span<const LabelEvent> events() const noexcept { return events_; }
  const LabelEvent& operator[](std::size_t i) const { return events_[i]; }

  std::span<const std::size_t> task_events(TaskIndex task) const { return by_task_.at(task); }
  std::span<const std::size_t> worker_events(WorkerIndex worker) const {
    return by_worker_.at(worker);
  }

  /// Number of events recorded for the pair.
  std::size_t pair_count(WorkerIndex worker, TaskIndex task) const;

  /// Same events with every label negated.
  LabelMatrix flipped() const;

  friend bool operator==(const LabelMatrix& a, const LabelMatrix& b) {
    return a.workers_ == b.workers_ && a.tasks_ == b.tasks_ && a.events_ == b.events_;
  }

 private:
  std::size_t workers_ = 0;
  std::size_t tasks_ = 0;
  std::vector<LabelEvent> events_;
  std::vector<std::vector<std::size_t>> by_task_;
  std::vector<std::vector<std::size_t>> by_worker_;
};

}  // namespace crowdal
