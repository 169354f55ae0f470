#include "crowdal/label_matrix.hpp"

#include <string>

namespace crowdal {

LabelMatrix::LabelMatrix(std::size_t workers, std::size_t tasks)
    : workers_(workers), tasks_(tasks), by_task_(tasks), by_worker_(workers) {}

void LabelMatrix::add(const LabelEvent& event) {
  if (event.worker >= workers_) {
    throw ContractError("worker index " + std::to_string(event.worker) + " out of range (m=" +
                        std::to_string(workers_) + ")");
  }
  if (event.task >= tasks_) {
    throw ContractError("task index " + std::to_string(event.task) + " out of range (n=" +
                        std::to_string(tasks_) + ")");
  }
  if (event.label != Label::Positive && event.label != Label::Negative) {
    throw DomainError("label must be -1 or +1");
  }
  const std::size_t pos = events_.size();
  events_.push_back(event);
  by_task_[event.task].push_back(pos);
  by_worker_[event.worker].push_back(pos);
}

std::size_t LabelMatrix::pair_count(WorkerIndex worker, TaskIndex task) const {
  std::size_t count = 0;
  for (std::size_t e : by_task_.at(task)) {
    if (events_[e].worker == worker) ++count;
  }
  return count;
}

LabelMatrix LabelMatrix::flipped() const {
  LabelMatrix out(workers_, tasks_);
  for (const auto& e : events_) out.add(e.worker, e.task, negate(e.label));
  return out;
}

}  // namespace crowdal
