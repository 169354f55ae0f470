#include "crowdal/active_loop.hpp"

#include <algorithm>
#include <string>
#include <utility>

#include "crowdal/metrics.hpp"

namespace crowdal {

namespace {

TraceRecord make_record(const ExperimentState& state, const GroundTruth* truth, bool with_metrics) {
  TraceRecord rec;
  rec.iteration = state.trace.size();
  rec.labels_total = state.labels.size();
  if (truth != nullptr && with_metrics) {
    const ScoreReport report = score(predict_labels(state.posterior), *truth, state.theta.alpha);
    rec.accuracy = report.accuracy;
    rec.pearson = report.pearson;
    rec.spearman = report.spearman;
  }
  return rec;
}

void refit(ExperimentState& state, const LoopConfig& config) {
  EmResult fit = em_fit(state.labels, state.theta, config.prior, config.em);
  state.diagnostics.absorb(fit);
  state.theta = std::move(fit.params);
  state.posterior = std::move(fit.posterior);
}

}  // namespace

ReplayOracle::ReplayOracle(const LabelMatrix& recorded)
    : workers_(recorded.worker_count()), tasks_(recorded.task_count()) {
  for (const LabelEvent& e : recorded.events()) queues_[key(e.worker, e.task)].labels.push_back(e.label);
}

std::uint32_t ReplayOracle::capacity(WorkerIndex worker, TaskIndex task) const {
  const auto it = queues_.find(key(worker, task));
  return it == queues_.end() ? 0u : static_cast<std::uint32_t>(it->second.labels.size());
}

Label ReplayOracle::query(WorkerIndex worker, TaskIndex task) {
  const auto it = queues_.find(key(worker, task));
  if (it == queues_.end() || it->second.next >= it->second.labels.size()) {
    throw OracleError("replay oracle has no remaining label for worker " + std::to_string(worker) +
                      ", task " + std::to_string(task));
  }
  return it->second.labels[it->second.next++];
}

void EmDiagnostics::absorb(const EmResult& fit) {
  ++fits;
  rounds += fit.rounds.size();
  if (!fit.converged) ++unconverged_fits;
  double prev_ll = fit.initial_log_likelihood;
  for (const EmRound& r : fit.rounds) {
    worst_mstep_drop = std::max(worst_mstep_drop, r.q_start - r.q_after_mstep);
    worst_round_drop = std::max(worst_round_drop, r.q_start - r.q_end);
    worst_loglik_drop = std::max(worst_loglik_drop, prev_ll - r.log_likelihood);
    prev_ll = r.log_likelihood;
  }
}

LabelMatrix initialize(std::size_t workers, std::size_t tasks, std::size_t k, Oracle& oracle,
                       RandomStream& rng) {
  if (k > workers) {
    throw ContractError("cannot draw " + std::to_string(k) + " distinct workers from " +
                        std::to_string(workers));
  }
  if (oracle.worker_count() != workers || oracle.task_count() != tasks) {
    throw ContractError("oracle dimensions do not match the requested population");
  }
  LabelMatrix labels(workers, tasks);
  std::vector<WorkerIndex> candidates;
  for (TaskIndex j = 0; j < tasks; ++j) {
    candidates.clear();
    for (WorkerIndex i = 0; i < workers; ++i) {
      if (oracle.capacity(i, j) > 0) candidates.push_back(i);
    }
    const std::size_t take = std::min(k, candidates.size());
    for (std::size_t s = 0; s < take; ++s) {
      const std::size_t r = s + rng.uniform_index(candidates.size() - s);
      std::swap(candidates[s], candidates[r]);
      labels.add(candidates[s], j, oracle.query(candidates[s], j));
    }
  }
  return labels;
}

Eligibility remaining_eligibility(const Oracle& oracle, const LabelMatrix& labels) {
  return Eligibility(labels.worker_count(), labels.task_count(),
                     [&](WorkerIndex i, TaskIndex j) -> std::uint32_t {
                       const std::uint32_t cap = oracle.capacity(i, j);
                       const auto used = static_cast<std::uint32_t>(labels.pair_count(i, j));
                       return cap > used ? cap - used : 0u;
                     });
}

ExperimentState prepare(LabelMatrix initial, const Oracle& oracle, const ModelParams& theta0,
                        const LoopConfig& config, const GroundTruth* truth) {
  if (config.metric_stride == 0) throw ContractError("metric stride must be positive");
  ExperimentState state;
  state.eligibility = remaining_eligibility(oracle, initial);
  state.labels = std::move(initial);
  state.initial_labels = state.labels.size();
  state.budget_remaining = config.budget;
  state.theta = theta0;
  refit(state, config);
  state.trace.push_back(make_record(state, truth, true));
  return state;
}

void run(ExperimentState& state, TaskStrategy& task_strategy, const WorkerStrategy& worker_strategy,
         Oracle& oracle, const GroundTruth* truth, RandomStream& task_rng,
         RandomStream& worker_rng, const LoopConfig& config) {
  worker_strategy.validate();
  if (config.metric_stride == 0) throw ContractError("metric stride must be positive");
  while (state.budget_remaining > 0) {
    const auto task = select_task(state.posterior, state.eligibility, task_strategy, task_rng);
    if (!task) {
      state.exhausted = true;
      break;
    }
    const auto candidates = state.eligibility.eligible_workers(*task);
    const WorkerIndex worker =
        select_worker(state.theta.alpha, candidates, worker_strategy, worker_rng);
    Label label;
    try {
      label = oracle.query(worker, *task);
    } catch (const OracleError& e) {
      throw OracleError("iteration " + std::to_string(state.trace.size()) + ": " + e.what());
    }
    state.labels.add(worker, *task, label);
    state.eligibility.consume(worker, *task);
    --state.budget_remaining;

    refit(state, config);
    const std::size_t iteration = state.trace.size();
    const bool last = state.budget_remaining == 0;
    TraceRecord rec = make_record(state, truth, last || iteration % config.metric_stride == 0);
    rec.task = *task;
    rec.worker = worker;
    state.trace.push_back(std::move(rec));
  }
  if (state.exhausted && truth != nullptr && state.trace.size() > 1) {
    // the last record of an exhausted run always carries metrics
    TraceRecord& back = state.trace.back();
    if (!back.accuracy && !back.pearson) {
      const TraceRecord full = make_record(state, truth, true);
      back.accuracy = full.accuracy;
      back.pearson = full.pearson;
      back.spearman = full.spearman;
    }
  }
}

}  // namespace crowdal
