#include "crowdal/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <thread>

#include "crowdal/metrics.hpp"

namespace crowdal {

namespace {

namespace fs = std::filesystem;

void ensure_writable_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory " + dir.string() + ": " + ec.message());
  const fs::path probe = dir / ".crowdal_write_probe";
  {
    std::ofstream out(probe);
    if (!out || !(out << "ok")) throw ConfigError("output directory " + dir.string() + " is not writable");
  }
  fs::remove(probe, ec);
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

void write_optional(std::ostream& out, const std::optional<double>& v) {
  if (v) out << format_double(*v);
}

template <typename T>
void write_optional_index(std::ostream& out, const std::optional<T>& v) {
  if (v) out << *v;
}

RunOutcome drive(const RunConfig& config, const Arm& arm, std::size_t replicate, Oracle& oracle,
                 const GroundTruth* truth) {
  const std::size_t m = oracle.worker_count();
  const std::size_t n = oracle.task_count();
  const LoopConfig loop{config.budget_or_default(), config.metric_stride, config.prior, config.em};

  auto init_rng = purpose_stream(config.seed, StreamPurpose::Init, replicate);
  auto task_rng = purpose_stream(config.seed, StreamPurpose::Task, replicate);
  auto worker_rng = purpose_stream(config.seed, StreamPurpose::Worker, replicate);

  LabelMatrix initial = initialize(m, n, config.init_labels_per_task, oracle, init_rng);
  ExperimentState state = prepare(std::move(initial), oracle,
                                  ModelParams::uniform(m, n, config.alpha0, config.gamma0), loop,
                                  truth);
  TaskStrategy task_strategy{arm.task, 0};
  run(state, task_strategy, arm.worker, oracle, truth, task_rng, worker_rng, loop);

  RunOutcome out;
  out.arm = arm;
  out.replicate = replicate;
  out.trace = std::move(state.trace);
  out.final_params = std::move(state.theta);
  out.exhausted = state.exhausted;
  out.diagnostics = state.diagnostics;
  return out;
}

struct Accumulator {
  double labels_sum = 0.0;
  std::size_t runs = 0;
  std::vector<double> accuracy, pearson, spearman;
};

void mean_sd(const std::vector<double>& v, std::optional<double>& mean, std::optional<double>& sd) {
  if (v.empty()) return;
  double s = 0.0;
  for (double x : v) s += x;
  const double mu = s / static_cast<double>(v.size());
  mean = mu;
  if (v.size() < 2) return;
  double ss = 0.0;
  for (double x : v) ss += (x - mu) * (x - mu);
  sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
}

std::string trace_file_name(const Arm& arm, std::size_t replicate) {
  std::string r = std::to_string(replicate);
  if (r.size() < 2) r.insert(0, 2 - r.size(), '0');
  return "trace_" + arm.name() + "_r" + r + ".csv";
}

AggregateResult aggregate(const RunConfig& config, const ReplayData& data) {
  const LabelMatrix& labels = data.dataset.labels;
  const EmResult fit =
      em_fit(labels,
             ModelParams::uniform(labels.worker_count(), labels.task_count(), config.alpha0,
                                  config.gamma0),
             config.prior, config.em);
  AggregateResult out;
  out.params = fit.params;
  out.posterior = fit.posterior;
  if (data.truth) {
    const ScoreReport report = score(predict_labels(fit.posterior), *data.truth, fit.params.alpha);
    out.accuracy = report.accuracy;
    out.scored_tasks = report.scored_tasks;
  }
  return out;
}

}  // namespace

std::string format_double(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) return "nan";
  return std::string(buf, ptr);
}

ReplayData load_replay_data(const RunConfig& config) {
  ReplayData data;
  data.dataset = load_labels(config.labels_path);
  if (!config.truth_path.empty()) {
    TruthData truth = load_truth(config.truth_path, data.dataset.tasks);
    data.truth = std::move(truth.truth);
    data.warnings = std::move(truth.warnings);
  }
  return data;
}

RunOutcome run_arm(const RunConfig& config, const Arm& arm, std::size_t replicate,
                   const ReplayData* replay) {
  switch (config.mode) {
    case RunMode::Simulate: {
      auto pool_rng = purpose_stream(config.seed, StreamPurpose::Pool, replicate);
      const Population pool = config.pool == PoolKind::Binary
                                  ? Population{generate_binary_pool(config.binary, pool_rng)}
                                  : Population{generate_gaussian_pool(config.gaussian, pool_rng)};
      SimulatedOracle oracle(pool, purpose_stream(config.seed, StreamPurpose::Oracle, replicate));
      return drive(config, arm, replicate, oracle, &truth_of(pool));
    }
    case RunMode::Replay: {
      if (replay == nullptr) throw ContractError("replay mode needs recorded data");
      ReplayOracle oracle(replay->dataset.labels);
      return drive(config, arm, replicate, oracle, replay->truth ? &*replay->truth : nullptr);
    }
    case RunMode::Aggregate:
      break;
  }
  throw ContractError("run_arm is not defined for aggregate mode");
}

std::vector<SummaryRow> summarize(const std::vector<RunOutcome>& runs, const std::vector<Arm>& arms) {
  std::vector<SummaryRow> rows;
  for (const Arm& arm : arms) {
    const std::string name = arm.name();
    std::map<std::size_t, Accumulator> by_iteration;
    for (const RunOutcome& run : runs) {
      if (run.arm.name() != name) continue;
      for (const TraceRecord& rec : run.trace) {
        Accumulator& acc = by_iteration[rec.iteration];
        acc.labels_sum += static_cast<double>(rec.labels_total);
        ++acc.runs;
        if (rec.accuracy) acc.accuracy.push_back(*rec.accuracy);
        if (rec.pearson) acc.pearson.push_back(*rec.pearson);
        if (rec.spearman) acc.spearman.push_back(*rec.spearman);
      }
    }
    for (const auto& [iteration, acc] : by_iteration) {
      SummaryRow row;
      row.arm = name;
      row.iteration = iteration;
      row.runs = acc.runs;
      row.labels_total = acc.labels_sum / static_cast<double>(acc.runs);
      mean_sd(acc.accuracy, row.accuracy_mean, row.accuracy_sd);
      mean_sd(acc.pearson, row.pearson_mean, row.pearson_sd);
      mean_sd(acc.spearman, row.spearman_mean, row.spearman_sd);
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

void write_trace(std::ostream& out, const std::vector<TraceRecord>& trace) {
  out << "iteration,labels_total,accuracy,pearson,spearman,task,worker\n";
  for (const TraceRecord& r : trace) {
    out << r.iteration << ',' << r.labels_total << ',';
    write_optional(out, r.accuracy);
    out << ',';
    write_optional(out, r.pearson);
    out << ',';
    write_optional(out, r.spearman);
    out << ',';
    write_optional_index(out, r.task);
    out << ',';
    write_optional_index(out, r.worker);
    out << '\n';
  }
}

void write_summary(std::ostream& out, const std::vector<SummaryRow>& rows) {
  out << "arm,iteration,labels_total,runs,accuracy_mean,accuracy_sd,pearson_mean,pearson_sd,"
         "spearman_mean,spearman_sd\n";
  for (const SummaryRow& r : rows) {
    out << r.arm << ',' << r.iteration << ',' << format_double(r.labels_total) << ',' << r.runs;
    for (const auto* v : {&r.accuracy_mean, &r.accuracy_sd, &r.pearson_mean, &r.pearson_sd,
                          &r.spearman_mean, &r.spearman_sd}) {
      out << ',';
      write_optional(out, *v);
    }
    out << '\n';
  }
}

ExperimentSummary run_experiment(const RunConfig& config) {
  config.validate();
  const fs::path dir = config.output_dir;
  ensure_writable_dir(dir);

  ExperimentSummary summary;
  std::optional<ReplayData> data;
  if (config.mode != RunMode::Simulate) {
    data = load_replay_data(config);
    summary.warnings = data->warnings;
    if (config.mode == RunMode::Replay &&
        config.init_labels_per_task > data->dataset.labels.worker_count()) {
      throw ConfigError("init_labels_per_task exceeds the number of workers in the label file");
    }
    write_id_map(dir / "worker_map.csv", data->dataset.workers);
    write_id_map(dir / "task_map.csv", data->dataset.tasks);
    summary.files.push_back(dir / "worker_map.csv");
    summary.files.push_back(dir / "task_map.csv");
  }

  if (config.mode == RunMode::Aggregate) {
    AggregateResult result = aggregate(config, *data);
    const auto& ds = data->dataset;
    {
      auto out = open_output(dir / "workers.csv");
      out << "worker_id,alpha\n";
      for (WorkerIndex i = 0; i < ds.workers.size(); ++i) {
        out << ds.workers.id(i) << ',' << format_double(result.params.alpha[i]) << '\n';
      }
    }
    {
      auto out = open_output(dir / "tasks.csv");
      out << "task_id,p_positive,predicted,beta\n";
      const auto predicted = predict_labels(result.posterior);
      for (TaskIndex j = 0; j < ds.tasks.size(); ++j) {
        out << ds.tasks.id(j) << ',' << format_double(result.posterior[j]) << ','
            << to_int(predicted[j]) << ',' << format_double(result.params.beta(j)) << '\n';
      }
    }
    summary.files.push_back(dir / "workers.csv");
    summary.files.push_back(dir / "tasks.csv");
    summary.aggregate = std::move(result);
    return summary;
  }

  const std::size_t jobs = config.arms.size() * config.replicates;
  std::vector<RunOutcome> outcomes(jobs);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  const ReplayData* replay = data ? &*data : nullptr;

  auto worker = [&] {
    while (true) {
      const std::size_t job = next.fetch_add(1);
      if (job >= jobs) return;
      {
        std::lock_guard lock(failure_mutex);
        if (failure) return;
      }
      try {
        const Arm& arm = config.arms[job / config.replicates];
        const std::size_t replicate = job % config.replicates;
        RunOutcome outcome = run_arm(config, arm, replicate, replay);
        outcome.trace_file = dir / trace_file_name(arm, replicate);
        auto out = open_output(outcome.trace_file);
        write_trace(out, outcome.trace);
        outcomes[job] = std::move(outcome);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };

  const std::size_t threads = std::min(config.threads, jobs);
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  summary.rows = summarize(outcomes, config.arms);
  {
    auto out = open_output(dir / "summary.csv");
    write_summary(out, summary.rows);
  }
  for (const auto& o : outcomes) summary.files.push_back(o.trace_file);
  summary.files.push_back(dir / "summary.csv");
  summary.runs = std::move(outcomes);
  return summary;
}

}  // namespace crowdal
