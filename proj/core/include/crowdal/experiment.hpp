#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "crowdal/active_loop.hpp"
#include "crowdal/config.hpp"
#include "crowdal/dataset_io.hpp"

namespace crowdal {

/// Recorded labels and optional truth for replay and aggregate modes.
struct ReplayData {
  LabelDataset dataset;
  std::optional<GroundTruth> truth;
  std::vector<std::string> warnings;
};

/// Loads the label file and, if configured, the truth file named in `config`.
ReplayData load_replay_data(const RunConfig& config);

struct RunOutcome {
  Arm arm;
  std::size_t replicate = 0;
  std::vector<TraceRecord> trace;
  ModelParams final_params;
  bool exhausted = false;
  EmDiagnostics diagnostics;
  std::filesystem::path trace_file;
};

/// One arm x replicate. Randomness comes from streams derived from
/// (config.seed, purpose, replicate) only, so arms of the same replicate share
/// the simulated population, the initial labels and the oracle draws made
/// during initialization. `replay` must be non-null in replay mode.
RunOutcome run_arm(const RunConfig& config, const Arm& arm, std::size_t replicate,
                   const ReplayData* replay);

struct SummaryRow {
  std::string arm;
  std::size_t iteration = 0;
  double labels_total = 0.0;
  std::size_t runs = 0;
  std::optional<double> accuracy_mean, accuracy_sd;
  std::optional<double> pearson_mean, pearson_sd;
  std::optional<double> spearman_mean, spearman_sd;
};

/// Per arm and iteration: mean and sample standard deviation over replicates
/// of every metric present at that iteration.
std::vector<SummaryRow> summarize(const std::vector<RunOutcome>& runs, const std::vector<Arm>& arms);

struct AggregateResult {
  ModelParams params;
  Posterior posterior;
  std::optional<double> accuracy;
  std::size_t scored_tasks = 0;
};

struct ExperimentSummary {
  std::vector<RunOutcome> runs;
  std::vector<SummaryRow> rows;
  std::optional<AggregateResult> aggregate;
  std::vector<std::string> warnings;
  std::vector<std::filesystem::path> files;
};

/// Validates the configuration and output directory, then executes every run
/// and writes trace_<arm>_r<NN>.csv files plus summary.csv (simulate/replay),
/// or workers.csv and tasks.csv (aggregate). Replay and aggregate also write
/// worker_map.csv and task_map.csv.
ExperimentSummary run_experiment(const RunConfig& config);

/// Shortest round-trip decimal form.
std::string format_double(double value);

void write_trace(std::ostream& out, const std::vector<TraceRecord>& trace);
void write_summary(std::ostream& out, const std::vector<SummaryRow>& rows);

}  // namespace crowdal
