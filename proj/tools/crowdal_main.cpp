// crowdal: crowdsourced label aggregation and active-learning simulator.
//
//   crowdal simulate  --config <file> [--seed N] [--out DIR]
//   crowdal replay    --labels <file> --truth <file> --config <file>
//   crowdal aggregate --labels <file> [--truth <file>]
//
// Any config key can also be set with --set key=value.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "crowdal/config.hpp"
#include "crowdal/experiment.hpp"

namespace {

struct Options {
  std::string config;
  std::string labels;
  std::string truth;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, Options& opt) {
  cmd->add_option("--seed", opt.seed, "Experiment seed (overrides config)");
  cmd->add_option("--out", opt.out, "Output directory (overrides config)");
  cmd->add_option("--set", opt.overrides, "Config override key=value (repeatable)");
}

crowdal::RunConfig build_config(crowdal::RunMode mode, const Options& opt) {
  crowdal::KeyValues kv;
  if (!opt.config.empty()) kv = crowdal::read_config_file(opt.config);
  for (const auto& o : opt.overrides) crowdal::apply_override(kv, o);
  if (!opt.labels.empty()) kv.insert_or_assign("labels", opt.labels);
  if (!opt.truth.empty()) kv.insert_or_assign("truth", opt.truth);
  if (!opt.out.empty()) kv.insert_or_assign("output_dir", opt.out);
  if (opt.seed) kv.insert_or_assign("seed", std::to_string(*opt.seed));
  return crowdal::make_run_config(mode, kv);
}

void report(const crowdal::ExperimentSummary& summary, const crowdal::RunConfig& config) {
  for (const auto& w : summary.warnings) std::cerr << "warning: " << w << '\n';
  if (summary.aggregate) {
    const auto& a = *summary.aggregate;
    std::cout << "aggregate: " << a.posterior.size() << " tasks, " << a.params.alpha.size()
              << " workers";
    if (a.accuracy) {
      std::cout << ", accuracy " << crowdal::format_double(*a.accuracy) << " over "
                << a.scored_tasks << " tasks";
    }
    std::cout << '\n';
  } else {
    // final row per arm
    for (std::size_t k = 0; k < summary.rows.size(); ++k) {
      const auto& row = summary.rows[k];
      const bool last = k + 1 == summary.rows.size() || summary.rows[k + 1].arm != row.arm;
      if (!last) continue;
      std::cout << row.arm << ": iteration " << row.iteration << ", labels "
                << crowdal::format_double(row.labels_total);
      if (row.accuracy_mean) std::cout << ", accuracy " << crowdal::format_double(*row.accuracy_mean);
      if (row.spearman_mean) std::cout << ", spearman " << crowdal::format_double(*row.spearman_mean);
      std::cout << '\n';
    }
    for (const auto& run : summary.runs) {
      if (run.exhausted) {
        std::cerr << "note: " << run.arm.name() << " replicate " << run.replicate
                  << " stopped early: no eligible (worker, task) pair left\n";
      }
    }
  }
  std::cout << "outputs written to " << config.output_dir << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Crowdsourced label aggregation with active worker/task selection"};
  app.require_subcommand(1);

  Options sim_opt, replay_opt, agg_opt;

  auto* simulate = app.add_subcommand("simulate", "Run simulated-pool experiments");
  simulate->add_option("--config", sim_opt.config, "Config file")->required();
  add_common(simulate, sim_opt);

  auto* replay = app.add_subcommand("replay", "Replay a recorded label file");
  replay->add_option("--labels", replay_opt.labels, "Label CSV")->required();
  replay->add_option("--truth", replay_opt.truth, "Truth CSV")->required();
  replay->add_option("--config", replay_opt.config, "Config file")->required();
  add_common(replay, replay_opt);

  auto* aggregate = app.add_subcommand("aggregate", "Single EM fit over a label file");
  aggregate->add_option("--labels", agg_opt.labels, "Label CSV")->required();
  aggregate->add_option("--truth", agg_opt.truth, "Truth CSV");
  aggregate->add_option("--config", agg_opt.config, "Config file");
  add_common(aggregate, agg_opt);

  CLI11_PARSE(app, argc, argv);

  try {
    crowdal::RunMode mode = crowdal::RunMode::Simulate;
    const Options* opt = &sim_opt;
    if (*replay) {
      mode = crowdal::RunMode::Replay;
      opt = &replay_opt;
    } else if (*aggregate) {
      mode = crowdal::RunMode::Aggregate;
      opt = &agg_opt;
    }
    const crowdal::RunConfig config = build_config(mode, *opt);
    const auto summary = crowdal::run_experiment(config);
    report(summary, config);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
