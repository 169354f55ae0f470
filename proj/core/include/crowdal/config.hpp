#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "crowdal/glad_model.hpp"
#include "crowdal/sampling.hpp"
#include "crowdal/simulation.hpp"

namespace crowdal {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class RunMode { Simulate, Replay, Aggregate };
enum class PoolKind { None, Binary, Gaussian };

/// One (task strategy, worker strategy) combination.
struct Arm {
  TaskPolicy task = TaskPolicy::Proposed;
  WorkerStrategy worker;

  /// e.g. "proposed-best", "traversal-uniform", "proposed-egreedy0.5"
  std::string name() const;
};

/// Parses "proposed", "proposed:best", "proposed:weighted",
/// "proposed:egreedy=0.1", "traversal", "random:uniform". The worker part
/// defaults to best for proposed and uniform for the two baselines.
Arm parse_arm(std::string_view text);

struct RunConfig {
  RunMode mode = RunMode::Simulate;
  PoolKind pool = PoolKind::None;
  BinaryPoolSpec binary;
  GaussianPoolSpec gaussian;
  std::string labels_path;
  std::string truth_path;
  std::vector<Arm> arms{Arm{}};
  std::optional<std::size_t> budget;
  std::size_t init_labels_per_task = 2;
  std::size_t replicates = 10;
  std::uint64_t seed = 1;
  std::size_t metric_stride = 1;
  std::size_t threads = 1;
  std::string output_dir = "crowdal_out";
  double alpha0 = 1.0;
  double gamma0 = 0.0;
  /// Weak Gaussian regularizers centred on alpha0 and gamma0. Without them
  /// alpha and beta are only identified up to a common scale.
  PriorConfig prior{0.5, GaussianPrior{1.0, 1.0}, GaussianPrior{0.0, 1.0}};
  EmConfig em;

  std::size_t budget_or_default() const { return budget.value_or(kDefaultBudget); }

  /// Throws ConfigError on an invalid combination for `mode`.
  void validate() const;

  static constexpr std::size_t kDefaultBudget = 1000;
};

using KeyValues = std::map<std::string, std::string, std::less<>>;

/// Flat `key = value` text; `#` starts a comment; blank lines ignored.
/// Duplicate keys and lines without '=' raise ParseError.
KeyValues parse_key_values(std::istream& in, const std::string& source);
KeyValues read_config_file(const std::filesystem::path& path);

/// Parses "key=value" command-line overrides into `kv`, replacing existing keys.
void apply_override(KeyValues& kv, std::string_view assignment);

/// Builds a RunConfig from key/value pairs. Unknown keys raise ConfigError.
RunConfig make_run_config(RunMode mode, const KeyValues& kv);

/// Every recognised key with its default, for documentation and --help.
std::vector<std::pair<std::string, std::string>> config_keys();

std::string to_string(RunMode mode);

}  // namespace crowdal
