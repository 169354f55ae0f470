#include "crowdal/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

namespace crowdal {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? s.npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, const char* expected) {
  throw ConfigError("config key '" + std::string(key) + "': expected " + expected + ", got '" +
                    std::string(value) + "'");
}

template <typename T>
T parse_integer(std::string_view key, std::string_view value) {
  T out{};
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size() || value.empty()) {
    bad_value(key, value, "a non-negative integer");
  }
  return out;
}

double parse_real(std::string_view key, std::string_view value) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size() || value.empty()) {
    bad_value(key, value, "a real number");
  }
  return out;
}

std::optional<GaussianPrior> parse_regularizer(std::string_view key, std::string_view value) {
  if (value == "none" || value == "off") return std::nullopt;
  const auto parts = split(value, ':');
  if (parts.size() != 2) bad_value(key, value, "'none' or '<mean>:<stddev>'");
  return GaussianPrior{parse_real(key, parts[0]), parse_real(key, parts[1])};
}

using Setter = std::function<void(RunConfig&, std::string_view key, std::string_view value)>;

struct KeySpec {
  const char* key;
  const char* default_value;
  Setter set;
};

#define CROWDAL_SIZE(field) \
  [](RunConfig& c, std::string_view k, std::string_view v) { c.field = parse_integer<std::size_t>(k, v); }
#define CROWDAL_REAL(field) \
  [](RunConfig& c, std::string_view k, std::string_view v) { c.field = parse_real(k, v); }

const std::vector<KeySpec>& key_table() {
  static const std::vector<KeySpec> table = {
      {"pool", "none",
       [](RunConfig& c, std::string_view k, std::string_view v) {
         if (v == "binary") c.pool = PoolKind::Binary;
         else if (v == "gaussian") c.pool = PoolKind::Gaussian;
         else if (v == "none") c.pool = PoolKind::None;
         else bad_value(k, v, "binary, gaussian or none");
       }},
      {"binary.good_workers", "8", CROWDAL_SIZE(binary.good_workers)},
      {"binary.bad_workers", "16", CROWDAL_SIZE(binary.bad_workers)},
      {"binary.easy_tasks", "500", CROWDAL_SIZE(binary.easy_tasks)},
      {"binary.hard_tasks", "250", CROWDAL_SIZE(binary.hard_tasks)},
      {"binary.acc_good_hard", "0.95", CROWDAL_REAL(binary.acc.good_hard)},
      {"binary.acc_good_easy", "1", CROWDAL_REAL(binary.acc.good_easy)},
      {"binary.acc_bad_hard", "0.54", CROWDAL_REAL(binary.acc.bad_hard)},
      {"binary.acc_bad_easy", "1", CROWDAL_REAL(binary.acc.bad_easy)},
      {"binary.alpha_good", "2", CROWDAL_REAL(binary.alpha_good)},
      {"binary.alpha_bad", "0.1", CROWDAL_REAL(binary.alpha_bad)},
      {"gaussian.workers", "50", CROWDAL_SIZE(gaussian.workers)},
      {"gaussian.tasks", "1000", CROWDAL_SIZE(gaussian.tasks)},
      {"gaussian.alpha_mean", "1", CROWDAL_REAL(gaussian.alpha.mean)},
      {"gaussian.alpha_sd", "1", CROWDAL_REAL(gaussian.alpha.stddev)},
      {"gaussian.beta_mean", "1", CROWDAL_REAL(gaussian.beta.mean)},
      {"gaussian.beta_sd", "1", CROWDAL_REAL(gaussian.beta.stddev)},
      {"labels", "", [](RunConfig& c, std::string_view, std::string_view v) { c.labels_path = v; }},
      {"truth", "", [](RunConfig& c, std::string_view, std::string_view v) { c.truth_path = v; }},
      {"arms", "proposed:best",
       [](RunConfig& c, std::string_view k, std::string_view v) {
         c.arms.clear();
         for (auto part : split(v, ',')) {
           if (part.empty()) bad_value(k, v, "a comma-separated arm list");
           c.arms.push_back(parse_arm(part));
         }
       }},
      {"budget", "1000",
       [](RunConfig& c, std::string_view k, std::string_view v) {
         c.budget = parse_integer<std::size_t>(k, v);
       }},
      {"init_labels_per_task", "2", CROWDAL_SIZE(init_labels_per_task)},
      {"replicates", "10", CROWDAL_SIZE(replicates)},
      {"seed", "1",
       [](RunConfig& c, std::string_view k, std::string_view v) {
         c.seed = parse_integer<std::uint64_t>(k, v);
       }},
      {"metric_stride", "1", CROWDAL_SIZE(metric_stride)},
      {"threads", "1", CROWDAL_SIZE(threads)},
      {"output_dir", "crowdal_out",
       [](RunConfig& c, std::string_view, std::string_view v) { c.output_dir = v; }},
      {"init.alpha", "1", CROWDAL_REAL(alpha0)},
      {"init.gamma", "0", CROWDAL_REAL(gamma0)},
      {"prior.pi", "0.5", CROWDAL_REAL(prior.pi)},
      {"prior.alpha_reg", "1:1",
       [](RunConfig& c, std::string_view k, std::string_view v) {
         c.prior.alpha_reg = parse_regularizer(k, v);
       }},
      {"prior.gamma_reg", "0:1",
       [](RunConfig& c, std::string_view k, std::string_view v) {
         c.prior.gamma_reg = parse_regularizer(k, v);
       }},
      {"em.max_rounds", "50",
       [](RunConfig& c, std::string_view k, std::string_view v) {
         c.em.max_rounds = parse_integer<int>(k, v);
       }},
      {"em.rel_tolerance", "1e-6", CROWDAL_REAL(em.rel_tolerance)},
      {"opt.max_steps", "50",
       [](RunConfig& c, std::string_view k, std::string_view v) {
         c.em.optimizer.max_steps = parse_integer<int>(k, v);
       }},
      {"opt.tolerance", "1e-6", CROWDAL_REAL(em.optimizer.tolerance)},
      {"opt.alpha_min", "-10", CROWDAL_REAL(em.optimizer.bounds.alpha_min)},
      {"opt.alpha_max", "10", CROWDAL_REAL(em.optimizer.bounds.alpha_max)},
      {"opt.gamma_min", "-5", CROWDAL_REAL(em.optimizer.bounds.gamma_min)},
      {"opt.gamma_max", "5", CROWDAL_REAL(em.optimizer.bounds.gamma_max)},
  };
  return table;
}

#undef CROWDAL_SIZE
#undef CROWDAL_REAL

}  // namespace

std::string Arm::name() const { return to_string(task) + "-" + to_string(worker); }

Arm parse_arm(std::string_view text) {
  const auto parts = split(trim(text), ':');
  if (parts.empty() || parts.size() > 2) throw ConfigError("bad arm '" + std::string(text) + "'");
  Arm arm;
  if (parts[0] == "proposed") arm.task = TaskPolicy::Proposed;
  else if (parts[0] == "traversal") arm.task = TaskPolicy::Traversal;
  else if (parts[0] == "random") arm.task = TaskPolicy::Random;
  else throw ConfigError("unknown task strategy '" + std::string(parts[0]) + "'");

  const std::string_view worker =
      parts.size() == 2 ? parts[1] : (arm.task == TaskPolicy::Proposed ? "best" : "uniform");
  if (worker == "best") {
    arm.worker.policy = WorkerPolicy::BestWorker;
  } else if (worker == "weighted") {
    arm.worker.policy = WorkerPolicy::Weighted;
  } else if (worker == "uniform") {
    arm.worker.policy = WorkerPolicy::Uniform;
  } else if (worker.starts_with("egreedy")) {
    auto eps = worker.substr(7);
    if (!eps.empty() && eps.front() == '=') eps.remove_prefix(1);
    arm.worker.policy = WorkerPolicy::EpsilonGreedy;
    arm.worker.epsilon = parse_real("arms", eps);
    try {
      arm.worker.validate();
    } catch (const DomainError& e) {
      throw ConfigError(std::string("arm '") + std::string(text) + "': " + e.what());
    }
  } else {
    throw ConfigError("unknown worker strategy '" + std::string(worker) + "'");
  }
  return arm;
}

void RunConfig::validate() const {
  switch (mode) {
    case RunMode::Simulate:
      if (pool == PoolKind::None) throw ConfigError("simulate requires a pool (pool=binary|gaussian)");
      break;
    case RunMode::Replay:
      if (labels_path.empty()) throw ConfigError("replay requires a label file");
      break;
    case RunMode::Aggregate:
      if (labels_path.empty()) throw ConfigError("aggregate requires a label file");
      if (budget) throw ConfigError("aggregate takes no budget");
      break;
  }
  if (mode != RunMode::Aggregate) {
    if (replicates < 1) throw ConfigError("replicates must be >= 1");
    if (arms.empty()) throw ConfigError("at least one arm is required");
    if (init_labels_per_task < 1) throw ConfigError("init_labels_per_task must be >= 1");
  }
  if (metric_stride < 1) throw ConfigError("metric_stride must be >= 1");
  if (threads < 1) throw ConfigError("threads must be >= 1");
  if (output_dir.empty()) throw ConfigError("output_dir must not be empty");
  if (em.max_rounds < 1) throw ConfigError("em.max_rounds must be >= 1");
  if (em.optimizer.max_steps < 0) throw ConfigError("opt.max_steps must be >= 0");
  const auto& b = em.optimizer.bounds;
  if (!(b.alpha_min < b.alpha_max) || !(b.gamma_min < b.gamma_max)) {
    throw ConfigError("optimizer bounds must satisfy min < max");
  }
  if (!(alpha0 >= b.alpha_min && alpha0 <= b.alpha_max) ||
      !(gamma0 >= b.gamma_min && gamma0 <= b.gamma_max)) {
    throw ConfigError("initial parameters lie outside the optimizer bounds");
  }
  try {
    prior.validate();
    if (pool == PoolKind::Binary) binary.validate();
    if (pool == PoolKind::Gaussian) gaussian.validate();
  } catch (const std::logic_error& e) {
    throw ConfigError(e.what());
  }
  if (mode == RunMode::Simulate) {
    const std::size_t m = pool == PoolKind::Binary ? binary.workers() : gaussian.workers;
    if (init_labels_per_task > m) {
      throw ConfigError("init_labels_per_task exceeds the number of workers");
    }
  }
}

KeyValues parse_key_values(std::istream& in, const std::string& source) {
  KeyValues kv;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = line;
    if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    view = trim(view);
    if (view.empty()) continue;
    const auto eq = view.find('=');
    if (eq == std::string_view::npos) throw ParseError(source, line_no, "expected key = value");
    const std::string key(trim(view.substr(0, eq)));
    if (key.empty()) throw ParseError(source, line_no, "empty key");
    if (kv.contains(key)) throw ParseError(source, line_no, "duplicate key '" + key + "'");
    kv.emplace(key, std::string(trim(view.substr(eq + 1))));
  }
  return kv;
}

KeyValues read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  return parse_key_values(in, path.string());
}

void apply_override(KeyValues& kv, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) {
    throw ConfigError("override '" + std::string(assignment) + "' is not key=value");
  }
  kv.insert_or_assign(std::string(trim(assignment.substr(0, eq))),
                      std::string(trim(assignment.substr(eq + 1))));
}

RunConfig make_run_config(RunMode mode, const KeyValues& kv) {
  RunConfig cfg;
  cfg.mode = mode;
  const auto& table = key_table();
  for (const auto& [key, value] : kv) {
    const auto it = std::find_if(table.begin(), table.end(),
                                 [&](const KeySpec& s) { return key == s.key; });
    if (it == table.end()) throw ConfigError("unknown config key '" + key + "'");
    it->set(cfg, key, value);
  }
  return cfg;
}

std::vector<std::pair<std::string, std::string>> config_keys() {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& s : key_table()) out.emplace_back(s.key, s.default_value);
  return out;
}

std::string to_string(RunMode mode) {
  switch (mode) {
    case RunMode::Simulate: return "simulate";
    case RunMode::Replay: return "replay";
    case RunMode::Aggregate: return "aggregate";
  }
  return "unknown";
}

}  // namespace crowdal
