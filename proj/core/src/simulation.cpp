#include "crowdal/simulation.hpp"

#include <cmath>
#include <string>
#include <utility>

namespace crowdal {

namespace {

enum SubStream : std::uint64_t {
  kWorkerShuffle = 1,
  kTaskShuffle = 2,
  kTrueLabel = 3,
  kAlpha = 4,
  kBeta = 5,
};

template <typename T>
void shuffle(std::vector<T>& values, RandomStream rng) {
  for (std::size_t k = values.size(); k > 1; --k) {
    std::swap(values[k - 1], values[rng.uniform_index(k)]);
  }
}

std::vector<std::optional<Label>> draw_true_labels(std::size_t tasks, std::uint64_t key) {
  std::vector<std::optional<Label>> z(tasks);
  for (TaskIndex j = 0; j < tasks; ++j) {
    auto rng = RandomStream::derive(key, {kTrueLabel, j});
    z[j] = rng.bernoulli(0.5) ? Label::Positive : Label::Negative;
  }
  return z;
}

void require_probability(double p, const char* name) {
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError(std::string(name) + " must lie in [0,1]");
}

}  // namespace

double AccuracyTable::at(WorkerType worker, TaskType task) const {
  if (worker == WorkerType::Good) return task == TaskType::Hard ? good_hard : good_easy;
  return task == TaskType::Hard ? bad_hard : bad_easy;
}

void BinaryPoolSpec::validate() const {
  if (workers() == 0 || tasks() == 0) throw ContractError("binary pool needs workers and tasks");
  require_probability(acc.good_hard, "acc_good_hard");
  require_probability(acc.good_easy, "acc_good_easy");
  require_probability(acc.bad_hard, "acc_bad_hard");
  require_probability(acc.bad_easy, "acc_bad_easy");
}

void GaussianPoolSpec::validate() const {
  if (workers == 0 || tasks == 0) throw ContractError("gaussian pool needs workers and tasks");
  if (!(alpha.stddev >= 0.0) || !(beta.stddev >= 0.0)) {
    throw DomainError("gaussian pool stddevs must be non-negative");
  }
  if (beta.stddev == 0.0 && !(beta.mean > 0.0)) {
    throw DomainError("degenerate beta distribution has no positive mass");
  }
}

std::size_t GroundTruth::scored_count() const {
  std::size_t count = 0;
  for (const auto& z : z_true) count += z.has_value();
  return count;
}

Label GroundTruth::label(TaskIndex task) const {
  const auto& z = z_true.at(task);
  if (!z) throw ContractError("task " + std::to_string(task) + " has no true label");
  return *z;
}

BinaryPool generate_binary_pool(const BinaryPoolSpec& spec, RandomStream& rng) {
  spec.validate();
  const std::uint64_t key = rng.next_u64();

  BinaryPool pool;
  pool.spec = spec;
  pool.worker_types.assign(spec.good_workers, WorkerType::Good);
  pool.worker_types.resize(spec.workers(), WorkerType::Bad);
  pool.task_types.assign(spec.easy_tasks, TaskType::Easy);
  pool.task_types.resize(spec.tasks(), TaskType::Hard);
  shuffle(pool.worker_types, RandomStream::derive(key, {kWorkerShuffle}));
  shuffle(pool.task_types, RandomStream::derive(key, {kTaskShuffle}));

  pool.truth.z_true = draw_true_labels(spec.tasks(), key);
  std::vector<double> alpha(spec.workers());
  for (WorkerIndex i = 0; i < alpha.size(); ++i) {
    alpha[i] = pool.worker_types[i] == WorkerType::Good ? spec.alpha_good : spec.alpha_bad;
  }
  pool.truth.alpha_true = std::move(alpha);
  return pool;
}

GaussianPool generate_gaussian_pool(const GaussianPoolSpec& spec, RandomStream& rng) {
  spec.validate();
  const std::uint64_t key = rng.next_u64();

  GaussianPool pool;
  pool.spec = spec;
  std::vector<double> alpha(spec.workers);
  for (WorkerIndex i = 0; i < spec.workers; ++i) {
    auto sub = RandomStream::derive(key, {kAlpha, i});
    alpha[i] = sub.normal(spec.alpha.mean, spec.alpha.stddev);
  }
  std::vector<double> beta(spec.tasks);
  for (TaskIndex j = 0; j < spec.tasks; ++j) {
    auto sub = RandomStream::derive(key, {kBeta, j});
    double b = 0.0;
    do {
      b = sub.normal(spec.beta.mean, spec.beta.stddev);
    } while (!(b > 0.0));
    beta[j] = b;
  }
  pool.truth.z_true = draw_true_labels(spec.tasks, key);
  pool.truth.alpha_true = std::move(alpha);
  pool.truth.beta_true = std::move(beta);
  return pool;
}

const GroundTruth& truth_of(const Population& pool) {
  return std::visit([](const auto& p) -> const GroundTruth& { return p.truth; }, pool);
}

std::size_t worker_count(const Population& pool) {
  return std::visit(
      [](const auto& p) -> std::size_t {
        if constexpr (std::is_same_v<std::decay_t<decltype(p)>, BinaryPool>) {
          return p.worker_types.size();
        } else {
          return p.truth.alpha_true->size();
        }
      },
      pool);
}

std::size_t task_count(const Population& pool) { return truth_of(pool).task_count(); }

double correct_probability(const Population& pool, WorkerIndex worker, TaskIndex task) {
  if (const auto* b = std::get_if<BinaryPool>(&pool)) {
    return b->spec.acc.at(b->worker_types.at(worker), b->task_types.at(task));
  }
  const auto& g = std::get<GaussianPool>(pool);
  const double x = g.truth.alpha_true->at(worker) * g.truth.beta_true->at(task);
  return 1.0 / (1.0 + std::exp(-x));
}

Label sample_label(WorkerIndex worker, TaskIndex task, const Population& pool, RandomStream& rng) {
  const double q = correct_probability(pool, worker, task);
  const Label truth = truth_of(pool).label(task);
  return rng.bernoulli(q) ? truth : negate(truth);
}

}  // namespace crowdal
