#include <benchmark/benchmark.h>

#include "crowdal/glad_model.hpp"
#include "fixtures.hpp"

using namespace crowdal;

namespace {

const bench::Start& start(int pool) {
  static const bench::Start binary = bench::binary_start(1);
  static const bench::Start gaussian = bench::gaussian_start(1);
  return pool == 0 ? binary : gaussian;
}

void BM_EStep(benchmark::State& state) {
  const auto& s = start(static_cast<int>(state.range(0)));
  const auto theta = ModelParams::uniform(s.labels.worker_count(), s.labels.task_count());
  for (auto _ : state) benchmark::DoNotOptimize(e_step(s.labels, theta, bench::kPrior));
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(s.labels.size()));
}
BENCHMARK(BM_EStep)->Arg(0)->Arg(1);

void BM_QGradient(benchmark::State& state) {
  const auto& s = start(static_cast<int>(state.range(0)));
  const auto theta = ModelParams::uniform(s.labels.worker_count(), s.labels.task_count());
  const auto post = e_step(s.labels, theta, bench::kPrior);
  for (auto _ : state) benchmark::DoNotOptimize(q_gradient(s.labels, post, theta, bench::kPrior));
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(s.labels.size()));
}
BENCHMARK(BM_QGradient)->Arg(0)->Arg(1);

void BM_MStep(benchmark::State& state) {
  const auto& s = start(static_cast<int>(state.range(0)));
  const auto theta = ModelParams::uniform(s.labels.worker_count(), s.labels.task_count());
  const auto post = e_step(s.labels, theta, bench::kPrior);
  for (auto _ : state) benchmark::DoNotOptimize(m_step(s.labels, post, theta, bench::kPrior, {}));
}
BENCHMARK(BM_MStep)->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond);

void BM_EmFitCold(benchmark::State& state) {
  const auto& s = start(static_cast<int>(state.range(0)));
  const auto theta = ModelParams::uniform(s.labels.worker_count(), s.labels.task_count());
  for (auto _ : state) benchmark::DoNotOptimize(em_fit(s.labels, theta, bench::kPrior, {}));
}
BENCHMARK(BM_EmFitCold)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

// Refit after one extra label, warm-started from the previous optimum: the
// per-query cost of the active loop.
void BM_EmFitWarm(benchmark::State& state) {
  const auto& s = start(static_cast<int>(state.range(0)));
  const auto fit = em_fit(s.labels,
                          ModelParams::uniform(s.labels.worker_count(), s.labels.task_count()),
                          bench::kPrior, {});
  LabelMatrix more = s.labels;
  more.add(0, 0, Label::Positive);
  for (auto _ : state) benchmark::DoNotOptimize(em_fit(more, fit.params, bench::kPrior, {}));
}
BENCHMARK(BM_EmFitWarm)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace
