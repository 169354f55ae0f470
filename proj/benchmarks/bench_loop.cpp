#include <benchmark/benchmark.h>

#include "crowdal/active_loop.hpp"
#include "fixtures.hpp"

using namespace crowdal;

namespace {

// state.range(0): task policy, state.range(1): queries per pass
void BM_ActiveLoop(benchmark::State& state) {
  const auto s = bench::binary_start(2);
  LoopConfig config;
  config.budget = static_cast<std::size_t>(state.range(1));
  config.prior = bench::kPrior;
  const auto policy = static_cast<TaskPolicy>(state.range(0));
  const WorkerStrategy worker = policy == TaskPolicy::Proposed
                                    ? WorkerStrategy{}
                                    : WorkerStrategy{WorkerPolicy::Uniform, 0.0};
  SimulatedOracle probe(s.pool, RandomStream(0));
  const ExperimentState prepared =
      prepare(s.labels, probe,
              ModelParams::uniform(s.labels.worker_count(), s.labels.task_count()), config,
              &truth_of(s.pool));
  for (auto _ : state) {
    state.PauseTiming();
    ExperimentState st = prepared;
    SimulatedOracle oracle(s.pool, RandomStream(3));
    TaskStrategy task{policy, 0};
    RandomStream tr(4), wr(5);
    state.ResumeTiming();
    run(st, task, worker, oracle, &truth_of(s.pool), tr, wr, config);
    benchmark::DoNotOptimize(st.trace.back());
  }
  state.SetItemsProcessed(state.iterations() * state.range(1));
}
BENCHMARK(BM_ActiveLoop)
    ->Args({static_cast<int>(TaskPolicy::Proposed), 100})
    ->Args({static_cast<int>(TaskPolicy::Random), 100})
    ->Unit(benchmark::kMillisecond);

}  // namespace
