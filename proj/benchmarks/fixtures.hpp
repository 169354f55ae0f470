#pragma once

#include "crowdal/active_loop.hpp"

namespace bench {

// Population plus the initial two-labels-per-task matrix, as the simulations
// start from.
struct Start {
  crowdal::Population pool;
  crowdal::LabelMatrix labels;
};

inline Start binary_start(std::uint64_t seed) {
  using namespace crowdal;
  auto prng = purpose_stream(seed, StreamPurpose::Pool, 0);
  Start s{generate_binary_pool(BinaryPoolSpec{}, prng), {}};
  SimulatedOracle oracle(s.pool, purpose_stream(seed, StreamPurpose::Oracle, 0));
  auto init = purpose_stream(seed, StreamPurpose::Init, 0);
  s.labels = initialize(worker_count(s.pool), task_count(s.pool), 2, oracle, init);
  return s;
}

inline Start gaussian_start(std::uint64_t seed) {
  using namespace crowdal;
  auto prng = purpose_stream(seed, StreamPurpose::Pool, 0);
  Start s{generate_gaussian_pool(GaussianPoolSpec{}, prng), {}};
  SimulatedOracle oracle(s.pool, purpose_stream(seed, StreamPurpose::Oracle, 0));
  auto init = purpose_stream(seed, StreamPurpose::Init, 0);
  s.labels = initialize(worker_count(s.pool), task_count(s.pool), 2, oracle, init);
  return s;
}

inline const crowdal::PriorConfig kPrior{0.5, crowdal::GaussianPrior{1.0, 1.0},
                                         crowdal::GaussianPrior{0.0, 1.0}};

}  // namespace bench
