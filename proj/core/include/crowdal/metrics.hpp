#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "crowdal/simulation.hpp"
#include "crowdal/types.hpp"

namespace crowdal {

/// Fraction of positions where predicted equals truth.
/// Throws ContractError on length mismatch or empty input.
double accuracy(std::span<const Label> predicted, std::span<const Label> truth);

/// Sample Pearson correlation. nullopt when either input is constant.
/// Throws ContractError on length mismatch or fewer than two samples.
std::optional<double> pearson(std::span<const double> x, std::span<const double> y);

/// Fractional (1-based) ranks: tied values share the mean of the ranks they occupy.
std::vector<double> average_ranks(std::span<const double> values);

/// Pearson correlation of average-rank vectors.
std::optional<double> spearman(std::span<const double> x, std::span<const double> y);

struct ScoreReport {
  std::optional<double> accuracy;
  std::optional<double> pearson;
  std::optional<double> spearman;
  std::size_t scored_tasks = 0;
};

/// Accuracy over tasks with known truth; correlations of `alpha_estimate`
/// against truth.alpha_true when available.
ScoreReport score(std::span<const Label> predicted, const GroundTruth& truth,
                  std::span<const double> alpha_estimate);

}  // namespace crowdal
