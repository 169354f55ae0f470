#include "crowdal/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace crowdal {

namespace {

void require_pair(std::size_t a, std::size_t b, std::size_t min_size) {
  if (a != b) throw ContractError("input lengths differ");
  if (a < min_size) throw ContractError("too few samples");
}

}  // namespace

double accuracy(std::span<const Label> predicted, std::span<const Label> truth) {
  require_pair(predicted.size(), truth.size(), 1);
  std::size_t hits = 0;
  for (std::size_t k = 0; k < predicted.size(); ++k) hits += predicted[k] == truth[k];
  return static_cast<double>(hits) / static_cast<double>(predicted.size());
}

std::optional<double> pearson(std::span<const double> x, std::span<const double> y) {
  require_pair(x.size(), y.size(), 2);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double dx = x[k] - mx;
    const double dy = y[k] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::vector<double> average_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  std::size_t start = 0;
  while (start < order.size()) {
    std::size_t end = start + 1;
    while (end < order.size() && values[order[end]] == values[order[start]]) ++end;
    // positions start..end-1 hold 1-based ranks start+1..end
    const double mean_rank = 0.5 * static_cast<double>(start + 1 + end);
    for (std::size_t k = start; k < end; ++k) ranks[order[k]] = mean_rank;
    start = end;
  }
  return ranks;
}

std::optional<double> spearman(std::span<const double> x, std::span<const double> y) {
  require_pair(x.size(), y.size(), 2);
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  return pearson(rx, ry);
}

ScoreReport score(std::span<const Label> predicted, const GroundTruth& truth,
                  std::span<const double> alpha_estimate) {
  if (predicted.size() != truth.task_count()) throw ContractError("prediction/truth size mismatch");
  ScoreReport report;
  std::vector<Label> p;
  std::vector<Label> t;
  for (TaskIndex j = 0; j < predicted.size(); ++j) {
    if (!truth.z_true[j]) continue;
    p.push_back(predicted[j]);
    t.push_back(*truth.z_true[j]);
  }
  report.scored_tasks = p.size();
  if (!p.empty()) report.accuracy = accuracy(p, t);
  if (truth.alpha_true && truth.alpha_true->size() == alpha_estimate.size() &&
      alpha_estimate.size() >= 2) {
    report.pearson = pearson(alpha_estimate, *truth.alpha_true);
    report.spearman = spearman(alpha_estimate, *truth.alpha_true);
  }
  return report;
}

}  // namespace crowdal
