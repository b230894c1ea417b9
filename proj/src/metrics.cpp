#include "cascade_forge/metrics.hpp"

#include <algorithm>
#include <functional>
#include <numeric>
#include <set>
#include <stdexcept>

namespace cascade_forge {

void Dataset::validate() const {
  if (pairs.empty()) throw std::invalid_argument("dataset has no pairs");
  std::set<std::string> ids;
  for (const auto& p : pairs) {
    if (!ids.insert(p.id).second) throw std::invalid_argument("duplicate pair id \"" + p.id + "\"");
  }
}

std::vector<TokenizedWord> Dataset::sources() const {
  std::vector<TokenizedWord> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) out.push_back(p.source);
  return out;
}

std::vector<TokenizedWord> Dataset::targets() const {
  std::vector<TokenizedWord> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) out.push_back(p.target);
  return out;
}

std::size_t edit_distance(std::span<const std::string> a, std::span<const std::string> b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  std::iota(prev.begin(), prev.end(), std::size_t{0});
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({sub, prev[j] + 1, cur[j - 1] + 1});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

std::size_t edit_distance(const TokenizedWord& a, const TokenizedWord& b) {
  return edit_distance(std::span<const std::string>(a.phones()), std::span<const std::string>(b.phones()));
}

long long dist(std::span<const TokenizedWord> preds, std::span<const TokenizedWord> targets) {
  if (preds.size() != targets.size()) {
    throw std::invalid_argument("dist: " + std::to_string(preds.size()) + " predictions vs " +
                                std::to_string(targets.size()) + " targets");
  }
  long long total = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) total += static_cast<long long>(edit_distance(preds[i], targets[i]));
  return total;
}

double reward_from_distances(long long dist_source_target, long long dist_pred_target) {
  if (dist_source_target == 0) {
    return dist_pred_target == 0 ? 1.0 : 1.0 - static_cast<double>(dist_pred_target);
  }
  return 1.0 - static_cast<double>(dist_pred_target) / static_cast<double>(dist_source_target);
}

double reward(std::span<const TokenizedWord> sources, std::span<const TokenizedWord> preds,
              std::span<const TokenizedWord> targets) {
  if (sources.size() != targets.size()) {
    throw std::invalid_argument("reward: sources and targets differ in length");
  }
  return reward_from_distances(dist(sources, targets), dist(preds, targets));
}

double reward_at_m(const std::vector<std::vector<double>>& instance_rewards, std::size_t m) {
  if (m < 1) throw std::invalid_argument("reward@m requires m >= 1");
  if (instance_rewards.empty()) throw std::invalid_argument("reward@m over zero instances");
  double total = 0.0;
  for (const auto& rewards : instance_rewards) {
    if (rewards.empty()) throw std::invalid_argument("reward@m: instance without hypotheses");
    std::vector<double> sorted = rewards;
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    const std::size_t take = std::min(m, sorted.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < take; ++i) sum += sorted[i];
    total += sum / static_cast<double>(take);
  }
  return total / static_cast<double>(instance_rewards.size());
}

double pass_rate(std::span<const double> instance_best_rewards) {
  if (instance_best_rewards.empty()) throw std::invalid_argument("pass rate over zero instances");
  const auto passed = std::count(instance_best_rewards.begin(), instance_best_rewards.end(), 1.0);
  return static_cast<double>(passed) / static_cast<double>(instance_best_rewards.size());
}

RewardReport score_predictions(const Dataset& dataset, std::vector<TokenizedWord> predictions) {
  if (predictions.size() != dataset.pairs.size()) {
    throw std::invalid_argument("score_predictions: prediction count does not match the dataset");
  }
  RewardReport report;
  report.distances.reserve(predictions.size());
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const auto& pair = dataset.pairs[i];
    const std::size_t d = edit_distance(predictions[i], pair.target);
    report.distances.push_back(d);
    report.dist_pred_target += static_cast<long long>(d);
    report.dist_source_target += static_cast<long long>(edit_distance(pair.source, pair.target));
  }
  report.predictions = std::move(predictions);
  report.reward = reward_from_distances(report.dist_source_target, report.dist_pred_target);
  report.pass = report.dist_pred_target == 0;
  return report;
}

RewardReport evaluate(const Cascade& cascade, const Dataset& dataset, const Inventory& inventory) {
  std::vector<TokenizedWord> preds;
  preds.reserve(dataset.pairs.size());
  for (const auto& p : dataset.pairs) preds.push_back(run_cascade(cascade, p.source, inventory));
  return score_predictions(dataset, std::move(preds));
}

std::vector<EditOp> edit_script(std::span<const std::string> source, std::span<const std::string> target) {
  const std::size_t n = source.size(), m = target.size();
  std::vector<std::vector<std::size_t>> d(n + 1, std::vector<std::size_t>(m + 1));
  for (std::size_t i = 0; i <= n; ++i) d[i][0] = i;
  for (std::size_t j = 0; j <= m; ++j) d[0][j] = j;
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      d[i][j] = std::min({d[i - 1][j - 1] + (source[i - 1] == target[j - 1] ? 0 : 1), d[i - 1][j] + 1,
                          d[i][j - 1] + 1});
    }
  }
  std::vector<EditOp> ops;
  std::size_t i = n, j = m;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0 && source[i - 1] == target[j - 1] && d[i][j] == d[i - 1][j - 1]) {
      --i;
      --j;
    } else if (i > 0 && j > 0 && d[i][j] == d[i - 1][j - 1] + 1) {
      ops.push_back({EditKind::Substitute, i - 1, target[j - 1]});
      --i;
      --j;
    } else if (i > 0 && d[i][j] == d[i - 1][j] + 1) {
      ops.push_back({EditKind::Delete, i - 1, {}});
      --i;
    } else {
      ops.push_back({EditKind::Insert, i, target[j - 1]});
      --j;
    }
  }
  std::reverse(ops.begin(), ops.end());
  return ops;
}

}  // namespace cascade_forge
