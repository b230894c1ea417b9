#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "cascade_forge/phonology.hpp"
#include "cascade_forge/rule.hpp"

namespace cascade_forge {

struct ExamplePair {
  TokenizedWord source;
  TokenizedWord target;
  std::string id;

  bool changed() const { return source != target; }
};

struct Dataset {
  std::vector<ExamplePair> pairs;
  std::string name;
  std::string language;
  std::string provenance;

  /// Throws std::invalid_argument on an empty dataset or duplicate ids.
  void validate() const;

  std::vector<TokenizedWord> sources() const;
  std::vector<TokenizedWord> targets() const;
};

struct RewardReport {
  std::vector<std::size_t> distances;  // per pair, prediction vs target
  std::vector<TokenizedWord> predictions;
  long long dist_source_target = 0;
  long long dist_pred_target = 0;
  double reward = 0.0;
  bool pass = false;
};

/// Unit-cost Levenshtein distance over phone tokens.
std::size_t edit_distance(const TokenizedWord& a, const TokenizedWord& b);
std::size_t edit_distance(std::span<const std::string> a, std::span<const std::string> b);

/// Sum of pairwise edit distances; throws std::invalid_argument on a length
/// mismatch.
long long dist(std::span<const TokenizedWord> preds, std::span<const TokenizedWord> targets);

/// 1 - dist(preds, targets) / dist(sources, targets). When sources already
/// equal targets the denominator is replaced by 1, so a perfect prediction
/// still scores 1 and any regression scores below it.
double reward(std::span<const TokenizedWord> sources, std::span<const TokenizedWord> preds,
              std::span<const TokenizedWord> targets);

double reward_from_distances(long long dist_source_target, long long dist_pred_target);

/// Mean of each instance's top-m rewards, averaged over instances. An
/// instance with fewer than m hypotheses contributes the mean of what it has.
double reward_at_m(const std::vector<std::vector<double>>& instance_rewards, std::size_t m);

/// Fraction of instances whose best reward is exactly 1.
double pass_rate(std::span<const double> instance_best_rewards);

/// Applies the cascade to every source and scores the result.
RewardReport evaluate(const Cascade& cascade, const Dataset& dataset, const Inventory& inventory);

/// Scores precomputed predictions against a dataset.
RewardReport score_predictions(const Dataset& dataset, std::vector<TokenizedWord> predictions);

enum class EditKind { Substitute, Delete, Insert };

/// One step of a minimal edit script. For Substitute/Delete, `position` is the
/// source phone index; for Insert it is the gap index (insert before source
/// phone `position`; `position == n` means at the end).
struct EditOp {
  EditKind kind;
  std::size_t position;
  std::string phone;  // new phone for Substitute/Insert

  bool operator==(const EditOp&) const = default;
};

/// Minimal edit script, ordered left to right. Ties prefer substitution,
/// then deletion, then insertion, taken while tracing back from the end of
/// both words.
std::vector<EditOp> edit_script(std::span<const std::string> source, std::span<const std::string> target);

}  // namespace cascade_forge
