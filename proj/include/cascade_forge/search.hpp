#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "cascade_forge/metrics.hpp"
#include "cascade_forge/proposers.hpp"
#include "cascade_forge/rule.hpp"

namespace cascade_forge {

struct Hypothesis {
  Cascade cascade;
  std::vector<TokenizedWord> current_forms;
  double reward = 0.0;
  int step = 0;
};

struct SearchConfig {
  std::size_t k = 20;  // beam width
  std::size_t s = 1;   // samples per beam per step
  std::size_t m = 5;   // max steps
  std::uint64_t seed = 0;
  bool early_stop_on_perfect = true;
  bool ites = false;  // filter the proposer's view of each beam's examples

  /// Throws std::invalid_argument unless k, s, m >= 1.
  void validate() const;
};

struct ItesSelection {
  std::vector<ExamplePair> pairs;
  std::set<std::string> delta_sl;
};

/// Keeps every changed pair and each unchanged pair whose source contains a
/// phone of delta_sl: the source phones within one position of an edit.
ItesSelection select_examples_ites(const std::vector<ExamplePair>& pairs);

struct RankedRule {
  Rule rule;
  RewardReport report;
};

/// Requests `s` candidates (optionally from the ITES view) and ranks them by
/// reward on the full dataset; ties go to the shorter serialization.
std::vector<RankedRule> induce_single_law(Proposer& proposer, const Dataset& dataset, const Inventory& inventory,
                                          std::size_t s, bool use_ites, Diagnostics* diagnostics = nullptr);

struct StepRecord {
  int step = 0;
  std::vector<Hypothesis> beams;  // after contraction
  std::size_t expansions = 0;     // successor hypotheses created
  std::vector<std::pair<std::string, std::size_t>> member_counts;  // summed over beams
  Diagnostics diagnostics;
};

using StepObserver = std::function<void(const StepRecord&)>;

/// Beam search over cascades. Parents stay in the pool as stand-pat
/// candidates, hypotheses with identical current forms share one slot, and
/// the returned beams are ranked like pick_best.
std::vector<Hypothesis> beam_search_cascade(Proposer& proposer, const Dataset& dataset, const Inventory& inventory,
                                            const SearchConfig& config, const StepObserver& observer = {});

/// Highest reward; ties go to fewer rules, then the smaller serialization.
const Hypothesis& pick_best(const std::vector<Hypothesis>& hypotheses);

/// Strict weak order used by pick_best and beam contraction.
bool hypothesis_before(const Hypothesis& a, const Hypothesis& b);

}  // namespace cascade_forge
