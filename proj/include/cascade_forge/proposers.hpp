#pragma once

#include <chrono>
#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cascade_forge/metrics.hpp"
#include "cascade_forge/phonology.hpp"
#include "cascade_forge/rule.hpp"

namespace cascade_forge {

struct WordPair {
  TokenizedWord source;
  TokenizedWord target;
};

struct ProposalRequest {
  std::vector<WordPair> examples;
  std::size_t num_samples = 20;
  int step = 0;
  std::optional<std::chrono::milliseconds> budget_hint;

  /// Throws std::invalid_argument unless examples are non-empty and
  /// num_samples >= 1.
  void validate() const;
};

struct Proposal {
  std::vector<Rule> rules;
  std::vector<std::string> diagnostics;
  // Candidates contributed by each backend, after deduplication.
  std::vector<std::pair<std::string, std::size_t>> member_counts;
};

/// A source of candidate rules. Implementations never return a rule that
/// fails Rule::validate, and never throw for a misbehaving backend.
class Proposer {
 public:
  virtual ~Proposer() = default;
  virtual Proposal propose(const ProposalRequest& request) = 0;
  virtual std::string name() const = 0;
};

// ---------------------------------------------------------------------------
// Edit-candidate extraction

/// A cluster of edits observed in one example, with the context around it.
///
/// `tokens` is a contiguous slice of the source word's canonical token
/// sequence (phones, "@" separators, "#" boundaries) covering the edited span
/// plus `left_context`/`right_context` phones on either side. The
/// `not_word_start`/`not_word_end` flags add one more slot beyond the slice
/// that must hold a phone rather than the word boundary. `changes` are
/// (offset into tokens, mapping) pairs.
struct EditCandidate {
  std::vector<std::string> tokens;
  bool not_word_start = false;
  bool not_word_end = false;
  std::vector<std::pair<std::size_t, MappingFn>> changes;
  std::size_t left_context = 0;
  std::size_t right_context = 0;

  bool at_word_start() const { return !tokens.empty() && tokens.front() == kBoundaryToken; }
  bool at_word_end() const { return !tokens.empty() && tokens.back() == kBoundaryToken; }

  bool operator==(const EditCandidate&) const = default;
};

/// Every edit cluster (up to three adjacent source phones) of every changed
/// example, with left/right context of 0..2 phones and word-edge variants,
/// deduplicated in first-seen order.
std::vector<EditCandidate> extract_edit_candidates(const std::vector<WordPair>& examples);

/// Converts a candidate into a rule over singleton phone sets and boundary
/// predicates.
Rule candidate_to_rule(const EditCandidate& candidate);

// ---------------------------------------------------------------------------
// Built-in proposers

/// Deterministic enumerative proposer: turns every edit candidate into a
/// rule, scores it on the request examples and returns the best
/// `num_samples`, ties broken by shorter environment and then serialization.
class EnumerativeProposer final : public Proposer {
 public:
  explicit EnumerativeProposer(const Inventory& inventory) : inventory_(&inventory) {}
  Proposal propose(const ProposalRequest& request) override;
  std::string name() const override { return "builtin"; }

 private:
  const Inventory* inventory_;
};

/// Line-delimited JSON over a child process's standard streams. One child is
/// spawned per request: the request line goes to its stdin, the first line of
/// its stdout is the response.
class ExternalProposer final : public Proposer {
 public:
  ExternalProposer(std::vector<std::string> argv, const Inventory& inventory,
                   std::optional<std::chrono::milliseconds> timeout = std::nullopt);

  Proposal propose(const ProposalRequest& request) override;
  std::string name() const override;

  /// Throws ProposerError if the executable cannot be located.
  void probe() const;

  std::chrono::milliseconds timeout() const noexcept { return timeout_; }

 private:
  std::vector<std::string> argv_;
  const Inventory* inventory_;
  std::chrono::milliseconds timeout_;
};

/// Pools the members' valid candidates, deduplicated by canonical
/// serialization in member order.
class EnsembleProposer final : public Proposer {
 public:
  explicit EnsembleProposer(std::vector<std::unique_ptr<Proposer>> members);
  Proposal propose(const ProposalRequest& request) override;
  std::string name() const override;

 private:
  std::vector<std::unique_ptr<Proposer>> members_;
};

/// Parses "builtin" or "exec:<command line>" (arguments split on spaces).
std::unique_ptr<Proposer> make_proposer(std::string_view spec, const Inventory& inventory);

/// Timeout from CASCADE_FORGE_PROPOSER_TIMEOUT_MS, default 120 s.
std::chrono::milliseconds default_proposer_timeout();

// ---------------------------------------------------------------------------
// Wire protocol

/// {"v":1,"examples":[{"source":[...],"target":[...]}],"num_samples":N,"step":S}
std::string encode_request(const ProposalRequest& request);
ProposalRequest decode_request(std::string_view line, const Inventory& inventory);

/// {"v":1,"programs":[rule, ...]}
std::string encode_response(const std::vector<Rule>& rules);

/// Invalid programs are dropped with a diagnostic; a malformed line yields no
/// rules and one diagnostic.
Proposal decode_response(std::string_view line, const Inventory& inventory);

}  // namespace cascade_forge
