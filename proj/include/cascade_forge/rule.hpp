#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "cascade_forge/phonology.hpp"

namespace cascade_forge {

struct Predicate;

namespace predicates {

struct PhoneSet {
  std::set<std::string, std::less<>> phones;
  bool operator==(const PhoneSet&) const = default;
};
struct IsNothing {
  bool operator==(const IsNothing&) const = default;
};
struct WordStart {
  bool operator==(const WordStart&) const = default;
};
struct WordEnd {
  bool operator==(const WordEnd&) const = default;
};
struct FeatureReq {
  FeatureRequirements reqs;
  bool operator==(const FeatureReq&) const = default;
};
struct Not {
  std::shared_ptr<const Predicate> inner;
  bool operator==(const Not& other) const;
};

}  // namespace predicates

/// Boolean test on a single token of a TokenizedWord.
struct Predicate {
  std::variant<predicates::PhoneSet, predicates::IsNothing, predicates::WordStart,
               predicates::WordEnd, predicates::FeatureReq, predicates::Not>
      value;

  static Predicate phones(std::set<std::string, std::less<>> symbols) { return {predicates::PhoneSet{std::move(symbols)}}; }
  static Predicate nothing() { return {predicates::IsNothing{}}; }
  static Predicate word_start() { return {predicates::WordStart{}}; }
  static Predicate word_end() { return {predicates::WordEnd{}}; }
  static Predicate features(FeatureRequirements reqs) { return {predicates::FeatureReq{std::move(reqs)}}; }
  static Predicate negate(Predicate inner) {
    return {predicates::Not{std::make_shared<const Predicate>(std::move(inner))}};
  }

  template <class T>
  bool is() const noexcept {
    return std::holds_alternative<T>(value);
  }

  /// Whether some phone token could satisfy this predicate.
  bool can_match_phone() const;

  bool operator==(const Predicate&) const = default;
};

namespace mappings {

struct Delete {
  bool operator==(const Delete&) const = default;
};
struct Substitute {
  std::map<std::string, std::vector<std::string>, std::less<>> map;
  bool operator==(const Substitute&) const = default;
};
struct Insert {
  std::vector<std::string> phones;
  bool operator==(const Insert&) const = default;
};

}  // namespace mappings

using MappingFn = std::variant<mappings::Delete, mappings::Substitute, mappings::Insert>;

/// An executable sound law: an environment of predicates matched over a
/// token window, and mapping functions applied at selected window slots.
struct Rule {
  std::vector<Predicate> predicates;
  std::vector<std::size_t> change_pos;
  std::vector<MappingFn> mappings;
  std::string name;

  /// Throws RuleError when the structural invariants do not hold.
  void validate() const;
  /// validate() plus: every phone mentioned by the rule is in `inventory`
  /// and feature indices are in range.
  void validate(const Inventory& inventory) const;

  // The name is metadata and does not take part in equality.
  bool operator==(const Rule& other) const {
    return predicates == other.predicates && change_pos == other.change_pos && mappings == other.mappings;
  }
};

using Cascade = std::vector<Rule>;

struct TokenPosition {
  bool is_first = false;
  bool is_last = false;
};

/// Messages about mappings that were skipped during application.
using Diagnostics = std::vector<std::string>;

bool match_predicate(const Predicate& pred, std::string_view token, TokenPosition position,
                     const Inventory& inventory);

/// All window start indices at which the rule's environment matches.
std::vector<std::size_t> find_sites(const Rule& rule, const TokenizedWord& word, const Inventory& inventory);

/// Detect-then-apply: sites are found on the input word only, then all
/// mappings fire at once. When two sites touch the same token, the leftmost
/// site keeps it.
TokenizedWord apply_rule(const Rule& rule, const TokenizedWord& word, const Inventory& inventory,
                         Diagnostics* diagnostics = nullptr);

struct CascadeResult {
  TokenizedWord output;
  std::vector<TokenizedWord> trace;  // output after each rule
};

CascadeResult apply_cascade(const Cascade& cascade, const TokenizedWord& word, const Inventory& inventory,
                            Diagnostics* diagnostics = nullptr);

/// Output only; skips building the trace.
TokenizedWord run_cascade(const Cascade& cascade, const TokenizedWord& word, const Inventory& inventory);

}  // namespace cascade_forge
