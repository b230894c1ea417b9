#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cascade_forge {

inline constexpr std::string_view kBoundaryToken = "#";
inline constexpr std::string_view kSeparatorToken = "@";

// Feature values: 1 present, 0 absent, -1 unspecified.
using FeatureValue = std::int8_t;

// Partial map feature index -> required value (true = 1, false = 0).
using FeatureRequirements = std::map<std::size_t, bool>;

struct Phone {
  std::string symbol;
  std::vector<FeatureValue> features;

  bool operator==(const Phone&) const = default;
};

/// Closed phone set with a shared feature geometry.
///
/// Phones keep declaration order (used for tie-breaking); the segmentation
/// order lists phone indices longest symbol first so that greedy
/// tokenization prefers "ts" over "t" + "s".
class Inventory {
 public:
  Inventory() = default;
  Inventory(std::vector<std::string> feature_names, std::vector<Phone> phones);

  /// Parses the tab-separated inventory format. Throws ParseError.
  static Inventory parse(std::string_view source);

  /// The built-in 120-segment inventory with 24 features.
  static const Inventory& default_inventory();

  const std::vector<Phone>& phones() const noexcept { return phones_; }
  const std::vector<std::string>& feature_names() const noexcept { return feature_names_; }
  std::size_t feature_count() const noexcept { return feature_names_.size(); }
  std::size_t size() const noexcept { return phones_.size(); }
  bool empty() const noexcept { return phones_.empty(); }

  const Phone* find(std::string_view symbol) const;
  std::optional<std::size_t> index_of(std::string_view symbol) const;
  bool contains(std::string_view symbol) const { return index_of(symbol).has_value(); }

  const std::vector<std::size_t>& segmentation_order() const noexcept { return segmentation_order_; }

 private:
  std::vector<std::string> feature_names_;
  std::vector<Phone> phones_;
  std::map<std::string, std::size_t, std::less<>> by_symbol_;
  std::vector<std::size_t> segmentation_order_;
};

/// A word in canonical token layout `# @ p1 @ p2 @ ... pn @ #`.
///
/// Only the phones are stored; boundary and separator tokens are implied by
/// position, so every instance is canonical by construction. Token i is `#`
/// for the first and last index, `@` for odd indices and phone (i-2)/2
/// otherwise.
class TokenizedWord {
 public:
  TokenizedWord() = default;
  explicit TokenizedWord(std::vector<std::string> phones);

  /// Rebuilds a word from an explicit token sequence; throws ParseError when
  /// the sequence is not in canonical layout.
  static TokenizedWord from_tokens(std::span<const std::string> tokens);

  const std::vector<std::string>& phones() const noexcept { return phones_; }
  std::size_t phone_count() const noexcept { return phones_.size(); }
  std::size_t token_count() const noexcept { return 2 * phones_.size() + 3; }
  std::string_view token(std::size_t index) const;
  bool is_phone_token(std::size_t index) const noexcept {
    return index % 2 == 0 && index > 0 && index + 1 < token_count();
  }
  std::vector<std::string> tokens() const;

  auto operator<=>(const TokenizedWord&) const = default;

 private:
  std::vector<std::string> phones_;
};

TokenizedWord tokenize(std::string_view word, const Inventory& inventory);
std::string detokenize(const TokenizedWord& word);

/// Space-separated token rendering, e.g. "# @ a @ j @ #".
std::string render_tokens(const TokenizedWord& word);

/// True when detokenizing and re-tokenizing reproduces the same phones.
bool is_round_trip_stable(const TokenizedWord& word, const Inventory& inventory);

bool feature_match(const Phone& phone, const FeatureRequirements& requirements);

/// Nearest inventory phone (Hamming distance over the specified entries of the
/// changed vector) to `phone` with `changes` applied. Ties go to the earlier
/// phone in inventory order.
const Phone& realize_feature_change(const Phone& phone, const FeatureRequirements& changes,
                                    const Inventory& inventory);

}  // namespace cascade_forge
