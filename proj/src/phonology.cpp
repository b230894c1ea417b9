#include "cascade_forge/phonology.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

#include "cascade_forge/errors.hpp"
#include "cascade_forge/resources.hpp"

namespace cascade_forge {
namespace {

bool is_reserved(std::string_view symbol) {
  return symbol == kBoundaryToken || symbol == kSeparatorToken;
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(s.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string at_line(std::size_t line) { return "inventory line " + std::to_string(line) + ": "; }

}  // namespace

Inventory::Inventory(std::vector<std::string> feature_names, std::vector<Phone> phones)
    : feature_names_(std::move(feature_names)), phones_(std::move(phones)) {
  for (std::size_t i = 0; i < phones_.size(); ++i) {
    const Phone& p = phones_[i];
    if (p.symbol.empty()) throw ParseError("empty phone symbol");
    if (is_reserved(p.symbol)) throw ParseError("reserved symbol \"" + p.symbol + "\" declared as a phone");
    if (p.features.size() != feature_names_.size()) {
      throw ParseError("phone \"" + p.symbol + "\" has " + std::to_string(p.features.size()) +
                       " feature values, expected " + std::to_string(feature_names_.size()));
    }
    for (FeatureValue v : p.features) {
      if (v < -1 || v > 1) throw ParseError("phone \"" + p.symbol + "\" has a feature value outside {-1,0,1}");
    }
    if (!by_symbol_.emplace(p.symbol, i).second) {
      throw ParseError("duplicate symbol \"" + p.symbol + "\"");
    }
  }
  segmentation_order_.resize(phones_.size());
  for (std::size_t i = 0; i < phones_.size(); ++i) segmentation_order_[i] = i;
  std::stable_sort(segmentation_order_.begin(), segmentation_order_.end(),
                   [this](std::size_t a, std::size_t b) {
                     return phones_[a].symbol.size() > phones_[b].symbol.size();
                   });
}

Inventory Inventory::parse(std::string_view source) {
  std::vector<std::string> names;
  std::vector<Phone> phones;
  std::optional<std::size_t> width;
  std::size_t line_no = 0;
  for (std::string_view raw : split(source, '\n')) {
    ++line_no;
    if (!raw.empty() && raw.back() == '\r') raw.remove_suffix(1);
    if (trim(raw).empty()) continue;
    if (raw.front() == '#') continue;
    if (raw.starts_with("!feature")) {
      for (std::string_view name : split(trim(raw.substr(8)), ',')) {
        name = trim(name);
        if (name.empty()) throw ParseError(at_line(line_no) + "empty feature name");
        names.emplace_back(name);
      }
      continue;
    }
    if (raw.starts_with("\\#")) raw.remove_prefix(1);
    const auto tab = raw.find('\t');
    if (tab == std::string_view::npos) throw ParseError(at_line(line_no) + "expected symbol<TAB>features");
    Phone phone;
    phone.symbol = std::string(trim(raw.substr(0, tab)));
    if (phone.symbol.empty()) throw ParseError(at_line(line_no) + "empty phone symbol");
    if (is_reserved(phone.symbol)) {
      throw ParseError(at_line(line_no) + "reserved symbol \"" + phone.symbol + "\" declared as a phone");
    }
    const std::string_view values = trim(raw.substr(tab + 1));
    if (!values.empty()) {
      for (std::string_view v : split(values, ',')) {
        v = trim(v);
        if (v == "1") phone.features.push_back(1);
        else if (v == "0") phone.features.push_back(0);
        else if (v == "-1") phone.features.push_back(-1);
        else throw ParseError(at_line(line_no) + "feature value \"" + std::string(v) + "\" not in {-1,0,1}");
      }
    }
    if (width && *width != phone.features.size()) {
      throw ParseError(at_line(line_no) + "ragged feature vector for \"" + phone.symbol + "\" (" +
                       std::to_string(phone.features.size()) + " values, expected " +
                       std::to_string(*width) + ")");
    }
    width = phone.features.size();
    phones.push_back(std::move(phone));
  }
  if (names.empty() && width) {
    for (std::size_t i = 0; i < *width; ++i) names.push_back("f" + std::to_string(i));
  }
  if (width && names.size() != *width) {
    throw ParseError("inventory declares " + std::to_string(names.size()) + " feature names but phones carry " +
                     std::to_string(*width) + " values");
  }
  return Inventory(std::move(names), std::move(phones));
}

const Inventory& Inventory::default_inventory() {
  static const Inventory inventory = parse(resources::default_inventory_source());
  return inventory;
}

const Phone* Inventory::find(std::string_view symbol) const {
  const auto it = by_symbol_.find(symbol);
  return it == by_symbol_.end() ? nullptr : &phones_[it->second];
}

std::optional<std::size_t> Inventory::index_of(std::string_view symbol) const {
  const auto it = by_symbol_.find(symbol);
  if (it == by_symbol_.end()) return std::nullopt;
  return it->second;
}

TokenizedWord::TokenizedWord(std::vector<std::string> phones) : phones_(std::move(phones)) {
  for (const auto& p : phones_) {
    if (p.empty() || is_reserved(p)) {
      throw std::invalid_argument("\"" + p + "\" is not a phone token");
    }
  }
}

TokenizedWord TokenizedWord::from_tokens(std::span<const std::string> tokens) {
  const std::size_t n = tokens.size();
  if (n < 3 || n % 2 == 0) {
    throw ParseError("malformed token sequence: " + std::to_string(n) + " tokens");
  }
  if (tokens.front() != kBoundaryToken || tokens.back() != kBoundaryToken) {
    throw ParseError("malformed token sequence: missing word boundary");
  }
  std::vector<std::string> phones;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (i % 2 == 1) {
      if (tokens[i] != kSeparatorToken) {
        throw ParseError("malformed token sequence: expected separator at index " + std::to_string(i));
      }
    } else {
      if (tokens[i].empty() || is_reserved(tokens[i])) {
        throw ParseError("malformed token sequence: expected phone at index " + std::to_string(i));
      }
      phones.push_back(tokens[i]);
    }
  }
  return TokenizedWord(std::move(phones));
}

std::string_view TokenizedWord::token(std::size_t index) const {
  const std::size_t n = token_count();
  if (index >= n) throw std::out_of_range("token index out of range");
  if (index == 0 || index + 1 == n) return kBoundaryToken;
  if (index % 2 == 1) return kSeparatorToken;
  return phones_[(index - 2) / 2];
}

std::vector<std::string> TokenizedWord::tokens() const {
  std::vector<std::string> out;
  out.reserve(token_count());
  for (std::size_t i = 0; i < token_count(); ++i) out.emplace_back(token(i));
  return out;
}

TokenizedWord tokenize(std::string_view word, const Inventory& inventory) {
  std::vector<std::string> phones;
  std::size_t pos = 0;
  while (pos < word.size()) {
    const std::string_view rest = word.substr(pos);
    bool matched = false;
    for (std::size_t idx : inventory.segmentation_order()) {
      const std::string& symbol = inventory.phones()[idx].symbol;
      if (rest.starts_with(symbol)) {
        phones.push_back(symbol);
        pos += symbol.size();
        matched = true;
        break;
      }
    }
    if (!matched) throw TokenizationError(std::string(word), pos);
  }
  return TokenizedWord(std::move(phones));
}

std::string detokenize(const TokenizedWord& word) {
  std::string out;
  for (const auto& p : word.phones()) out += p;
  return out;
}

std::string render_tokens(const TokenizedWord& word) {
  std::string out;
  for (std::size_t i = 0; i < word.token_count(); ++i) {
    if (i) out += ' ';
    out += word.token(i);
  }
  return out;
}

bool is_round_trip_stable(const TokenizedWord& word, const Inventory& inventory) {
  try {
    return tokenize(detokenize(word), inventory) == word;
  } catch (const TokenizationError&) {
    return false;
  }
}

bool feature_match(const Phone& phone, const FeatureRequirements& requirements) {
  for (const auto& [index, value] : requirements) {
    if (index >= phone.features.size()) return false;
    if (phone.features[index] != (value ? 1 : 0)) return false;
  }
  return true;
}

const Phone& realize_feature_change(const Phone& phone, const FeatureRequirements& changes,
                                    const Inventory& inventory) {
  if (inventory.empty()) throw std::invalid_argument("realize_feature_change on an empty inventory");
  if (changes.empty()) {
    if (const Phone* same = inventory.find(phone.symbol)) return *same;
  }
  std::vector<FeatureValue> target = phone.features;
  for (const auto& [index, value] : changes) {
    if (index < target.size()) target[index] = value ? 1 : 0;
  }
  const Phone* best = nullptr;
  std::size_t best_distance = std::numeric_limits<std::size_t>::max();
  for (const Phone& candidate : inventory.phones()) {
    std::size_t d = 0;
    for (std::size_t i = 0; i < target.size(); ++i) {
      if (target[i] == -1) continue;
      if (i >= candidate.features.size() || candidate.features[i] != target[i]) ++d;
    }
    if (d < best_distance) {
      best_distance = d;
      best = &candidate;
    }
  }
  return *best;
}

}  // namespace cascade_forge
