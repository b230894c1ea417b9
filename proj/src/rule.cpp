#include "cascade_forge/rule.hpp"

#include <algorithm>

#include "cascade_forge/errors.hpp"

namespace cascade_forge {
namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

bool is_phone(std::string_view token) { return token != kBoundaryToken && token != kSeparatorToken; }

void check_phone(const std::string& symbol, const Inventory& inventory, const std::string& where) {
  if (!inventory.contains(symbol)) throw RuleError(where + ": phone \"" + symbol + "\" is not in the inventory");
}

void validate_predicate(const Predicate& pred, const Inventory* inventory, const std::string& where) {
  std::visit(overloaded{
                 [&](const predicates::PhoneSet& p) {
                   if (p.phones.empty()) throw RuleError(where + ": empty phone set");
                   for (const auto& s : p.phones) {
                     if (s.empty() || !is_phone(s)) throw RuleError(where + ": \"" + s + "\" is not a phone");
                     if (inventory) check_phone(s, *inventory, where);
                   }
                 },
                 [&](const predicates::FeatureReq& p) {
                   if (!inventory) return;
                   for (const auto& [idx, v] : p.reqs) {
                     (void)v;
                     if (idx >= inventory->feature_count()) {
                       throw RuleError(where + ": feature index " + std::to_string(idx) + " out of range");
                     }
                   }
                 },
                 [&](const predicates::Not& p) {
                   if (!p.inner) throw RuleError(where + ": negation without operand");
                   validate_predicate(*p.inner, inventory, where);
                 },
                 [](const auto&) {},
             },
             pred.value);
}

void validate_phones(const std::vector<std::string>& phones, const Inventory* inventory, const std::string& where) {
  for (const auto& s : phones) {
    if (s.empty() || !is_phone(s)) throw RuleError(where + ": \"" + s + "\" is not a phone");
    if (inventory) check_phone(s, *inventory, where);
  }
}

void validate_rule(const Rule& rule, const Inventory* inventory) {
  if (rule.predicates.empty()) throw RuleError("rule has no predicates");
  if (rule.change_pos.empty()) throw RuleError("rule has no change positions");
  if (rule.change_pos.size() != rule.mappings.size()) {
    throw RuleError("change_pos and mappings differ in length (" + std::to_string(rule.change_pos.size()) +
                    " vs " + std::to_string(rule.mappings.size()) + ")");
  }
  for (std::size_t i = 0; i < rule.predicates.size(); ++i) {
    validate_predicate(rule.predicates[i], inventory, "predicate " + std::to_string(i));
  }
  std::set<std::size_t> seen;
  for (std::size_t i = 0; i < rule.change_pos.size(); ++i) {
    const std::size_t pos = rule.change_pos[i];
    const std::string where = "mapping " + std::to_string(i);
    if (pos >= rule.predicates.size()) {
      throw RuleError(where + ": change position " + std::to_string(pos) + " out of range");
    }
    if (!seen.insert(pos).second) throw RuleError(where + ": duplicate change position " + std::to_string(pos));
    const Predicate& pred = rule.predicates[pos];
    std::visit(overloaded{
                   [&](const mappings::Delete&) {
                     if (!pred.can_match_phone()) throw RuleError(where + ": delete on a slot that never holds a phone");
                   },
                   [&](const mappings::Substitute& m) {
                     if (!pred.can_match_phone()) {
                       throw RuleError(where + ": substitute on a slot that never holds a phone");
                     }
                     if (m.map.empty()) throw RuleError(where + ": empty substitution map");
                     for (const auto& [from, to] : m.map) {
                       validate_phones({from}, inventory, where);
                       if (to.empty()) throw RuleError(where + ": substitution of \"" + from + "\" has no target");
                       validate_phones(to, inventory, where);
                     }
                   },
                   [&](const mappings::Insert& m) {
                     if (!pred.is<predicates::IsNothing>()) {
                       throw RuleError(where + ": insert requires an is_nothing slot");
                     }
                     if (m.phones.empty()) throw RuleError(where + ": empty insertion");
                     validate_phones(m.phones, inventory, where);
                   },
               },
               rule.mappings[i]);
  }
}

}  // namespace

bool predicates::Not::operator==(const Not& other) const {
  if (!inner || !other.inner) return inner == other.inner;
  return *inner == *other.inner;
}

bool Predicate::can_match_phone() const {
  return std::visit(overloaded{
                        [](const predicates::PhoneSet&) { return true; },
                        [](const predicates::FeatureReq&) { return true; },
                        [](const predicates::Not& n) {
                          if (!n.inner) return false;
                          // Not(x) holds on some phone unless x holds on every phone.
                          return std::visit(overloaded{
                                                [](const predicates::FeatureReq& f) { return !f.reqs.empty(); },
                                                [](const predicates::Not& nn) {
                                                  return nn.inner && nn.inner->can_match_phone();
                                                },
                                                [](const auto&) { return true; },
                                            },
                                            n.inner->value);
                        },
                        [](const auto&) { return false; },
                    },
                    value);
}

void Rule::validate() const { validate_rule(*this, nullptr); }
void Rule::validate(const Inventory& inventory) const { validate_rule(*this, &inventory); }

bool match_predicate(const Predicate& pred, std::string_view token, TokenPosition position,
                     const Inventory& inventory) {
  return std::visit(overloaded{
                        [&](const predicates::PhoneSet& p) {
                          return is_phone(token) && p.phones.find(token) != p.phones.end();
                        },
                        [&](const predicates::IsNothing&) { return token == kSeparatorToken; },
                        [&](const predicates::WordStart&) { return token == kBoundaryToken && position.is_first; },
                        [&](const predicates::WordEnd&) { return token == kBoundaryToken && position.is_last; },
                        [&](const predicates::FeatureReq& f) {
                          if (!is_phone(token)) return false;
                          const Phone* phone = inventory.find(token);
                          return phone != nullptr && feature_match(*phone, f.reqs);
                        },
                        [&](const predicates::Not& n) {
                          return !match_predicate(*n.inner, token, position, inventory);
                        },
                    },
                    pred.value);
}

std::vector<std::size_t> find_sites(const Rule& rule, const TokenizedWord& word, const Inventory& inventory) {
  std::vector<std::size_t> sites;
  const std::size_t n = word.token_count();
  const std::size_t e = rule.predicates.size();
  if (e == 0 || e > n) return sites;
  for (std::size_t start = 0; start + e <= n; ++start) {
    bool ok = true;
    for (std::size_t k = 0; k < e && ok; ++k) {
      const std::size_t t = start + k;
      ok = match_predicate(rule.predicates[k], word.token(t), {t == 0, t + 1 == n}, inventory);
    }
    if (ok) sites.push_back(start);
  }
  return sites;
}

TokenizedWord apply_rule(const Rule& rule, const TokenizedWord& word, const Inventory& inventory,
                         Diagnostics* diagnostics) {
  const std::vector<std::size_t> sites = find_sites(rule, word, inventory);
  if (sites.empty()) return word;

  const std::size_t n = word.token_count();
  // Per token: replacement phones for a phone token, inserted phones for a
  // separator token. Unclaimed tokens keep their original content.
  std::vector<std::vector<std::string>> edit(n);
  std::vector<bool> claimed(n, false);
  auto note = [&](std::string message) {
    if (diagnostics) diagnostics->push_back(std::move(message));
  };

  for (const std::size_t site : sites) {
    for (std::size_t m = 0; m < rule.change_pos.size(); ++m) {
      const std::size_t t = site + rule.change_pos[m];
      const std::string_view token = word.token(t);
      if (claimed[t]) {
        note("site " + std::to_string(site) + ": token " + std::to_string(t) +
             " already rewritten by an earlier site; mapping skipped");
        continue;
      }
      std::visit(overloaded{
                     [&](const mappings::Delete&) {
                       if (!word.is_phone_token(t)) {
                         note("site " + std::to_string(site) + ": delete on non-phone token; no-op");
                         return;
                       }
                       claimed[t] = true;
                     },
                     [&](const mappings::Substitute& s) {
                       if (!word.is_phone_token(t)) {
                         note("site " + std::to_string(site) + ": substitute on non-phone token; no-op");
                         return;
                       }
                       const auto it = s.map.find(token);
                       if (it == s.map.end()) {
                         note("site " + std::to_string(site) + ": no substitution for \"" + std::string(token) +
                              "\"; no-op");
                         return;
                       }
                       claimed[t] = true;
                       edit[t] = it->second;
                     },
                     [&](const mappings::Insert& ins) {
                       if (token != kSeparatorToken) {
                         note("site " + std::to_string(site) + ": insert on non-separator token; no-op");
                         return;
                       }
                       claimed[t] = true;
                       edit[t] = ins.phones;
                     },
                 },
                 rule.mappings[m]);
    }
  }

  std::vector<std::string> phones;
  phones.reserve(word.phone_count() + 4);
  for (std::size_t t = 1; t + 1 < n; ++t) {
    if (word.is_phone_token(t)) {
      if (claimed[t]) {
        phones.insert(phones.end(), edit[t].begin(), edit[t].end());
      } else {
        phones.emplace_back(word.token(t));
      }
    } else if (claimed[t]) {
      phones.insert(phones.end(), edit[t].begin(), edit[t].end());
    }
  }
  return TokenizedWord(std::move(phones));
}

CascadeResult apply_cascade(const Cascade& cascade, const TokenizedWord& word, const Inventory& inventory,
                            Diagnostics* diagnostics) {
  CascadeResult result{word, {}};
  result.trace.reserve(cascade.size());
  for (const Rule& rule : cascade) {
    result.output = apply_rule(rule, result.output, inventory, diagnostics);
    result.trace.push_back(result.output);
  }
  return result;
}

TokenizedWord run_cascade(const Cascade& cascade, const TokenizedWord& word, const Inventory& inventory) {
  TokenizedWord current = word;
  for (const Rule& rule : cascade) current = apply_rule(rule, current, inventory);
  return current;
}

}  // namespace cascade_forge
