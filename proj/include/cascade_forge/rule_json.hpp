#pragma once

#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "cascade_forge/rule.hpp"

namespace cascade_forge {

// JSON wire/file form of rules:
//   {"predicates":[{"kind":"phone_set","phones":[...]} | {"kind":"is_nothing"} |
//                  {"kind":"word_start"} | {"kind":"word_end"} |
//                  {"kind":"feature_req","reqs":{"<idx>":0|1,...}} |
//                  {"kind":"not","inner":{...}}],
//    "change_pos":[...],
//    "mappings":[{"kind":"delete"} | {"kind":"substitute","map":{"a":["e"]}} |
//                {"kind":"insert","phones":[...]}],
//    "name":"..."}
// A cascade file is a JSON array of rules.

nlohmann::json rule_to_json(const Rule& rule, bool include_name = true);

/// Throws ParseError (schema, with a JSON pointer) or RuleError (invariants).
Rule rule_from_json(const nlohmann::json& j, const std::string& pointer = "");

/// Deterministic compact text: sorted keys, sorted phone sets.
std::string serialize_rule(const Rule& rule);
Rule parse_rule(std::string_view text);

/// Serialization without the name; equal rules have equal keys.
std::string canonical_key(const Rule& rule);

nlohmann::json cascade_to_json(const Cascade& cascade);
Cascade cascade_from_json(const nlohmann::json& j);
std::string serialize_cascade(const Cascade& cascade);

/// Accepts either a single rule object or an array of rules.
Cascade parse_cascade(std::string_view text);

}  // namespace cascade_forge
