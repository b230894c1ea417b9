#include "cascade_forge/rule_json.hpp"

#include <charconv>

#include "cascade_forge/errors.hpp"

namespace cascade_forge {
namespace {

using nlohmann::json;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

[[noreturn]] void fail(const std::string& pointer, const std::string& what) {
  throw ParseError((pointer.empty() ? std::string("/") : pointer) + ": " + what);
}

const json& member(const json& j, const char* key, const std::string& pointer) {
  if (!j.is_object()) fail(pointer, "expected an object");
  const auto it = j.find(key);
  if (it == j.end()) fail(pointer, std::string("missing \"") + key + "\"");
  return *it;
}

std::string as_string(const json& j, const std::string& pointer) {
  if (!j.is_string()) fail(pointer, "expected a string");
  return j.get<std::string>();
}

std::vector<std::string> as_string_list(const json& j, const std::string& pointer) {
  if (!j.is_array()) fail(pointer, "expected an array of strings");
  std::vector<std::string> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(as_string(j[i], pointer + "/" + std::to_string(i)));
  return out;
}

std::string kind_of(const json& j, const std::string& pointer) {
  return as_string(member(j, "kind", pointer), pointer + "/kind");
}

json predicate_to_json(const Predicate& pred) {
  return std::visit(overloaded{
                        [](const predicates::PhoneSet& p) {
                          return json{{"kind", "phone_set"}, {"phones", json(p.phones)}};
                        },
                        [](const predicates::IsNothing&) { return json{{"kind", "is_nothing"}}; },
                        [](const predicates::WordStart&) { return json{{"kind", "word_start"}}; },
                        [](const predicates::WordEnd&) { return json{{"kind", "word_end"}}; },
                        [](const predicates::FeatureReq& f) {
                          json reqs = json::object();
                          for (const auto& [idx, v] : f.reqs) reqs[std::to_string(idx)] = v ? 1 : 0;
                          return json{{"kind", "feature_req"}, {"reqs", reqs}};
                        },
                        [](const predicates::Not& n) {
                          return json{{"kind", "not"}, {"inner", predicate_to_json(*n.inner)}};
                        },
                    },
                    pred.value);
}

Predicate predicate_from_json(const json& j, const std::string& pointer) {
  const std::string kind = kind_of(j, pointer);
  if (kind == "phone_set") {
    const std::string p = pointer + "/phones";
    const auto list = as_string_list(member(j, "phones", pointer), p);
    if (list.empty()) fail(p, "phone set must be non-empty");
    return Predicate::phones({list.begin(), list.end()});
  }
  if (kind == "is_nothing") return Predicate::nothing();
  if (kind == "word_start") return Predicate::word_start();
  if (kind == "word_end") return Predicate::word_end();
  if (kind == "feature_req") {
    const std::string p = pointer + "/reqs";
    const json& reqs = member(j, "reqs", pointer);
    if (!reqs.is_object()) fail(p, "expected an object of feature index -> 0|1");
    FeatureRequirements out;
    for (const auto& [key, value] : reqs.items()) {
      std::size_t idx = 0;
      const auto [ptr, ec] = std::from_chars(key.data(), key.data() + key.size(), idx);
      if (ec != std::errc() || ptr != key.data() + key.size()) fail(p, "feature index \"" + key + "\" is not an integer");
      if (value.is_boolean()) {
        out[idx] = value.get<bool>();
      } else if (value.is_number_integer() && (value.get<long long>() == 0 || value.get<long long>() == 1)) {
        out[idx] = value.get<long long>() == 1;
      } else {
        fail(p + "/" + key, "required value must be 0 or 1");
      }
    }
    return Predicate::features(std::move(out));
  }
  if (kind == "not") return Predicate::negate(predicate_from_json(member(j, "inner", pointer), pointer + "/inner"));
  fail(pointer + "/kind", "unknown predicate kind \"" + kind + "\"");
}

json mapping_to_json(const MappingFn& fn) {
  return std::visit(overloaded{
                        [](const mappings::Delete&) { return json{{"kind", "delete"}}; },
                        [](const mappings::Substitute& s) {
                          json map = json::object();
                          for (const auto& [from, to] : s.map) map[from] = to;
                          return json{{"kind", "substitute"}, {"map", map}};
                        },
                        [](const mappings::Insert& ins) { return json{{"kind", "insert"}, {"phones", ins.phones}}; },
                    },
                    fn);
}

MappingFn mapping_from_json(const json& j, const std::string& pointer) {
  const std::string kind = kind_of(j, pointer);
  if (kind == "delete") return mappings::Delete{};
  if (kind == "substitute") {
    const std::string p = pointer + "/map";
    const json& map = member(j, "map", pointer);
    if (!map.is_object()) fail(p, "expected an object of phone -> [phones]");
    mappings::Substitute out;
    for (const auto& [from, to] : map.items()) out.map[from] = as_string_list(to, p + "/" + from);
    return out;
  }
  if (kind == "insert") {
    return mappings::Insert{as_string_list(member(j, "phones", pointer), pointer + "/phones")};
  }
  fail(pointer + "/kind", "unknown mapping kind \"" + kind + "\"");
}

}  // namespace

nlohmann::json rule_to_json(const Rule& rule, bool include_name) {
  json preds = json::array();
  for (const auto& p : rule.predicates) preds.push_back(predicate_to_json(p));
  json maps = json::array();
  for (const auto& m : rule.mappings) maps.push_back(mapping_to_json(m));
  json j{{"predicates", preds}, {"change_pos", rule.change_pos}, {"mappings", maps}};
  if (include_name && !rule.name.empty()) j["name"] = rule.name;
  return j;
}

Rule rule_from_json(const nlohmann::json& j, const std::string& pointer) {
  if (!j.is_object()) fail(pointer, "expected a rule object");
  Rule rule;
  const json& preds = member(j, "predicates", pointer);
  if (!preds.is_array()) fail(pointer + "/predicates", "expected an array");
  for (std::size_t i = 0; i < preds.size(); ++i) {
    rule.predicates.push_back(predicate_from_json(preds[i], pointer + "/predicates/" + std::to_string(i)));
  }
  const json& cps = member(j, "change_pos", pointer);
  if (!cps.is_array()) fail(pointer + "/change_pos", "expected an array");
  for (std::size_t i = 0; i < cps.size(); ++i) {
    if (!cps[i].is_number_unsigned()) fail(pointer + "/change_pos/" + std::to_string(i), "expected a non-negative integer");
    rule.change_pos.push_back(cps[i].get<std::size_t>());
  }
  const json& maps = member(j, "mappings", pointer);
  if (!maps.is_array()) fail(pointer + "/mappings", "expected an array");
  for (std::size_t i = 0; i < maps.size(); ++i) {
    rule.mappings.push_back(mapping_from_json(maps[i], pointer + "/mappings/" + std::to_string(i)));
  }
  if (const auto it = j.find("name"); it != j.end()) rule.name = as_string(*it, pointer + "/name");
  rule.validate();
  return rule;
}

std::string serialize_rule(const Rule& rule) { return rule_to_json(rule).dump(); }

Rule parse_rule(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("invalid JSON: ") + e.what());
  }
  return rule_from_json(j);
}

std::string canonical_key(const Rule& rule) { return rule_to_json(rule, false).dump(); }

nlohmann::json cascade_to_json(const Cascade& cascade) {
  json out = json::array();
  for (const auto& r : cascade) out.push_back(rule_to_json(r));
  return out;
}

Cascade cascade_from_json(const nlohmann::json& j) {
  if (j.is_object()) return {rule_from_json(j)};
  if (!j.is_array()) fail("", "expected a rule object or an array of rules");
  Cascade out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(rule_from_json(j[i], "/" + std::to_string(i)));
  return out;
}

std::string serialize_cascade(const Cascade& cascade) { return cascade_to_json(cascade).dump(); }

Cascade parse_cascade(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("invalid JSON: ") + e.what());
  }
  return cascade_from_json(j);
}

}  // namespace cascade_forge
