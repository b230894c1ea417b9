#include <gtest/gtest.h>

#include "cascade_forge/errors.hpp"
#include "cascade_forge/io.hpp"
#include "cascade_forge/rule_json.hpp"

namespace cascade_forge {
namespace {

const char* kFigureRule =
    R"({"predicates":[{"kind":"phone_set","phones":["a"]},{"kind":"is_nothing"},{"kind":"phone_set","phones":["j"]}],)"
    R"("change_pos":[0],"mappings":[{"kind":"substitute","map":{"a":["e"]}}],"name":"a>e_j"})";

TEST(RuleJsonTest, ParsesFigureRule) {
  const Rule r = parse_rule(kFigureRule);
  ASSERT_EQ(r.predicates.size(), 3u);
  EXPECT_TRUE(r.predicates[1].is<predicates::IsNothing>());
  EXPECT_EQ(r.change_pos, (std::vector<std::size_t>{0}));
  EXPECT_EQ(r.name, "a>e_j");
}

TEST(RuleJsonTest, RoundTripsEveryCorpusRule) {
  for (const auto& row : io::builtin_conformance_corpus()) {
    const std::string text = serialize_rule(row.rule);
    const Rule back = parse_rule(text);
    EXPECT_EQ(back, row.rule) << row.law;
    EXPECT_EQ(serialize_rule(back), text);
  }
}

TEST(RuleJsonTest, RoundTripsNegationAndFeatures) {
  Rule r{{Predicate::negate(Predicate::word_start()), Predicate::nothing(), Predicate::features({{0, true}, {3, false}})},
         {2},
         {mappings::Delete{}},
         "n"};
  EXPECT_EQ(parse_rule(serialize_rule(r)), r);
  EXPECT_EQ(rule_from_json(rule_to_json(r)), r);
}

TEST(RuleJsonTest, SerializationIsOrderIndependent) {
  const Rule a = parse_rule(
      R"({"predicates":[{"kind":"phone_set","phones":["k","p","t"]}],"change_pos":[0],"mappings":[{"kind":"delete"}]})");
  const Rule b = parse_rule(
      R"({"mappings":[{"kind":"delete"}],"change_pos":[0],"predicates":[{"phones":["t","k","p"],"kind":"phone_set"}]})");
  EXPECT_EQ(serialize_rule(a), serialize_rule(b));
}

TEST(RuleJsonTest, CanonicalKeyIgnoresName) {
  Rule a = parse_rule(kFigureRule), b = a;
  b.name = "something else";
  EXPECT_EQ(canonical_key(a), canonical_key(b));
  EXPECT_NE(serialize_rule(a), serialize_rule(b));
}

TEST(RuleJsonTest, SchemaErrorsCarryPointer) {
  try {
    parse_rule(R"({"predicates":[{"kind":"bogus"}],"change_pos":[0],"mappings":[{"kind":"delete"}]})");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("/predicates/0"), std::string::npos) << e.what();
  }
  EXPECT_THROW(parse_rule("{not json"), ParseError);
  EXPECT_THROW(parse_rule(R"({"predicates":[],"change_pos":"x","mappings":[]})"), ParseError);
}

TEST(RuleJsonTest, InvariantViolationsAreRuleErrors) {
  EXPECT_THROW(parse_rule(R"({"predicates":[{"kind":"phone_set","phones":["a"]}],"change_pos":[3],)"
                          R"("mappings":[{"kind":"delete"}]})"),
               RuleError);
  EXPECT_THROW(parse_rule(R"({"predicates":[{"kind":"phone_set","phones":["a"]}],"change_pos":[0],)"
                          R"("mappings":[{"kind":"insert","phones":["k"]}]})"),
               RuleError);
}

TEST(CascadeJsonTest, AcceptsObjectOrArray) {
  EXPECT_EQ(parse_cascade(kFigureRule).size(), 1u);
  const Cascade c = io::conformance_cascade();
  const std::string text = serialize_cascade(c);
  EXPECT_EQ(parse_cascade(text), c);
  EXPECT_EQ(parse_cascade("[]").size(), 0u);
}

}  // namespace
}  // namespace cascade_forge
