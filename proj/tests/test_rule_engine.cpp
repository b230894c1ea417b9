#include <gtest/gtest.h>

#include <random>

#include "cascade_forge/errors.hpp"
#include "cascade_forge/io.hpp"
#include "cascade_forge/rule.hpp"
#include "oracles.hpp"

namespace cascade_forge {
namespace {

using predicates::PhoneSet;

const Inventory& inv() { return Inventory::default_inventory(); }

TokenizedWord W(std::string_view s) { return tokenize(s, inv()); }

// x → y / _ctx
Rule sub_before(const std::string& x, const std::string& y, const std::string& ctx) {
  return {{Predicate::phones({x}), Predicate::nothing(), Predicate::phones({ctx})},
          {0},
          {mappings::Substitute{{{x, {y}}}}},
          ""};
}

Rule sub_word_final(std::set<std::string, std::less<>> xs, const std::string& y) {
  mappings::Substitute s;
  for (const auto& x : xs) s.map[x] = {y};
  return {{Predicate::phones(xs), Predicate::nothing(), Predicate::word_end()}, {0}, {s}, ""};
}

// ∅ → ins / ctx _
Rule insert_after(const std::string& ctx, std::vector<std::string> ins) {
  return {{Predicate::phones({ctx}), Predicate::nothing()}, {1}, {mappings::Insert{std::move(ins)}}, ""};
}

TEST(MatchPredicateTest, Basics) {
  EXPECT_TRUE(match_predicate(Predicate::phones({"a"}), "a", {}, inv()));
  EXPECT_TRUE(match_predicate(Predicate::nothing(), "@", {}, inv()));
  EXPECT_FALSE(match_predicate(Predicate::nothing(), "a", {}, inv()));
  EXPECT_TRUE(match_predicate(Predicate::word_start(), "#", {true, false}, inv()));
  EXPECT_FALSE(match_predicate(Predicate::word_start(), "#", {false, true}, inv()));
  EXPECT_FALSE(match_predicate(Predicate::negate(Predicate::word_start()), "#", {true, false}, inv()));
  EXPECT_TRUE(match_predicate(Predicate::negate(Predicate::word_start()), "a", {}, inv()));
  EXPECT_FALSE(match_predicate(Predicate::features({}), "@", {}, inv()));
  EXPECT_TRUE(match_predicate(Predicate::features({}), "k", {}, inv()));
}

TEST(FindSitesTest, EnvironmentAjInKaj) {
  const Rule r = sub_before("a", "e", "j");
  const auto sites = find_sites(r, W("kaj"), inv());
  ASSERT_EQ(sites.size(), 1u);
  EXPECT_EQ(W("kaj").token(sites[0]), "a");
  EXPECT_TRUE(find_sites(r, W("ku"), inv()).empty());
}

TEST(FindSitesTest, SingletonEnvironmentMatchesEveryOccurrence) {
  const Rule r{{Predicate::phones({"a"})}, {0}, {mappings::Delete{}}, ""};
  const TokenizedWord w = W("aaa");
  const auto sites = find_sites(r, w, inv());
  EXPECT_EQ(sites, oracle::sites(r, w.tokens(), inv()));
  EXPECT_EQ(sites.size(), 3u);
}

TEST(FindSitesTest, WindowLongerThanWordNeverMatches) {
  const Rule r{{Predicate::phones({"a"}), Predicate::nothing(), Predicate::phones({"a"}), Predicate::nothing(),
                Predicate::phones({"a"})},
               {0},
               {mappings::Delete{}},
               ""};
  EXPECT_TRUE(find_sites(r, W("a"), inv()).empty());
  EXPECT_TRUE(find_sites(r, TokenizedWord{}, inv()).empty());
}

TEST(ApplyRuleTest, SubstitutionBeforeJ) { EXPECT_EQ(detokenize(apply_rule(sub_before("a", "e", "j"), W("aj"), inv())), "ej"); }

TEST(ApplyRuleTest, WordFinalInsertion) {
  const Rule r{{Predicate::phones({"i"}), Predicate::nothing(), Predicate::word_end()},
               {1},
               {mappings::Insert{{"k"}}},
               ""};
  EXPECT_EQ(detokenize(apply_rule(r, W("ti"), inv())), "tik");
  EXPECT_EQ(detokenize(apply_rule(r, W("it"), inv())), "it");
}

TEST(ApplyRuleTest, SelfFeedingInsertionFiresOncePerSite) {
  const Rule r = insert_after("a", {"a"});
  EXPECT_EQ(detokenize(apply_rule(r, W("ba"), inv())), "baa");
  EXPECT_EQ(detokenize(apply_rule(r, W("aa"), inv())), "aaaa");
}

TEST(ApplyRuleTest, SelfFeedingSubstitutionUsesOriginalWord) {
  // a → b / b_ on "baa": only the first a has a b to its left.
  const Rule r{{Predicate::phones({"b"}), Predicate::nothing(), Predicate::phones({"a"})},
               {2},
               {mappings::Substitute{{{"a", {"b"}}}}},
               ""};
  EXPECT_EQ(detokenize(apply_rule(r, W("baa"), inv())), "bba");
}

TEST(ApplyRuleTest, PartialSubstitutionIsNoOpWithDiagnostic) {
  const Rule r{{Predicate::phones({"a", "o"})}, {0}, {mappings::Substitute{{{"a", {"e"}}}}}, ""};
  Diagnostics diags;
  EXPECT_EQ(detokenize(apply_rule(r, W("oa"), inv(), &diags)), "oe");
  EXPECT_EQ(diags.size(), 1u);
}

TEST(ApplyRuleTest, LeftmostSiteWinsConflicts) {
  // Both sites of "a a" on "aaa" want to rewrite the middle phone.
  const Rule r{{Predicate::phones({"a"}), Predicate::nothing(), Predicate::phones({"a"})},
               {0, 2},
               {mappings::Substitute{{{"a", {"b"}}}}, mappings::Substitute{{{"a", {"c"}}}}},
               ""};
  Diagnostics diags;
  const TokenizedWord out = apply_rule(r, W("aaa"), inv(), &diags);
  EXPECT_EQ(out.phones(), oracle::two_stage_apply(r, {"a", "a", "a"}, inv()));
  EXPECT_EQ(detokenize(out), "bcc");
  EXPECT_FALSE(diags.empty());
}

TEST(ApplyRuleTest, MultiTokenReplacementAndDeletion) {
  const Rule r{{Predicate::word_start(), Predicate::nothing(), Predicate::phones({"h"}), Predicate::nothing(),
                Predicate::phones({"w"})},
               {2, 4},
               {mappings::Substitute{{{"h", {"f"}}}}, mappings::Delete{}},
               ""};
  EXPECT_EQ(detokenize(apply_rule(r, W("hwa"), inv())), "fa");
  EXPECT_EQ(detokenize(apply_rule(r, W("ahwa"), inv())), "ahwa");
}

TEST(ApplyRuleTest, OutputIsCanonicalAndBounded) {
  std::mt19937_64 rng(21);
  const oracle::Phones alphabet{"a", "b", "i"};
  const Rule r = insert_after("a", {"a", "b"});
  for (int i = 0; i < 300; ++i) {
    const auto phones = oracle::random_word(rng, alphabet, 0, 8);
    const TokenizedWord w(phones);
    const TokenizedWord out = apply_rule(r, w, inv());
    const auto tokens = out.tokens();
    EXPECT_EQ(TokenizedWord::from_tokens(tokens), out);
    EXPECT_LE(out.phone_count(), w.phone_count() + 2 * find_sites(r, w, inv()).size());
  }
}

TEST(ApplyRuleTest, MatchesTwoStageOracleOnRandomRules) {
  std::mt19937_64 rng(8);
  const oracle::Phones alphabet{"a", "b", "i", "k"};
  std::uniform_int_distribution<int> kind(0, 5);
  std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 1);
  for (int n = 0; n < 500; ++n) {
    const std::string x = alphabet[pick(rng)], y = alphabet[pick(rng)];
    Rule r;
    switch (kind(rng)) {
      case 0: r = sub_before(x, y, alphabet[pick(rng)]); break;
      case 1: r = insert_after(x, {y}); break;
      case 2: r = {{Predicate::phones({x}), Predicate::nothing(), Predicate::phones({y})}, {2}, {mappings::Delete{}}, ""}; break;
      case 3: r = {{Predicate::nothing(), Predicate::phones({x})}, {0}, {mappings::Insert{{x, y}}}, ""}; break;
      case 4: r = {{Predicate::negate(Predicate::word_start()), Predicate::nothing(), Predicate::phones({x})},
                   {2},
                   {mappings::Substitute{{{x, {y, y}}}}},
                   ""};
        break;
      default: r = sub_word_final({x, y}, alphabet[pick(rng)]); break;
    }
    r.validate(inv());
    const auto phones = oracle::random_word(rng, alphabet, 0, 8);
    EXPECT_EQ(apply_rule(r, TokenizedWord(phones), inv()).phones(), oracle::two_stage_apply(r, phones, inv()));
  }
}

TEST(CascadeTest, EmptyCascadeIsIdentity) {
  EXPECT_EQ(run_cascade({}, W("kat"), inv()), W("kat"));
  EXPECT_TRUE(apply_cascade({}, W("kat"), inv()).trace.empty());
}

TEST(CascadeTest, OrderMatters) {
  const Rule a_o = sub_before("a", "o", "k");
  const Rule k_glottal = sub_word_final({"k", "p", "t"}, "ʔ");
  EXPECT_EQ(detokenize(run_cascade({a_o, k_glottal}, W("ak"), inv())), "oʔ");
  EXPECT_EQ(detokenize(run_cascade({k_glottal, a_o}, W("ak"), inv())), "aʔ");
}

TEST(CascadeTest, FoldEquivalenceAndTrace) {
  const Rule r1 = sub_before("a", "o", "k");
  const Rule r2 = insert_after("o", {"i"});
  const TokenizedWord w = W("kak");
  const auto result = apply_cascade({r1, r2}, w, inv());
  EXPECT_EQ(result.output, apply_rule(r2, apply_rule(r1, w, inv()), inv()));
  ASSERT_EQ(result.trace.size(), 2u);
  EXPECT_EQ(result.trace[0], apply_rule(r1, w, inv()));
  EXPECT_EQ(result.output, run_cascade({r1, r2}, w, inv()));
}

TEST(RuleValidateTest, RejectsBrokenStructure) {
  Rule r = sub_before("a", "e", "j");
  r.change_pos = {5};
  EXPECT_THROW(r.validate(), RuleError);

  Rule ins{{Predicate::phones({"a"})}, {0}, {mappings::Insert{{"k"}}}, ""};
  EXPECT_THROW(ins.validate(), RuleError);

  Rule arity{{Predicate::phones({"a"})}, {0}, {}, ""};
  EXPECT_THROW(arity.validate(), RuleError);

  Rule unknown{{Predicate::phones({"Q"})}, {0}, {mappings::Delete{}}, ""};
  EXPECT_NO_THROW(unknown.validate());
  EXPECT_THROW(unknown.validate(inv()), RuleError);
}

TEST(RuleEqualityTest, NameIsIgnored) {
  Rule a = sub_before("a", "e", "j"), b = a;
  b.name = "other";
  EXPECT_EQ(a, b);
  b.change_pos = {2};
  EXPECT_NE(a, b);
}

TEST(ConformanceTest, EveryCorpusRowReproducesItsMapping) {
  const auto& rows = io::builtin_conformance_corpus();
  EXPECT_EQ(rows.size(), 26u);
  for (const auto& row : rows) {
    for (const auto& [in, out] : row.examples) {
      EXPECT_EQ(detokenize(apply_rule(row.rule, W(in), inv())), out) << row.language << " " << row.law;
    }
  }
}

}  // namespace
}  // namespace cascade_forge
