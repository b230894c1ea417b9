#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "cascade_forge/metrics.hpp"
#include "oracles.hpp"

namespace cascade_forge {
namespace {

const Inventory& inv() { return Inventory::default_inventory(); }
TokenizedWord W(std::string_view s) { return tokenize(s, inv()); }
std::vector<TokenizedWord> Ws(std::initializer_list<std::string_view> xs) {
  std::vector<TokenizedWord> out;
  for (auto x : xs) out.push_back(W(x));
  return out;
}

const oracle::Phones kAlphabet{"a", "b", "c", "ts"};

TEST(EditDistanceTest, Examples) {
  EXPECT_EQ(edit_distance(W("kat"), W("kat")), 0u);
  EXPECT_EQ(edit_distance(W("kat"), W("kot")), 1u);
  EXPECT_EQ(edit_distance(W(""), W("ab")), 2u);
}

TEST(EditDistanceTest, CountsPhonesNotCodepoints) { EXPECT_EQ(edit_distance(W("ts̄a"), W("ða")), 1u); }

TEST(EditDistanceTest, MatchesRecursiveOracle) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 500; ++i) {
    const auto a = oracle::random_word(rng, kAlphabet, 0, 6), b = oracle::random_word(rng, kAlphabet, 0, 6);
    EXPECT_EQ(edit_distance(a, b), oracle::levenshtein(a, b));
  }
}

TEST(EditDistanceTest, IsAMetric) {
  std::mt19937_64 rng(2);
  for (int i = 0; i < 300; ++i) {
    const auto a = oracle::random_word(rng, kAlphabet, 0, 6), b = oracle::random_word(rng, kAlphabet, 0, 6),
               c = oracle::random_word(rng, kAlphabet, 0, 6);
    EXPECT_EQ(edit_distance(a, b), edit_distance(b, a));
    EXPECT_EQ(edit_distance(a, b) == 0, a == b);
    EXPECT_LE(edit_distance(a, c), edit_distance(a, b) + edit_distance(b, c));
  }
}

TEST(DistTest, Examples) {
  EXPECT_EQ(dist(Ws({"kat", "ip"}), Ws({"kat", "ip"})), 0);
  EXPECT_EQ(dist(Ws({"kat", "ip"}), Ws({"kot", "i"})), 2);
  EXPECT_EQ(dist(Ws({"kat"}), Ws({"kot"})), 1);
  EXPECT_THROW(dist(Ws({"kat"}), Ws({"kat", "a"})), std::invalid_argument);
}

TEST(RewardTest, Examples) {
  const auto src = Ws({"kat"}), tgt = Ws({"kot"});
  EXPECT_EQ(reward(src, tgt, tgt), 1.0);
  EXPECT_EQ(reward(src, src, tgt), 0.0);
  EXPECT_EQ(reward(src, Ws({"kit"}), tgt), 0.0);
  EXPECT_EQ(reward(Ws({"kat", "ip"}), Ws({"kot", "ip"}), Ws({"kot", "i"})), 0.5);
}

TEST(RewardTest, ZeroDenominatorPolicy) {
  const auto same = Ws({"ka"});
  EXPECT_EQ(reward(same, same, same), 1.0);
  EXPECT_EQ(reward(same, Ws({"kaa"}), same), 0.0);
  EXPECT_EQ(reward(same, Ws({"kiii"}), same), -2.0);
}

TEST(RewardTest, PropertiesOnRandomDatasets) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<std::size_t> size(1, 6);
  for (int i = 0; i < 300; ++i) {
    std::vector<oracle::Phones> s, p, t;
    for (std::size_t n = size(rng); n > 0; --n) {
      s.push_back(oracle::random_word(rng, kAlphabet, 0, 5));
      t.push_back(oracle::random_word(rng, kAlphabet, 0, 5));
      p.push_back(rng() % 2 ? t.back() : oracle::random_word(rng, kAlphabet, 0, 5));
    }
    std::vector<TokenizedWord> S, P, T;
    for (std::size_t k = 0; k < s.size(); ++k) {
      S.emplace_back(s[k]);
      P.emplace_back(p[k]);
      T.emplace_back(t[k]);
    }
    const double r = reward(S, P, T);
    EXPECT_DOUBLE_EQ(r, oracle::reward(s, p, t));
    EXPECT_LE(r, 1.0);
    EXPECT_EQ(r == 1.0, P == T);

    std::vector<std::size_t> perm(S.size());
    for (std::size_t k = 0; k < perm.size(); ++k) perm[k] = k;
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<TokenizedWord> S2, P2, T2;
    for (std::size_t k : perm) {
      S2.push_back(S[k]);
      P2.push_back(P[k]);
      T2.push_back(T[k]);
    }
    EXPECT_EQ(reward(S2, P2, T2), r);
  }
}

TEST(RewardAtMTest, Examples) {
  EXPECT_DOUBLE_EQ(reward_at_m({{1.0, 0.5, 0.0}}, 2), 0.75);
  EXPECT_DOUBLE_EQ(reward_at_m({{0.2, 1.0}, {0.5}}, 1), 0.75);
  EXPECT_DOUBLE_EQ(reward_at_m({{1.0, 1.0, 1.0}}, 10), 1.0);
  EXPECT_DOUBLE_EQ(reward_at_m({{0.0, 1.0}}, 5), 0.5);
}

TEST(RewardAtMTest, NonIncreasingInM) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 100; ++i) {
    std::vector<double> rs(1 + rng() % 12);
    for (auto& r : rs) r = u(rng);
    double prev = 2.0;
    for (std::size_t m = 1; m <= 12; ++m) {
      const double v = reward_at_m({rs}, m);
      EXPECT_LE(v, prev + 1e-12);
      prev = v;
    }
  }
}

TEST(PassRateTest, Examples) {
  const std::vector<double> a{1, 1, 0.5}, b{1, 1}, c{0.9999};
  EXPECT_DOUBLE_EQ(pass_rate(a), 2.0 / 3.0);
  EXPECT_EQ(pass_rate(b), 1.0);
  EXPECT_EQ(pass_rate(c), 0.0);
}

TEST(EvaluateTest, ReportFields) {
  Dataset ds;
  ds.pairs = {{W("kat"), W("kot"), "1"}, {W("ip"), W("i"), "2"}};
  const RewardReport identity = evaluate({}, ds, inv());
  EXPECT_EQ(identity.dist_source_target, 2);
  EXPECT_EQ(identity.dist_pred_target, 2);
  EXPECT_EQ(identity.reward, 0.0);
  EXPECT_FALSE(identity.pass);
  EXPECT_EQ(identity.distances, (std::vector<std::size_t>{1, 1}));
}

TEST(DatasetTest, Validation) {
  Dataset ds;
  EXPECT_THROW(ds.validate(), std::invalid_argument);
  ds.pairs = {{W("a"), W("a"), "x"}, {W("b"), W("b"), "x"}};
  EXPECT_THROW(ds.validate(), std::invalid_argument);
}

TEST(EditScriptTest, ReplaysToTargetWithMinimalLength) {
  std::mt19937_64 rng(6);
  for (int i = 0; i < 500; ++i) {
    const auto a = oracle::random_word(rng, kAlphabet, 0, 6), b = oracle::random_word(rng, kAlphabet, 0, 6);
    const auto ops = edit_script(a, b);
    EXPECT_EQ(ops.size(), oracle::levenshtein(a, b));
    EXPECT_EQ(oracle::replay_script(a, ops), b);
  }
}

TEST(EditScriptTest, PrefersSubstitution) {
  const std::vector<std::string> a{"a", "j"}, b{"e", "j"};
  const auto ops = edit_script(a, b);
  ASSERT_EQ(ops.size(), 1u);
  EXPECT_EQ(ops[0], (EditOp{EditKind::Substitute, 0, "e"}));
  const std::vector<std::string> c{"i"}, d{"i", "k"};
  EXPECT_EQ(edit_script(c, d), (std::vector<EditOp>{{EditKind::Insert, 1, "k"}}));
}

}  // namespace
}  // namespace cascade_forge
