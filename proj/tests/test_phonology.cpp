#include <gtest/gtest.h>

#include <random>

#include "cascade_forge/errors.hpp"
#include "cascade_forge/phonology.hpp"
#include "oracles.hpp"

namespace cascade_forge {
namespace {

const char* kSmall =
    "!feature\tf0,f1,f2\n"
    "a\t1,0,0\n"
    "j\t0,1,0\n"
    "k\t0,0,1\n";

Inventory tsa_inventory() {
  return Inventory::parse(
      "!feature\tx\n"
      "t\t0\n"
      "s\t0\n"
      "ts\t1\n"
      "a\t1\n");
}

TEST(InventoryTest, ParsesSmallFile) {
  const Inventory inv = Inventory::parse(kSmall);
  EXPECT_EQ(inv.size(), 3u);
  EXPECT_EQ(inv.feature_count(), 3u);
  EXPECT_EQ(inv.phones()[1].symbol, "j");
  EXPECT_EQ(inv.phones()[1].features, (std::vector<FeatureValue>{0, 1, 0}));
}

TEST(InventoryTest, LongestSymbolsSegmentFirst) {
  const Inventory inv = tsa_inventory();
  EXPECT_EQ(inv.phones()[inv.segmentation_order().front()].symbol, "ts");
}

TEST(InventoryTest, RejectsReservedSymbol) {
  try {
    Inventory::parse("!feature\tx\n\\#\t1\n");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("reserved symbol"), std::string::npos);
  }
  EXPECT_THROW(Inventory::parse("!feature\tx\n@\t1\n"), ParseError);
}

TEST(InventoryTest, RejectsDuplicatesAndRaggedRows) {
  EXPECT_THROW(Inventory::parse("!feature\tx\na\t1\na\t0\n"), ParseError);
  EXPECT_THROW(Inventory::parse("!feature\tx,y\na\t1,0\nb\t1\n"), ParseError);
  EXPECT_THROW(Inventory::parse("!feature\tx\na\t2\n"), ParseError);
}

TEST(InventoryTest, DefaultInventoryShape) {
  const Inventory& inv = Inventory::default_inventory();
  EXPECT_GE(inv.size(), 100u);
  EXPECT_EQ(inv.feature_count(), 24u);
  for (const auto& p : inv.phones()) {
    EXPECT_EQ(p.features.size(), 24u) << p.symbol;
    EXPECT_NE(p.symbol, "#");
    EXPECT_NE(p.symbol, "@");
  }
  EXPECT_TRUE(inv.contains("ts̄"));
  EXPECT_TRUE(inv.contains("pʷ"));
}

TEST(TokenizeTest, CanonicalLayout) {
  const Inventory inv = Inventory::parse(kSmall);
  EXPECT_EQ(tokenize("aj", inv).tokens(), (std::vector<std::string>{"#", "@", "a", "@", "j", "@", "#"}));
  EXPECT_EQ(tokenize("", inv).tokens(), (std::vector<std::string>{"#", "@", "#"}));
  EXPECT_EQ(render_tokens(tokenize("aj", inv)), "# @ a @ j @ #");
}

TEST(TokenizeTest, PrefersLongestPhone) {
  const Inventory inv = tsa_inventory();
  const auto expected = oracle::segment("tsa", inv);
  ASSERT_TRUE(expected.has_value());
  EXPECT_EQ(*expected, (std::vector<std::string>{"ts", "a"}));
  EXPECT_EQ(tokenize("tsa", inv).phones(), *expected);
}

TEST(TokenizeTest, ReportsUnsegmentableOffset) {
  const Inventory inv = Inventory::parse(kSmall);
  try {
    tokenize("akq", inv);
    FAIL() << "expected TokenizationError";
  } catch (const TokenizationError& e) {
    EXPECT_EQ(e.offset(), 2u);
    EXPECT_EQ(e.word(), "akq");
  }
}

TEST(TokenizeTest, DetokenizeInvertsTokenize) {
  const Inventory inv = Inventory::parse(kSmall);
  EXPECT_EQ(detokenize(tokenize("aj", inv)), "aj");
  EXPECT_EQ(detokenize(TokenizedWord{}), "");
}

TEST(TokenizeTest, MatchesSegmentationOracleOnRandomStrings) {
  const Inventory& inv = Inventory::default_inventory();
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<std::size_t> pick(0, inv.size() - 1), len(0, 6);
  for (int i = 0; i < 1000; ++i) {
    std::string word;
    for (std::size_t n = len(rng); n > 0; --n) word += inv.phones()[pick(rng)].symbol;
    const auto expected = oracle::segment(word, inv);
    ASSERT_TRUE(expected.has_value()) << word;
    const TokenizedWord w = tokenize(word, inv);
    EXPECT_EQ(w.phones(), *expected) << word;
    EXPECT_EQ(detokenize(w), word);
  }
}

TEST(TokenizeTest, RoundTripOnStableWords) {
  const Inventory& inv = Inventory::default_inventory();
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<std::size_t> pick(0, inv.size() - 1), len(0, 6);
  int stable = 0;
  for (int i = 0; i < 1000; ++i) {
    std::vector<std::string> phones(len(rng));
    for (auto& p : phones) p = inv.phones()[pick(rng)].symbol;
    const TokenizedWord w(phones);
    if (!is_round_trip_stable(w, inv)) continue;
    ++stable;
    EXPECT_EQ(tokenize(detokenize(w), inv), w);
  }
  EXPECT_GT(stable, 800);
}

TEST(TokenizedWordTest, StructuralLayout) {
  const TokenizedWord w({"k", "a", "j"});
  ASSERT_EQ(w.token_count(), 9u);
  for (std::size_t i = 0; i < w.token_count(); ++i) {
    if (i == 0 || i + 1 == w.token_count()) {
      EXPECT_EQ(w.token(i), "#");
    } else if (i % 2 == 1) {
      EXPECT_EQ(w.token(i), "@");
      EXPECT_FALSE(w.is_phone_token(i));
    } else {
      EXPECT_TRUE(w.is_phone_token(i));
    }
  }
}

TEST(TokenizedWordTest, FromTokensRequiresCanonicalLayout) {
  const std::vector<std::string> good{"#", "@", "a", "@", "#"};
  EXPECT_EQ(TokenizedWord::from_tokens(good).phones(), (std::vector<std::string>{"a"}));
  const std::vector<std::string> bad{"#", "a", "@", "#"};
  EXPECT_THROW(TokenizedWord::from_tokens(bad), ParseError);
}

TEST(FeatureMatchTest, Examples) {
  const Phone p{"x", {1, 0, 0}};
  EXPECT_TRUE(feature_match(p, {}));
  EXPECT_TRUE(feature_match(p, {{0, true}}));
  EXPECT_FALSE(feature_match(p, {{0, true}, {1, true}}));
}

TEST(FeatureMatchTest, UnspecifiedNeverSatisfies) {
  const Phone p{"x", {-1, 1}};
  EXPECT_FALSE(feature_match(p, {{0, true}}));
  EXPECT_FALSE(feature_match(p, {{0, false}}));
}

TEST(FeatureMatchTest, MonotoneInRequirements) {
  const Inventory& inv = Inventory::default_inventory();
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<std::size_t> feat(0, inv.feature_count() - 1);
  std::bernoulli_distribution bit(0.5);
  for (int i = 0; i < 200; ++i) {
    FeatureRequirements reqs;
    for (const auto& p : inv.phones()) {
      const bool before = feature_match(p, reqs);
      FeatureRequirements more = reqs;
      more[feat(rng)] = bit(rng);
      if (!before) {
        EXPECT_FALSE(feature_match(p, more));
      }
    }
    reqs[feat(rng)] = bit(rng);
  }
}

TEST(RealizeFeatureChangeTest, EmptyChangeIsIdentity) {
  const Inventory& inv = Inventory::default_inventory();
  for (const auto& p : inv.phones()) EXPECT_EQ(realize_feature_change(p, {}, inv).symbol, p.symbol);
}

TEST(RealizeFeatureChangeTest, ExactMatchWins) {
  const Inventory inv = Inventory::parse(kSmall);
  EXPECT_EQ(realize_feature_change(inv.phones()[0], {{0, false}, {1, true}}, inv).symbol, "j");
}

TEST(RealizeFeatureChangeTest, TiesGoToEarlierPhone) {
  const Inventory inv = Inventory::parse(
      "!feature\tf0,f1\n"
      "p\t1,1\n"
      "q\t1,0\n"
      "r\t0,1\n");
  // Target [0,0] is one away from both q and r.
  EXPECT_EQ(realize_feature_change(inv.phones()[0], {{0, false}, {1, false}}, inv).symbol, "q");
}

// Brute-force nearest-phone scan, first minimum in inventory order.
std::string nearest_oracle(const Phone& p, const FeatureRequirements& changes, const Inventory& inv) {
  std::vector<FeatureValue> target = p.features;
  for (const auto& [k, v] : changes) target[k] = v ? 1 : 0;
  std::string best;
  std::size_t best_d = 1000;
  for (const auto& q : inv.phones()) {
    std::size_t d = 0;
    for (std::size_t i = 0; i < target.size(); ++i) {
      if (target[i] != -1 && q.features[i] != target[i]) ++d;
    }
    if (d < best_d) {
      best_d = d;
      best = q.symbol;
    }
  }
  return best;
}

TEST(RealizeFeatureChangeTest, MatchesHammingScanAndIsIdempotent) {
  const Inventory& inv = Inventory::default_inventory();
  std::mt19937_64 rng(9);
  std::uniform_int_distribution<std::size_t> pick(0, inv.size() - 1), feat(0, inv.feature_count() - 1), n(1, 3);
  std::bernoulli_distribution bit(0.5);
  for (int i = 0; i < 500; ++i) {
    const Phone& p = inv.phones()[pick(rng)];
    FeatureRequirements changes;
    for (std::size_t k = n(rng); k > 0; --k) changes[feat(rng)] = bit(rng);
    const Phone& r = realize_feature_change(p, changes, inv);
    EXPECT_EQ(r.symbol, nearest_oracle(p, changes, inv));
    if (feature_match(r, changes)) {
      EXPECT_EQ(realize_feature_change(r, changes, inv).symbol, r.symbol);
    }
  }
}

}  // namespace
}  // namespace cascade_forge
