#include <gtest/gtest.h>

#include <sstream>

#include "oracles.hpp"
#include "ordkit/subword.hpp"

using namespace ordkit;

namespace {

std::vector<SymbolPair> pairs(std::initializer_list<SymbolPair> l) { return l; }

}  // namespace

TEST(Bpe, FirstMergeOnRepeatedWord) {
  // Alphabet {a, b}: initial vocab 6 + 4 = 10; room for one merge.
  const auto m = bpe_learn({"ab ab ab"}, 11);
  EXPECT_EQ(m.merges(), pairs({{"a", "b</w>"}}));
  EXPECT_EQ(m.vocab_size(), 11u);
}

TEST(Bpe, MergesInFrequencyOrder) {
  const auto m = bpe_learn({"ab ab ab cd cd"}, BpeModel::initial_size(4) + 2);
  EXPECT_EQ(m.merges(), pairs({{"a", "b</w>"}, {"c", "d</w>"}}));
  EXPECT_EQ(m.merges(), oracle::bpe_merges_brute({"ab ab ab cd cd"}, BpeModel::initial_size(4) + 2));
}

TEST(Bpe, ZeroMergesAtInitialSize) {
  const auto m = bpe_learn({"ab ab ab"}, BpeModel::initial_size(2));
  EXPECT_TRUE(m.merges().empty());
}

TEST(Bpe, TooSmallVocabularyNamesTheMinimum) {
  try {
    bpe_learn({"ab ab ab"}, 5);
    FAIL();
  } catch (const BpeError& e) {
    EXPECT_NE(std::string(e.what()).find("minimum for this corpus is 10"), std::string::npos);
  }
  EXPECT_THROW(bpe_learn({"", "  "}, 100), BpeError);
}

TEST(Bpe, TiesBreakLexicographically) {
  const auto m = bpe_learn({"xy ab xy ab"}, BpeModel::initial_size(4) + 1);
  EXPECT_EQ(m.merges(), pairs({{"a", "b</w>"}}));
}

TEST(Bpe, OverlappingPairsCountedLikeOracle) {
  const std::vector<std::string> corpus = {"aaaa aaa aa", "aaaaa b"};
  const auto m = bpe_learn(corpus, 40);
  EXPECT_EQ(m.merges(), oracle::bpe_merges_brute(corpus, 40));
}

TEST(Bpe, SeenWordBecomesOneSymbolAndDecodes) {
  const std::vector<std::string> corpus = {"lower lower lower newest newest widest"};
  const auto m = bpe_learn(corpus, 200);
  EXPECT_EQ(m.segment_word("lower"), (std::vector<std::string>{"lower</w>"}));
  const auto ids = m.encode("lower newest");
  EXPECT_EQ(ids.size(), 2u);
  EXPECT_EQ(m.decode(ids), "lower newest");
  EXPECT_TRUE(m.encode("").empty());
  EXPECT_TRUE(m.encode("   ").empty());
}

TEST(Bpe, UnknownCharacterMapsToUnk) {
  const auto m = bpe_learn({"ab ab"}, 20);
  const auto ids = m.encode("aqb");
  EXPECT_NE(std::find(ids.begin(), ids.end(), BpeModel::kUnkId), ids.end());
  EXPECT_NE(m.decode(ids).find("[UNK]"), std::string::npos);
}

TEST(Bpe, Utf8CharactersStayWhole) {
  const auto m = bpe_learn({"日本 日本 日本語"}, 30);
  for (const auto& c : m.alphabet()) EXPECT_EQ(utf8_chars(c).size(), 1u);
  EXPECT_EQ(m.decode(m.encode("日本語 日本")), "日本語 日本");
}

TEST(Bpe, ModelFileRoundTrip) {
  const auto m = bpe_learn({"the cat sat on the mat with the hat"}, 60, "en");
  std::stringstream io;
  m.write(io);
  const auto back = BpeModel::read(io);
  EXPECT_EQ(back.language(), "en");
  EXPECT_EQ(back.merges(), m.merges());
  EXPECT_EQ(back.symbols(), m.symbols());
  EXPECT_EQ(back.encode("the mat"), m.encode("the mat"));
  std::istringstream junk("not a model\n");
  EXPECT_THROW(BpeModel::read(junk), BpeError);
}

TEST(Bpe, ReservedIdsAreFixed) {
  const auto m = bpe_learn({"ab"}, 10);
  EXPECT_EQ(m.id_of("[PAD]"), 0);
  EXPECT_EQ(m.id_of("[UNK]"), 1);
  EXPECT_EQ(m.id_of("[CLS]"), 2);
  EXPECT_EQ(m.id_of("[SEP]"), 3);
  EXPECT_EQ(m.id_of("[MASK]"), 4);
  EXPECT_EQ(m.id_of("</w>"), 5);
}

TEST(Masking, ZeroRateLeavesInputAlone) {
  const std::vector<TokenId> ids = {7, 8, 9, 10, 11};
  MaskingConfig cfg;
  cfg.mask_rate = 0.0;
  const auto out = mask_tokens(ids, cfg, 100);
  EXPECT_EQ(out.ids, ids);
  EXPECT_EQ(out.labels, std::vector<TokenId>(5, 0));
}

TEST(Masking, AllSpecialInputUnchanged) {
  const std::vector<TokenId> ids = {2, 0, 5, 3};
  MaskingConfig cfg;
  cfg.mask_rate = 1.0;
  const auto out = mask_tokens(ids, cfg, 100);
  EXPECT_EQ(out.ids, ids);
  EXPECT_EQ(out.labels, std::vector<TokenId>(4, 0));
}

TEST(Masking, FullRateLabelsEveryOrdinaryToken) {
  std::vector<TokenId> ids(2000, 9);
  MaskingConfig cfg;
  cfg.mask_rate = 1.0;
  cfg.seed = 4;
  const auto out = mask_tokens(ids, cfg, 50, 3);
  std::size_t masked = 0, kept = 0, random = 0;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    ASSERT_EQ(out.labels[i], 9);
    if (out.ids[i] == BpeModel::kMaskId) {
      ++masked;
    } else if (out.ids[i] == 9) {
      ++kept;
    } else {
      ASSERT_GE(out.ids[i], BpeModel::kReservedCount);
      ASSERT_LT(out.ids[i], 50);
      ++random;
    }
  }
  EXPECT_NEAR(masked / 2000.0, 0.8, 0.04);
  EXPECT_GT(kept, 100u);
  EXPECT_GT(random, 100u);
  EXPECT_EQ(mask_tokens(ids, cfg, 50, 3).ids, out.ids);
  EXPECT_NE(mask_tokens(ids, cfg, 50, 4).ids, out.ids);
}

TEST(Masking, RejectsBadConfig) {
  MaskingConfig cfg;
  cfg.replace_mask = 0.5;
  const std::vector<TokenId> ids = {7};
  EXPECT_THROW(mask_tokens(ids, cfg, 100), std::invalid_argument);
  cfg = {};
  cfg.mask_rate = 1.2;
  EXPECT_THROW(mask_tokens(ids, cfg, 100), std::invalid_argument);
  EXPECT_THROW(mask_tokens(ids, MaskingConfig{}, 6), std::invalid_argument);
}
