#include <gtest/gtest.h>

#include <numeric>
#include <sstream>

#include "oracles.hpp"
#include "ordkit/metrics.hpp"
#include "ordkit/transform.hpp"

using namespace ordkit;

namespace {

AlignedPermutation perm(std::vector<std::size_t> pi) { return {std::move(pi)}; }

}  // namespace

TEST(Alignment, IdentityForIdenticalSentences) {
  const auto s = sentence_from_text("the cat the dog");
  EXPECT_EQ(alignment(s, s), AlignedPermutation::identity(4));
}

TEST(Alignment, VerbObjectExample) {
  const auto tree = parse_ptb("(S (NP (PRP I)) (VP (VBD read) (NP (CD two) (NNS papers))))");
  const auto swapped = apply_reorder(tree, builtin_rule("83A"));
  EXPECT_EQ(alignment(yield_sentence(tree), yield_sentence(swapped)).pi, (std::vector<std::size_t>{0, 3, 1, 2}));
}

TEST(Alignment, MissingTokenIsAnError) {
  const auto a = sentence_from_text("I read two papers");
  const auto b = sentence_from_text("I read papers");
  EXPECT_THROW(alignment(a, b), AlignmentError);
  auto c = yield_sentence(parse_ptb("(S (A I) (B read) (C two) (D books))"));
  try {
    alignment(a, c);
    FAIL();
  } catch (const AlignmentError& e) {
    EXPECT_NE(std::string(e.what()).find("papers"), std::string::npos);
  }
}

TEST(Alignment, ByOccurrenceForDuplicates) {
  const auto a = sentence_from_text("a b a c");
  const auto b = align_by_occurrence(a, sentence_from_text("a c a b"));
  EXPECT_EQ(alignment(a, b).pi, (std::vector<std::size_t>{0, 3, 2, 1}));
}

TEST(InversionRatio, Examples) {
  EXPECT_EQ(inversion_ratio(AlignedPermutation::identity(5)), 0.0);
  EXPECT_EQ(inversion_ratio(perm({3, 2, 1, 0})), 1.0);
  EXPECT_DOUBLE_EQ(inversion_ratio(perm({1, 0, 2})), 1.0 / 3.0);
  EXPECT_EQ(inversion_ratio(perm({0})), 0.0);
  EXPECT_EQ(inversion_ratio(perm({})), 0.0);
}

TEST(WordMoveDistance, Examples) {
  EXPECT_EQ(word_move_distance(AlignedPermutation::identity(5)), 0.0);
  EXPECT_DOUBLE_EQ(word_move_distance(perm({3, 2, 1, 0})), 0.5);
  EXPECT_DOUBLE_EQ(word_move_distance(perm({1, 0})), 0.5);
}

TEST(InversionRatio, ReversalComplementsAndMatchesOracle) {
  Rng rng(std::uint64_t{99});
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 2 + rng.uniform(40);
    std::vector<std::size_t> pi(n);
    std::iota(pi.begin(), pi.end(), 0);
    rng.shuffle(std::span<std::size_t>(pi));
    const double ir = inversion_ratio(perm(pi));
    ASSERT_DOUBLE_EQ(ir, oracle::inversion_ratio_brute(pi));
    ASSERT_EQ(inversion_count(perm(pi)), oracle::inversions_brute(pi));
    std::vector<std::size_t> rev(pi.rbegin(), pi.rend());
    ASSERT_NEAR(inversion_ratio(perm(rev)), 1.0 - ir, 1e-12);
  }
}

TEST(CorpusStats, IdenticalAndReversedCorpora) {
  const auto s = sentence_from_text("w x y z");
  Sentence rev = s;
  std::reverse(rev.tokens.begin(), rev.tokens.end());
  std::vector<std::pair<Sentence, Sentence>> same(3, {s, s}), reversed(3, {s, rev});
  EXPECT_EQ(corpus_stats(same).mean_inversion_ratio, 0.0);
  const auto r = corpus_stats(reversed);
  EXPECT_DOUBLE_EQ(r.mean_inversion_ratio, 1.0);
  EXPECT_DOUBLE_EQ(r.mean_word_move_distance, 0.5);
  EXPECT_EQ(r.sentence_count, 3u);
  EXPECT_EQ(r.token_count, 12u);
}

TEST(CorpusStats, ShortSentencesCountedAndMergeIsAssociative) {
  CorpusAccumulator a, b, all;
  a.add(perm({0}));
  a.add(perm({1, 0}));
  b.add(perm({2, 0, 1}));
  all.add(perm({0}));
  all.add(perm({1, 0}));
  all.add(perm({2, 0, 1}));
  const auto merged = a.merge(b).stats();
  const auto direct = all.stats();
  EXPECT_EQ(merged.short_sentences, 1u);
  EXPECT_DOUBLE_EQ(merged.mean_inversion_ratio, direct.mean_inversion_ratio);
  EXPECT_DOUBLE_EQ(merged.mean_inversion_ratio, (0.0 + 1.0 + 2.0 / 3.0) / 3.0);
}

TEST(CorpusStats, ReportFormat) {
  CorpusAccumulator acc;
  acc.add(perm({1, 0, 2}));
  std::ostringstream out;
  write_stats_report(out, {{"swap", acc.stats()}});
  EXPECT_EQ(out.str(),
            "source_type\tinversion_ratio_pct\tword_move_distance_pct\tsentences\ttokens\tshort_sentences\n"
            "swap\t33.33\t22.22\t1\t3\t0\n");
}

TEST(WordMoveDistance, UniformShuffleMatchesClosedForm) {
  // E|pi(i) - i| summed over i is (n^2 - 1) / 3 for a uniform permutation.
  const auto s = sentence_from_text("a b c d e f g h i j");
  CorpusAccumulator acc;
  for (std::uint64_t i = 0; i < 20000; ++i) acc.add(s, word_shuffle(s, {12, i}));
  EXPECT_NEAR(acc.stats().mean_word_move_distance, 99.0 / 300.0, 0.004);
  EXPECT_NEAR(acc.stats().mean_inversion_ratio, 0.5, 0.005);
}
