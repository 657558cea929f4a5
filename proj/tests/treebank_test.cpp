#include <gtest/gtest.h>

#include <sstream>

#include "oracles.hpp"
#include "ordkit/treebank.hpp"

using namespace ordkit;

namespace {

constexpr const char* kReadPapers = "(S (NP (PRP I)) (VP (VBD read) (NP (CD two) (NNS papers))))";

std::vector<std::string> words(const Sentence& s) {
  std::vector<std::string> out;
  for (const auto& t : s.tokens) out.push_back(t.surface);
  return out;
}

std::size_t error_offset(std::string_view text) {
  try {
    parse_ptb(text);
  } catch (const ParseError& e) {
    return e.offset();
  }
  ADD_FAILURE() << "no parse error for " << text;
  return 0;
}

}  // namespace

TEST(Treebank, ParsesReadTwoPapersTree) {
  const auto tree = parse_ptb(kReadPapers);
  EXPECT_EQ(tree.root().label, "S");
  ASSERT_EQ(tree.root().children.size(), 2u);
  EXPECT_EQ(words(yield_sentence(tree)), (std::vector<std::string>{"I", "read", "two", "papers"}));
  EXPECT_EQ(tree.size(), 4u);
}

TEST(Treebank, YieldCarriesOriginIndices) {
  const auto s = yield_sentence(parse_ptb(kReadPapers));
  for (std::size_t i = 0; i < s.size(); ++i) EXPECT_EQ(s.tokens[i].origin, i);
}

TEST(Treebank, MinimalTree) {
  const auto tree = parse_ptb("(X (A a))");
  EXPECT_EQ(yield_sentence(tree).text(), "a");
  EXPECT_EQ(serialize(tree), "(X (A a))");
}

TEST(Treebank, UnbalancedInputFailsAtEndOfInput) {
  EXPECT_EQ(error_offset("(S (NP"), 6u);
}

TEST(Treebank, MalformedInputs) {
  EXPECT_THROW(parse_ptb(""), ParseError);
  EXPECT_THROW(parse_ptb("   "), ParseError);
  EXPECT_THROW(parse_ptb("(S (NP (DT a)))) "), ParseError);  // trailing ")"
  EXPECT_THROW(parse_ptb("( (DT a))"), ParseError);          // empty label
  EXPECT_THROW(parse_ptb("(S)"), ParseError);                // node without children
  EXPECT_THROW(parse_ptb("(DT a (NN b))"), ParseError);      // token mixed with children
  EXPECT_THROW(parse_ptb("(S (NP (DT a))"), ParseError);
  EXPECT_EQ(error_offset("(X (A a)) z"), 10u);
}

TEST(Treebank, SerializeIsCanonical) {
  const std::string messy = "  (S   (NP (PRP I))\t(VP (VBD read)\n(NP (CD two) (NNS papers))))  ";
  EXPECT_EQ(serialize(parse_ptb(messy)), kReadPapers);
  EXPECT_EQ(serialize(parse_ptb(kReadPapers)), kReadPapers);
}

TEST(Treebank, RoundTripOnFuzzedTrees) {
  oracle::TreeFuzzer fuzz(3);
  for (int i = 0; i < 2000; ++i) {
    const auto tree = fuzz.tree();
    const auto text = serialize(tree);
    const auto again = parse_ptb(text);
    ASSERT_EQ(again, tree) << text;
    ASSERT_EQ(serialize(again), text);
  }
}

TEST(Treebank, EscapesBracketsInTokens) {
  EXPECT_EQ(escape_token("a(b"), "a-LRB-b");
  EXPECT_EQ(escape_token("x)"), "x-RRB-");
  EXPECT_EQ(escape_token("new york"), "new_york");
  const ConstituentTree tree(make_node("X", {make_leaf("NN", "a(b")}));
  const auto text = serialize(tree);
  EXPECT_EQ(text, "(X (NN a-LRB-b))");
  EXPECT_EQ(parse_ptb(text), tree);
}

TEST(Treebank, BuildersRejectBadShapes) {
  EXPECT_THROW(make_leaf("", "a"), TreeError);
  EXPECT_THROW(make_leaf("NN", ""), TreeError);
  EXPECT_THROW(make_node("NP", {}), TreeError);
  EXPECT_THROW(make_node("N P", {make_leaf("NN", "a")}), TreeError);
}

TEST(Treebank, OriginsMustFormAPermutation) {
  auto a = make_leaf("A", "a");
  auto b = make_leaf("B", "b");
  a.origin = 1;
  b.origin = 0;
  const ConstituentTree ok(make_node("X", {a, b}));
  EXPECT_EQ(yield_sentence(ok).tokens[0].origin, 1u);
  b.origin = 1;
  EXPECT_THROW(ConstituentTree(make_node("X", {a, b})), TreeError);
  b.origin = kNoOrigin;
  EXPECT_THROW(ConstituentTree(make_node("X", {a, b})), TreeError);
}

TEST(Treebank, StructuralEqualityIgnoresOrigins) {
  auto a = parse_ptb("(X (A a) (B b))").root();
  auto b = a;
  b.children[0].origin = 1;
  b.children[1].origin = 0;
  EXPECT_TRUE(structurally_equal(a, b));
  EXPECT_FALSE(a == b);
}

TEST(Treebank, ReaderSkipsEmptyLinesAndReportsBadOnes) {
  std::istringstream in("(X (A a))\n\n()\n(S (NP\n(Y (B b))\r\n");
  TreebankReader lenient(in, true);
  std::vector<std::size_t> lines;
  while (auto e = lenient.next()) lines.push_back(e->line_number);
  EXPECT_EQ(lines, (std::vector<std::size_t>{1, 5}));
  EXPECT_EQ(lenient.skipped_empty(), 2u);
  ASSERT_EQ(lenient.bad_lines().size(), 1u);
  EXPECT_EQ(lenient.bad_lines()[0].line_number, 4u);

  std::istringstream strict_in("(X (A a))\n(S (NP\n");
  TreebankReader strict(strict_in);
  EXPECT_TRUE(strict.next());
  try {
    strict.next();
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
}
