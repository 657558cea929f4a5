#pragma once

// Bracketed constituent trees: parsing, serialization, traversal.
//
// A tree is written "(LABEL child ...)" and a leaf "(TAG token)". Leaves
// carry an origin index, their position in the sentence the tree was first
// read from; transformations move leaves around but never touch it, so the
// original position of every word stays recoverable.

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace ordkit {

inline constexpr std::size_t kNoOrigin = std::numeric_limits<std::size_t>::max();

struct TreeNode {
  std::string label;
  std::vector<TreeNode> children;
  std::optional<std::string> token;  // present iff leaf
  std::size_t origin = kNoOrigin;    // leaves only

  bool is_leaf() const noexcept { return token.has_value(); }

  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

struct Token {
  std::string surface;
  std::size_t origin = 0;

  friend bool operator==(const Token&, const Token&) = default;
  friend auto operator<=>(const Token&, const Token&) = default;
};

struct Sentence {
  std::vector<Token> tokens;

  std::size_t size() const noexcept { return tokens.size(); }
  bool empty() const noexcept { return tokens.empty(); }
  std::string text() const {
    std::string out;
    for (const auto& t : tokens) {
      if (!out.empty()) out += ' ';
      out += t.surface;
    }
    return out;
  }

  friend bool operator==(const Sentence&, const Sentence&) = default;
};

/// Sentence from whitespace-separated text; origin indices 0..n-1.
inline Sentence sentence_from_text(std::string_view text) {
  Sentence s;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    if (j > i) s.tokens.push_back({std::string(text.substr(i, j - i)), s.tokens.size()});
    i = j;
  }
  return s;
}

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t offset, const std::string& what)
      : std::runtime_error(what + " at offset " + std::to_string(offset)), offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

class TreeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

namespace detail {

inline bool is_space(char c) noexcept { return std::isspace(static_cast<unsigned char>(c)) != 0; }

inline bool is_atom_char(char c) noexcept { return c != '(' && c != ')' && !is_space(c); }

inline bool valid_atom(std::string_view s) noexcept {
  return !s.empty() && std::all_of(s.begin(), s.end(), is_atom_char);
}

}  // namespace detail

/// PTB escaping for raw tokens: "(" -> -LRB-, ")" -> -RRB-, whitespace -> "_".
/// Tokens that are already valid atoms come back unchanged.
inline std::string escape_token(std::string_view raw) {
  std::string out;
  out.reserve(raw.size());
  for (char c : raw) {
    if (c == '(') {
      out += "-LRB-";
    } else if (c == ')') {
      out += "-RRB-";
    } else if (detail::is_space(c)) {
      out += '_';
    } else {
      out += c;
    }
  }
  return out;
}

inline TreeNode make_leaf(std::string tag, std::string_view raw_token) {
  if (!detail::valid_atom(tag)) throw TreeError("invalid leaf tag '" + tag + "'");
  if (raw_token.empty()) throw TreeError("empty token under tag '" + tag + "'");
  TreeNode n;
  n.label = std::move(tag);
  n.token = escape_token(raw_token);
  return n;
}

inline TreeNode make_node(std::string label, std::vector<TreeNode> children) {
  if (!detail::valid_atom(label)) throw TreeError("invalid label '" + label + "'");
  if (children.empty()) throw TreeError("internal node '" + label + "' has no children");
  TreeNode n;
  n.label = std::move(label);
  n.children = std::move(children);
  return n;
}

template <typename Fn>
void for_each_leaf(const TreeNode& node, Fn&& fn) {
  if (node.is_leaf()) {
    fn(node);
    return;
  }
  for (const auto& c : node.children) for_each_leaf(c, fn);
}

template <typename Fn>
void for_each_leaf(TreeNode& node, Fn&& fn) {
  if (node.is_leaf()) {
    fn(node);
    return;
  }
  for (auto& c : node.children) for_each_leaf(c, fn);
}

/// Pre-order visit; fn(node, depth).
template <typename Fn>
void for_each_node(const TreeNode& node, Fn&& fn, std::size_t depth = 0) {
  fn(node, depth);
  for (const auto& c : node.children) for_each_node(c, fn, depth + 1);
}

inline std::size_t leaf_count(const TreeNode& node) {
  std::size_t n = 0;
  for_each_leaf(node, [&](const TreeNode&) { ++n; });
  return n;
}

/// Equality of labels, tokens and child order; origin indices are ignored.
inline bool structurally_equal(const TreeNode& a, const TreeNode& b) {
  if (a.label != b.label || a.token != b.token || a.children.size() != b.children.size()) {
    return false;
  }
  for (std::size_t i = 0; i < a.children.size(); ++i) {
    if (!structurally_equal(a.children[i], b.children[i])) return false;
  }
  return true;
}

/// A validated tree. Immutable once built; transformations return new trees.
class ConstituentTree {
 public:
  /// Validates the node structure. Leaves without origin indices get
  /// 0..n-1 in yield order; if any leaf has one, all must, and together
  /// they must form a permutation of 0..n-1.
  explicit ConstituentTree(TreeNode root) : root_(std::move(root)) {
    std::size_t with_origin = 0;
    std::size_t leaves = 0;
    validate(root_, with_origin, leaves);
    if (with_origin == 0) {
      std::size_t next = 0;
      for_each_leaf(root_, [&](TreeNode& leaf) { leaf.origin = next++; });
    } else if (with_origin != leaves) {
      throw TreeError("origin indices present on some leaves but not all");
    } else {
      std::vector<bool> seen(leaves, false);
      for_each_leaf(root_, [&](const TreeNode& leaf) {
        if (leaf.origin >= leaves || seen[leaf.origin]) {
          throw TreeError("leaf origin indices are not a permutation");
        }
        seen[leaf.origin] = true;
      });
    }
  }

  const TreeNode& root() const noexcept { return root_; }
  std::size_t size() const { return leaf_count(root_); }

  friend bool operator==(const ConstituentTree&, const ConstituentTree&) = default;

 private:
  static void validate(const TreeNode& n, std::size_t& with_origin, std::size_t& leaves) {
    if (!detail::valid_atom(n.label)) throw TreeError("invalid label '" + n.label + "'");
    if (n.is_leaf()) {
      if (!n.children.empty()) throw TreeError("leaf '" + n.label + "' has children");
      if (!detail::valid_atom(*n.token)) throw TreeError("invalid token '" + *n.token + "'");
      ++leaves;
      if (n.origin != kNoOrigin) ++with_origin;
      return;
    }
    if (n.children.empty()) throw TreeError("internal node '" + n.label + "' has no children");
    for (const auto& c : n.children) validate(c, with_origin, leaves);
  }

  TreeNode root_;
};

inline bool structurally_equal(const ConstituentTree& a, const ConstituentTree& b) {
  return structurally_equal(a.root(), b.root());
}

namespace detail {

class BracketParser {
 public:
  explicit BracketParser(std::string_view text) : text_(text) {}

  TreeNode parse() {
    skip_space();
    if (pos_ == text_.size()) throw ParseError(pos_, "empty input");
    expect_open();
    TreeNode root = parse_after_open();
    skip_space();
    if (pos_ != text_.size()) throw ParseError(pos_, "trailing characters after tree");
    return root;
  }

 private:
  void skip_space() {
    while (pos_ < text_.size() && is_space(text_[pos_])) ++pos_;
  }

  void expect_open() {
    if (pos_ == text_.size()) throw ParseError(pos_, "unexpected end of input");
    if (text_[pos_] != '(') throw ParseError(pos_, "expected '('");
    ++pos_;
  }

  std::string_view atom() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() && is_atom_char(text_[pos_])) ++pos_;
    return text_.substr(start, pos_ - start);
  }

  void expect_close() {
    skip_space();
    if (pos_ == text_.size()) throw ParseError(pos_, "unexpected end of input");
    if (text_[pos_] != ')') throw ParseError(pos_, "expected ')'");
    ++pos_;
  }

  TreeNode parse_after_open() {
    skip_space();
    if (pos_ == text_.size()) throw ParseError(pos_, "unexpected end of input");
    const std::size_t label_at = pos_;
    TreeNode node;
    node.label = std::string(atom());
    if (node.label.empty()) throw ParseError(label_at, "empty label");
    skip_space();
    if (pos_ == text_.size()) throw ParseError(pos_, "unexpected end of input");

    if (text_[pos_] == '(') {
      while (pos_ < text_.size() && text_[pos_] == '(') {
        ++pos_;
        node.children.push_back(parse_after_open());
        skip_space();
      }
      if (pos_ < text_.size() && is_atom_char(text_[pos_])) {
        throw ParseError(pos_, "token mixed with child nodes under '" + node.label + "'");
      }
      expect_close();
      return node;
    }
    if (text_[pos_] == ')') throw ParseError(pos_, "node '" + node.label + "' has no children");

    node.token = std::string(atom());
    skip_space();
    if (pos_ < text_.size() && text_[pos_] == '(') {
      throw ParseError(pos_, "leaf '" + node.label + "' has children");
    }
    if (pos_ < text_.size() && is_atom_char(text_[pos_])) {
      throw ParseError(pos_, "leaf '" + node.label + "' has more than one token");
    }
    expect_close();
    return node;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline ConstituentTree parse_ptb(std::string_view text) {
  return ConstituentTree(detail::BracketParser(text).parse());
}

namespace detail {

inline void serialize_into(const TreeNode& n, std::string& out) {
  out += '(';
  out += n.label;
  out += ' ';
  if (n.is_leaf()) {
    out += *n.token;
  } else {
    for (std::size_t i = 0; i < n.children.size(); ++i) {
      if (i > 0) out += ' ';
      serialize_into(n.children[i], out);
    }
  }
  out += ')';
}

}  // namespace detail

inline std::string serialize(const TreeNode& node) {
  std::string out;
  detail::serialize_into(node, out);
  return out;
}

inline std::string serialize(const ConstituentTree& tree) { return serialize(tree.root()); }

inline Sentence yield_sentence(const TreeNode& node) {
  Sentence s;
  for_each_leaf(node, [&](const TreeNode& leaf) { s.tokens.push_back({*leaf.token, leaf.origin}); });
  return s;
}

inline Sentence yield_sentence(const ConstituentTree& tree) { return yield_sentence(tree.root()); }

/// True for lines the treebank reader skips: blank, or an empty bracketing
/// such as "()" or "(())".
inline bool is_empty_tree_line(std::string_view line) {
  return std::all_of(line.begin(), line.end(),
                     [](char c) { return c == '(' || c == ')' || detail::is_space(c); });
}

/// Line-oriented treebank reader. One tree per line.
class TreebankReader {
 public:
  struct Entry {
    std::size_t line_number = 0;  // 1-based
    ConstituentTree tree;
  };

  struct BadLine {
    std::size_t line_number = 0;
    std::string message;
  };

  explicit TreebankReader(std::istream& in, bool skip_bad = false) : in_(in), skip_bad_(skip_bad) {}

  /// Next tree, or nullopt at end of stream. Malformed lines throw a
  /// ParseError prefixed with the line number unless skip_bad is set.
  std::optional<Entry> next() {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (is_empty_tree_line(line)) {
        ++skipped_empty_;
        continue;
      }
      try {
        return Entry{line_, parse_ptb(line)};
      } catch (const ParseError& e) {
        if (!skip_bad_) throw ParseError(e.offset(), "line " + std::to_string(line_) + ": " + e.what());
        bad_.push_back({line_, e.what()});
      } catch (const TreeError& e) {
        if (!skip_bad_) throw ParseError(0, "line " + std::to_string(line_) + ": " + e.what());
        bad_.push_back({line_, e.what()});
      }
    }
    return std::nullopt;
  }

  std::size_t skipped_empty() const noexcept { return skipped_empty_; }
  const std::vector<BadLine>& bad_lines() const noexcept { return bad_; }

 private:
  std::istream& in_;
  bool skip_bad_;
  std::size_t line_ = 0;
  std::size_t skipped_empty_ = 0;
  std::vector<BadLine> bad_;
};

}  // namespace ordkit
