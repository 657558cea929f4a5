#pragma once

// Tree transformations that build modified languages out of parsed text:
// local constituent reordering (WALS 83A/85A/87A), constituent shuffle,
// word shuffle, and removal of a fraction of intermediate nodes.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ordkit/random.hpp"
#include "ordkit/treebank.hpp"

namespace ordkit {

class RuleError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Swap rule PARENT -> FIRST SECOND  =>  PARENT -> SECOND FIRST, applied only
/// to parents with exactly two children.
struct ReorderRule {
  std::string feature_id;
  std::string parent_label;
  std::string first_child;
  std::string second_child;
  std::set<std::string> prefix_match;  // child patterns matched by prefix

  bool matches_pattern(const std::string& pattern, std::string_view label) const {
    if (prefix_match.contains(pattern)) return label.starts_with(pattern);
    return label == pattern;
  }

  bool matches(const TreeNode& node) const {
    return !node.is_leaf() && node.children.size() == 2 && node.label == parent_label &&
           matches_pattern(first_child, node.children[0].label) &&
           matches_pattern(second_child, node.children[1].label);
  }

  /// True when some label could match both child patterns. Such a rule
  /// would match again after its own swap.
  bool patterns_overlap() const {
    const bool p1 = prefix_match.contains(first_child);
    const bool p2 = prefix_match.contains(second_child);
    const std::string_view a = first_child;
    const std::string_view b = second_child;
    if (p1 && p2) return a.starts_with(b) || b.starts_with(a);
    if (p1) return b.starts_with(a);
    if (p2) return a.starts_with(b);
    return a == b;
  }

  void validate() const {
    if (feature_id.empty() || parent_label.empty() || first_child.empty() || second_child.empty()) {
      throw RuleError("reorder rule has an empty field");
    }
    if (patterns_overlap()) {
      throw RuleError("reorder rule " + feature_id + ": child patterns '" + first_child + "' and '" +
                      second_child + "' overlap");
    }
    for (const auto& p : prefix_match) {
      if (p != first_child && p != second_child) {
        throw RuleError("reorder rule " + feature_id + ": prefix pattern '" + p +
                        "' is not one of its child patterns");
      }
    }
  }

  friend bool operator==(const ReorderRule&, const ReorderRule&) = default;
};

/// 83A: VP -> VB* NP;  85A: PP -> IN NP;  87A: NP -> JJ* NN*.
inline ReorderRule builtin_rule(std::string_view feature) {
  if (feature == "83A") return {"83A", "VP", "VB", "NP", {"VB"}};
  if (feature == "85A") return {"85A", "PP", "IN", "NP", {}};
  if (feature == "87A") return {"87A", "NP", "JJ", "NN", {"JJ", "NN"}};
  throw RuleError("unknown built-in feature '" + std::string(feature) + "'");
}

inline std::vector<ReorderRule> builtin_rules() {
  return {builtin_rule("83A"), builtin_rule("85A"), builtin_rule("87A")};
}

inline ReorderRule inverse_rule(const ReorderRule& rule) {
  ReorderRule inv = rule;
  std::swap(inv.first_child, inv.second_child);
  return inv;
}

/// One rule per line: "FEATURE PARENT CHILD1 CHILD2 [prefix:CHILD[,CHILD]...]".
/// Blank lines and lines starting with '#' are ignored.
inline std::vector<ReorderRule> parse_rules(std::istream& in) {
  std::vector<ReorderRule> rules;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream fields(line);
    std::vector<std::string> words;
    for (std::string w; fields >> w;) words.push_back(w);
    if (words.empty() || words[0].starts_with("#")) continue;
    if (words.size() < 4) {
      throw RuleError("rule file line " + std::to_string(line_no) +
                      ": expected FEATURE PARENT CHILD1 CHILD2 [prefix:CHILD...]");
    }
    ReorderRule r{words[0], words[1], words[2], words[3], {}};
    for (std::size_t i = 4; i < words.size(); ++i) {
      std::string_view w = words[i];
      if (!w.starts_with("prefix:")) {
        throw RuleError("rule file line " + std::to_string(line_no) + ": unexpected field '" +
                        words[i] + "'");
      }
      w.remove_prefix(7);
      while (!w.empty()) {
        const auto comma = w.find(',');
        r.prefix_match.emplace(w.substr(0, comma));
        if (comma == std::string_view::npos) break;
        w.remove_prefix(comma + 1);
      }
    }
    try {
      r.validate();
    } catch (const RuleError& e) {
      throw RuleError("rule file line " + std::to_string(line_no) + ": " + e.what());
    }
    rules.push_back(std::move(r));
  }
  return rules;
}

namespace detail {

inline void reorder_in_place(TreeNode& node, const ReorderRule& rule) {
  for (auto& c : node.children) reorder_in_place(c, rule);
  if (rule.matches(node)) std::swap(node.children[0], node.children[1]);
}

inline void shuffle_in_place(TreeNode& node, Rng& rng, bool is_root, bool include_root) {
  if (node.children.size() >= 2 && (include_root || !is_root)) {
    rng.shuffle(std::span<TreeNode>(node.children));
  }
  for (auto& c : node.children) shuffle_in_place(c, rng, false, include_root);
}

}  // namespace detail

/// Swaps the children of every node matching the rule. A swap never changes
/// child labels, so the bottom-up and top-down orders agree.
inline ConstituentTree apply_reorder(const ConstituentTree& tree, const ReorderRule& rule) {
  TreeNode root = tree.root();
  detail::reorder_in_place(root, rule);
  return ConstituentTree(std::move(root));
}

inline ConstituentTree apply_reorder(const ConstituentTree& tree, std::span<const ReorderRule> rules) {
  TreeNode root = tree.root();
  for (const auto& r : rules) detail::reorder_in_place(root, r);
  return ConstituentTree(std::move(root));
}

inline std::size_t count_matches(const ConstituentTree& tree, const ReorderRule& rule) {
  std::size_t n = 0;
  for_each_node(tree.root(), [&](const TreeNode& node, std::size_t) { n += rule.matches(node); });
  return n;
}

struct ShuffleOptions {
  bool include_root = true;
};

/// Permutes the children of every internal node with two or more children.
/// Nodes are visited pre-order; a node's children are permuted before the
/// walk descends into them (in their new order).
inline ConstituentTree constituent_shuffle(const ConstituentTree& tree, const SeedScheme& seed,
                                           ShuffleOptions options = {}) {
  TreeNode root = tree.root();
  Rng rng(seed);
  detail::shuffle_in_place(root, rng, true, options.include_root);
  return ConstituentTree(std::move(root));
}

inline Sentence word_shuffle(Sentence sentence, const SeedScheme& seed) {
  Rng rng(seed);
  rng.shuffle(std::span<Token>(sentence.tokens));
  return sentence;
}

struct AblationSpec {
  double alpha = 0.0;
  bool shuffle_after = false;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(alpha >= 0.0 && alpha <= 1.0)) {
      throw std::invalid_argument("ablation alpha must lie in [0, 1], got " + std::to_string(alpha));
    }
  }
};

/// Non-root internal nodes with more than one child.
inline std::size_t intermediate_node_count(const TreeNode& root) {
  std::size_t n = 0;
  for_each_node(root, [&](const TreeNode& node, std::size_t depth) {
    n += depth > 0 && node.children.size() > 1;
  });
  return n;
}

inline std::size_t intermediate_node_count(const ConstituentTree& tree) {
  return intermediate_node_count(tree.root());
}

/// round(alpha * k), halves rounded up.
inline std::size_t removal_count(double alpha, std::size_t k) {
  return static_cast<std::size_t>(std::floor(alpha * static_cast<double>(k) + 0.5));
}

namespace detail {

// Intermediate nodes are numbered pre-order; `selected` is indexed by that
// number. Returns whether `node` itself was selected for removal.
inline bool splice_selected(TreeNode& node, const std::vector<bool>& selected, std::size_t& counter,
                            bool is_root) {
  if (node.is_leaf()) return false;
  bool removed = false;
  if (!is_root && node.children.size() > 1) removed = selected[counter++];
  std::vector<TreeNode> rebuilt;
  rebuilt.reserve(node.children.size());
  for (auto& child : node.children) {
    if (splice_selected(child, selected, counter, false)) {
      for (auto& grandchild : child.children) rebuilt.push_back(std::move(grandchild));
    } else {
      rebuilt.push_back(std::move(child));
    }
  }
  node.children = std::move(rebuilt);
  return removed;
}

}  // namespace detail

/// Removes round(alpha * K) of the K intermediate nodes, splicing each
/// removed node's children into its parent at its position. The selection
/// is drawn once against the original tree. With shuffle_after, the result
/// is then constituent-shuffled using the same stream.
inline ConstituentTree remove_composition(const ConstituentTree& tree, const AblationSpec& spec,
                                          std::uint64_t sentence_index = 0) {
  spec.validate();
  const std::size_t k = intermediate_node_count(tree);
  const std::size_t r = removal_count(spec.alpha, k);
  Rng rng(SeedScheme{spec.seed, sentence_index});

  std::vector<std::size_t> order(k);
  for (std::size_t i = 0; i < k; ++i) order[i] = i;
  for (std::size_t i = 0; i < r; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.uniform(k - i));
    std::swap(order[i], order[j]);
  }
  std::vector<bool> selected(k, false);
  for (std::size_t i = 0; i < r; ++i) selected[order[i]] = true;

  TreeNode root = tree.root();
  if (r > 0) {
    std::size_t counter = 0;
    detail::splice_selected(root, selected, counter, true);
  }
  if (spec.shuffle_after) detail::shuffle_in_place(root, rng, true, true);
  return ConstituentTree(std::move(root));
}

}  // namespace ordkit
