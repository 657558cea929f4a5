#pragma once

// Paired artificial languages from one weighted CFG.
//
// A derivation is sampled once and linearized twice: each language puts the
// children of every 83A/85A/87A configuration in the order its profile asks
// for, and spells preterminals from its own lexicon. Lexicons are parallel
// word lists, so word k of a preterminal in one language translates to word
// k in the other. Grammar file syntax is in docs/grammar.md.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ordkit/parallel.hpp"
#include "ordkit/random.hpp"
#include "ordkit/transform.hpp"
#include "ordkit/treebank.hpp"

namespace ordkit {

class GrammarError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Built-in feature order: 83A, 85A, 87A.
inline constexpr std::array<std::string_view, 3> kOrderFeatures = {"83A", "85A", "87A"};

/// For each feature, whether the language puts the rule's second child
/// first (OV, Post, NA) rather than the English-like order (VO, Pre, AN).
struct OrderProfile {
  std::array<bool, 3> swapped{};

  static constexpr std::array<std::array<std::string_view, 2>, 3> kValues = {{
      {"VO", "OV"},
      {"Pre", "Post"},
      {"AN", "NA"},
  }};

  void set(std::string_view feature, std::string_view value) {
    for (std::size_t f = 0; f < kOrderFeatures.size(); ++f) {
      if (kOrderFeatures[f] != feature) continue;
      if (value == kValues[f][0]) {
        swapped[f] = false;
      } else if (value == kValues[f][1]) {
        swapped[f] = true;
      } else {
        throw GrammarError("feature " + std::string(feature) + " takes " + std::string(kValues[f][0]) + " or " +
                           std::string(kValues[f][1]) + ", not '" + std::string(value) + "'");
      }
      return;
    }
    throw GrammarError("unknown order feature '" + std::string(feature) + "'");
  }

  std::string_view value(std::size_t feature) const { return kValues[feature][swapped[feature] ? 1 : 0]; }

  friend bool operator==(const OrderProfile&, const OrderProfile&) = default;
};

/// Rules that turn a tree linearized under `from` into one under `to`.
inline std::vector<ReorderRule> rules_for_profile_delta(const OrderProfile& from, const OrderProfile& to) {
  std::vector<ReorderRule> rules;
  for (std::size_t f = 0; f < kOrderFeatures.size(); ++f) {
    if (from.swapped[f] == to.swapped[f]) continue;
    const ReorderRule r = builtin_rule(kOrderFeatures[f]);
    rules.push_back(from.swapped[f] ? inverse_rule(r) : r);
  }
  return rules;
}

struct Production {
  std::string lhs;
  std::vector<std::string> rhs;
  double weight = 1.0;
};

struct Lexicon {
  std::string language;
  std::map<std::string, std::vector<std::string>> words;  // preterminal -> word per concept
};

struct SynthGrammar {
  std::string start = "S";
  double decay = 0.5;
  std::size_t max_depth = 12;
  std::size_t max_retries = 100;
  std::vector<Production> rules;
  std::array<Lexicon, 2> lexicons;
  std::array<OrderProfile, 2> profiles;

  bool is_preterminal(const std::string& symbol) const { return lexicons[0].words.contains(symbol); }

  /// Productions of a cycle get weight * decay^depth when sampled.
  std::vector<bool> recursive_flags() const {
    std::map<std::string, std::set<std::string>> edges;
    for (const auto& p : rules) edges[p.lhs].insert(p.rhs.begin(), p.rhs.end());
    auto reaches = [&](const std::string& from, const std::string& target) {
      std::set<std::string> seen{from};
      std::vector<std::string> stack{from};
      while (!stack.empty()) {
        auto s = stack.back();
        stack.pop_back();
        if (s == target) return true;
        auto it = edges.find(s);
        if (it == edges.end()) continue;
        for (const auto& t : it->second) {
          if (seen.insert(t).second) stack.push_back(t);
        }
      }
      return false;
    };
    std::vector<bool> flags;
    for (const auto& p : rules) {
      bool rec = false;
      for (const auto& s : p.rhs) rec = rec || reaches(s, p.lhs);
      flags.push_back(rec);
    }
    return flags;
  }

  void validate() const {
    if (rules.empty()) throw GrammarError("grammar has no rules");
    if (lexicons[0].language.empty() || lexicons[1].language.empty()) {
      throw GrammarError("grammar needs exactly two lexicon sections");
    }
    if (lexicons[0].language == lexicons[1].language) throw GrammarError("the two languages must differ");
    if (!(decay > 0.0 && decay <= 1.0)) throw GrammarError("decay must lie in (0, 1]");
    if (max_depth == 0) throw GrammarError("max_depth must be positive");
    std::set<std::string> lhs;
    for (const auto& p : rules) {
      if (p.rhs.empty()) throw GrammarError("rule for " + p.lhs + " has an empty right-hand side");
      if (!(p.weight > 0.0)) throw GrammarError("rule for " + p.lhs + " has a non-positive weight");
      if (is_preterminal(p.lhs)) throw GrammarError(p.lhs + " is both a preterminal and a rule head");
      lhs.insert(p.lhs);
    }
    if (!lhs.contains(start)) throw GrammarError("no rule expands the start symbol " + start);
    for (const auto& p : rules) {
      for (const auto& s : p.rhs) {
        if (!lhs.contains(s) && !is_preterminal(s)) {
          throw GrammarError("symbol " + s + " has neither rules nor lexicon entries");
        }
      }
    }
    const auto& a = lexicons[0].words;
    const auto& b = lexicons[1].words;
    for (const auto& [tag, words] : a) {
      auto it = b.find(tag);
      if (it == b.end()) throw GrammarError("preterminal " + tag + " missing from lexicon " + lexicons[1].language);
      if (words.empty() || words.size() != it->second.size()) {
        throw GrammarError("preterminal " + tag + " needs the same positive number of words in both lexicons");
      }
      for (const auto* list : {&words, &it->second}) {
        std::set<std::string> distinct(list->begin(), list->end());
        if (distinct.size() != list->size()) throw GrammarError("preterminal " + tag + " repeats a word");
        for (const auto& w : *list) {
          if (escape_token(w) != w || w.empty()) throw GrammarError("word '" + w + "' is not a valid token");
        }
      }
    }
    for (const auto& tag : b) {
      if (!a.contains(tag.first)) {
        throw GrammarError("preterminal " + tag.first + " missing from lexicon " + lexicons[0].language);
      }
    }
  }
};

inline SynthGrammar parse_grammar(std::istream& in) {
  SynthGrammar g;
  std::string section;
  std::string section_arg;
  std::size_t lexicon_count = 0;
  std::map<std::string, std::size_t> language_index;
  std::string line;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& msg) -> GrammarError {
    return GrammarError("grammar line " + std::to_string(line_no) + ": " + msg);
  };
  auto split = [](std::string_view s) {
    std::vector<std::string> out;
    std::istringstream ss{std::string(s)};
    for (std::string w; ss >> w;) out.push_back(w);
    return out;
  };
  auto key_value = [&](const std::string& text) {
    const auto eq = text.find('=');
    if (eq == std::string::npos) throw fail("expected 'key = value'");
    auto key = split(text.substr(0, eq));
    auto value = split(text.substr(eq + 1));
    if (key.size() != 1) throw fail("expected a single key before '='");
    return std::pair{key[0], value};
  };

  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto words = split(line);
    if (words.empty()) continue;
    if (words[0].starts_with("[")) {
      std::string header = line.substr(line.find('[') + 1);
      const auto close = header.find(']');
      if (close == std::string::npos) throw fail("unterminated section header");
      auto parts = split(header.substr(0, close));
      if (parts.empty()) throw fail("empty section header");
      section = parts[0];
      section_arg = parts.size() > 1 ? parts[1] : "";
      if (section == "lexicon") {
        if (section_arg.empty()) throw fail("lexicon section needs a language name");
        if (!language_index.contains(section_arg)) {
          if (lexicon_count == 2) throw fail("more than two languages");
          language_index[section_arg] = lexicon_count;
          g.lexicons[lexicon_count++].language = section_arg;
        }
      } else if (section == "order") {
        if (!language_index.contains(section_arg)) throw fail("order section for undeclared language '" + section_arg + "'");
      } else if (section != "grammar" && section != "rules") {
        throw fail("unknown section [" + section + "]");
      }
      continue;
    }
    if (section == "grammar") {
      auto [key, value] = key_value(line);
      if (value.size() != 1) throw fail("expected one value for " + key);
      try {
        if (key == "start") {
          g.start = value[0];
        } else if (key == "decay") {
          g.decay = std::stod(value[0]);
        } else if (key == "max_depth") {
          g.max_depth = std::stoul(value[0]);
        } else if (key == "max_retries") {
          g.max_retries = std::stoul(value[0]);
        } else {
          throw fail("unknown grammar setting '" + key + "'");
        }
      } catch (const std::logic_error&) {
        throw fail("bad value for " + key);
      }
    } else if (section == "rules") {
      // WEIGHT LHS -> RHS...
      if (words.size() < 4 || words[2] != "->") throw fail("expected 'WEIGHT LHS -> RHS...'");
      Production p;
      try {
        p.weight = std::stod(words[0]);
      } catch (const std::logic_error&) {
        throw fail("bad weight '" + words[0] + "'");
      }
      p.lhs = words[1];
      p.rhs.assign(words.begin() + 3, words.end());
      g.rules.push_back(std::move(p));
    } else if (section == "lexicon") {
      auto [tag, list] = key_value(line);
      auto& dest = g.lexicons[language_index.at(section_arg)].words[tag];
      dest.insert(dest.end(), list.begin(), list.end());
    } else if (section == "order") {
      auto [feature, value] = key_value(line);
      if (value.size() != 1) throw fail("expected one value for " + feature);
      try {
        g.profiles[language_index.at(section_arg)].set(feature, value[0]);
      } catch (const GrammarError& e) {
        throw fail(e.what());
      }
    } else {
      throw fail("content outside any section");
    }
  }
  g.validate();
  return g;
}

inline void write_grammar(std::ostream& out, const SynthGrammar& g) {
  out << "[grammar]\nstart = " << g.start << "\ndecay = " << g.decay << "\nmax_depth = " << g.max_depth
      << "\nmax_retries = " << g.max_retries << "\n\n[rules]\n";
  for (const auto& p : g.rules) {
    out << p.weight << ' ' << p.lhs << " ->";
    for (const auto& s : p.rhs) out << ' ' << s;
    out << '\n';
  }
  for (std::size_t l = 0; l < 2; ++l) {
    out << "\n[lexicon " << g.lexicons[l].language << "]\n";
    for (const auto& [tag, words] : g.lexicons[l].words) {
      out << tag << " =";
      for (const auto& w : words) out << ' ' << w;
      out << '\n';
    }
  }
  for (std::size_t l = 0; l < 2; ++l) {
    out << "\n[order " << g.lexicons[l].language << "]\n";
    for (std::size_t f = 0; f < kOrderFeatures.size(); ++f) {
      out << kOrderFeatures[f] << " = " << g.profiles[l].value(f) << '\n';
    }
  }
}

/// English-like "en" (VO, Pre, AN) paired with an artificial "art"
/// (OV, Post, NA) with a pinyin-style lexicon.
inline constexpr std::string_view kDemoGrammar = R"([grammar]
start = S
decay = 0.5
max_depth = 12

[rules]
1.0  S -> NP VP PU
0.15 NP -> PRP
0.15 NP -> NNP
0.30 NP -> DT NN
0.15 NP -> DT JJ NN
0.15 NP -> JJ NNS
0.10 NP -> DT NNS
0.20 NP -> NP PP
0.35 VP -> VBD NP
0.15 VP -> VBZ NP
0.20 VP -> VBD NP PP
0.20 VP -> VP PP
1.0  PP -> IN NP

[lexicon en]
PRP = I you he she we they
NNP = Alice Bob Beijing London Paris Tokyo
DT  = the a this that every
NN  = dog cat book paper student teacher city river house car
NNS = dogs cats books papers students teachers cities rivers houses cars
JJ  = red old new small big happy
VBD = read saw liked wrote found visited
VBZ = reads sees likes writes finds visits
IN  = in on near with from
PU  = .

[lexicon art]
PRP = wo ni ta tamen women nimen
NNP = ailisi baobo beijing lundun bali dongjing
DT  = na yi zhe nei mei
NN  = gou mao shu lunwen xuesheng laoshi chengshi he fangzi che
NNS = gouqun maoqun shuji lunwenji xueshengmen laoshimen chengshiqun heliu fangziqun cheliang
JJ  = hong lao xin xiao da kuaile
VBD = dule kanle xihuanle xiele zhaole fangwenle
VBZ = du kan xihuan xie zhao fangwen
IN  = zai shang fujin gen cong
PU  = 。

[order en]
83A = VO
85A = Pre
87A = AN

[order art]
83A = OV
85A = Post
87A = NA
)";

inline SynthGrammar demo_grammar() {
  std::istringstream in{std::string(kDemoGrammar)};
  return parse_grammar(in);
}

struct SynthPair {
  ConstituentTree a;
  ConstituentTree b;
  // (position in a, position in b) for every derivation leaf, by position in a.
  std::vector<std::pair<std::size_t, std::size_t>> alignment;
};

namespace detail {

struct Derivation {
  std::string label;
  std::vector<Derivation> children;
  std::size_t concept_id = 0;  // preterminals only
  std::size_t leaf = 0;     // derivation leaf id, preterminals only
};

struct DepthExceeded {};

class DerivationSampler {
 public:
  DerivationSampler(const SynthGrammar& g, Rng& rng) : g_(g), rng_(rng), recursive_(g.recursive_flags()) {
    for (std::size_t i = 0; i < g.rules.size(); ++i) by_lhs_[g.rules[i].lhs].push_back(i);
  }

  Derivation sample() {
    for (std::size_t attempt = 0; attempt <= g_.max_retries; ++attempt) {
      next_leaf_ = 0;
      try {
        return expand(g_.start, 0);
      } catch (const DepthExceeded&) {
      }
    }
    throw GrammarError("no derivation within depth " + std::to_string(g_.max_depth) + " after " +
                       std::to_string(g_.max_retries + 1) + " attempts");
  }

 private:
  Derivation expand(const std::string& symbol, std::size_t depth) {
    if (depth > g_.max_depth) throw DepthExceeded{};
    Derivation d;
    d.label = symbol;
    if (g_.is_preterminal(symbol)) {
      d.concept_id = static_cast<std::size_t>(rng_.uniform(g_.lexicons[0].words.at(symbol).size()));
      d.leaf = next_leaf_++;
      return d;
    }
    const auto& options = by_lhs_.at(symbol);
    std::vector<double> weights;
    double total = 0.0;
    for (std::size_t i : options) {
      double w = g_.rules[i].weight;
      if (recursive_[i]) w *= std::pow(g_.decay, static_cast<double>(depth));
      weights.push_back(w);
      total += w;
    }
    const double u = rng_.uniform01() * total;
    std::size_t pick = options.size() - 1;
    double acc = 0.0;
    for (std::size_t k = 0; k < options.size(); ++k) {
      acc += weights[k];
      if (u < acc) {
        pick = k;
        break;
      }
    }
    for (const auto& s : g_.rules[options[pick]].rhs) d.children.push_back(expand(s, depth + 1));
    return d;
  }

  const SynthGrammar& g_;
  Rng& rng_;
  std::vector<bool> recursive_;
  std::map<std::string, std::vector<std::size_t>> by_lhs_;
  std::size_t next_leaf_ = 0;
};

// Leaves carry the derivation leaf id in `origin` until the caller resets it.
inline TreeNode linearize(const Derivation& d, const SynthGrammar& g, std::size_t language,
                          const std::vector<ReorderRule>& rules) {
  TreeNode n;
  n.label = d.label;
  if (d.children.empty()) {
    n.token = g.lexicons[language].words.at(d.label)[d.concept_id];
    n.origin = d.leaf;
    return n;
  }
  for (const auto& c : d.children) n.children.push_back(linearize(c, g, language, rules));
  for (std::size_t f = 0; f < rules.size(); ++f) {
    const bool canonical = rules[f].matches(n);
    const bool flipped = inverse_rule(rules[f]).matches(n);
    if ((canonical && g.profiles[language].swapped[f]) || (flipped && !g.profiles[language].swapped[f])) {
      std::swap(n.children[0], n.children[1]);
    }
  }
  return n;
}

inline void reset_origins(TreeNode& n) {
  for_each_leaf(n, [](TreeNode& leaf) { leaf.origin = kNoOrigin; });
}

}  // namespace detail

inline SynthPair sample_pair(const SynthGrammar& grammar, const SeedScheme& seed) {
  Rng rng(seed);
  const auto derivation = detail::DerivationSampler(grammar, rng).sample();
  const auto rules = builtin_rules();
  TreeNode a = detail::linearize(derivation, grammar, 0, rules);
  TreeNode b = detail::linearize(derivation, grammar, 1, rules);

  std::vector<std::size_t> pos_a, pos_b;
  for (const auto* root : {&a, &b}) {
    auto& pos = root == &a ? pos_a : pos_b;
    std::size_t p = 0;
    pos.resize(leaf_count(*root));
    for_each_leaf(*root, [&](const TreeNode& leaf) { pos[leaf.origin] = p++; });
  }
  std::vector<std::pair<std::size_t, std::size_t>> alignment;
  for (std::size_t k = 0; k < pos_a.size(); ++k) alignment.emplace_back(pos_a[k], pos_b[k]);
  std::sort(alignment.begin(), alignment.end());

  detail::reset_origins(a);
  detail::reset_origins(b);
  return {ConstituentTree(std::move(a)), ConstituentTree(std::move(b)), std::move(alignment)};
}

struct ParallelCorpus {
  std::uint64_t seed = 0;
  std::vector<SynthPair> pairs;
};

/// Pair i uses SeedScheme{seed, i}; output does not depend on `workers`.
inline ParallelCorpus generate_corpus(const SynthGrammar& grammar, std::size_t n, std::uint64_t seed,
                                      unsigned workers = 1) {
  if (n == 0) throw GrammarError("sentence count must be at least 1");
  grammar.validate();
  std::vector<std::optional<SynthPair>> slots(n);
  std::vector<std::string> errors(n);
  auto work = [&](std::size_t i) {
    try {
      slots[i] = sample_pair(grammar, SeedScheme{seed, i});
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  };
  parallel_for(n, workers, work);
  ParallelCorpus corpus;
  corpus.seed = seed;
  corpus.pairs.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!slots[i]) throw GrammarError("sentence " + std::to_string(i) + ": " + errors[i]);
    corpus.pairs.push_back(std::move(*slots[i]));
  }
  return corpus;
}

/// Replaces each word of language `from` with its counterpart in `to`.
inline ConstituentTree map_lexicon(const ConstituentTree& tree, const SynthGrammar& g, std::size_t from,
                                   std::size_t to) {
  TreeNode root = tree.root();
  for_each_leaf(root, [&](TreeNode& leaf) {
    auto it = g.lexicons[from].words.find(leaf.label);
    if (it == g.lexicons[from].words.end()) throw GrammarError("no lexicon entry for tag " + leaf.label);
    auto w = std::find(it->second.begin(), it->second.end(), *leaf.token);
    if (w == it->second.end()) throw GrammarError("word '" + *leaf.token + "' not in lexicon " + g.lexicons[from].language);
    leaf.token = g.lexicons[to].words.at(leaf.label)[static_cast<std::size_t>(w - it->second.begin())];
  });
  return ConstituentTree(std::move(root));
}

/// Writes side a, side b (one tree per line) and "index<TAB>i-j i-j ..." lines.
inline void write_corpus(const ParallelCorpus& corpus, std::ostream& a, std::ostream& b, std::ostream& align) {
  for (std::size_t i = 0; i < corpus.pairs.size(); ++i) {
    const auto& p = corpus.pairs[i];
    a << serialize(p.a) << '\n';
    b << serialize(p.b) << '\n';
    align << i << '\t';
    for (std::size_t k = 0; k < p.alignment.size(); ++k) {
      if (k > 0) align << ' ';
      align << p.alignment[k].first << '-' << p.alignment[k].second;
    }
    align << '\n';
  }
}

}  // namespace ordkit
