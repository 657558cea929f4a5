#pragma once

// Streaming corpus pipelines behind the command-line tool.
//
// Trees are read in chunks, parsed and transformed by a worker pool and
// written back in input order. Sentence k (0-based, counting successfully
// parsed trees) always uses SeedScheme{seed, k}, and chain step s draws from
// SeedScheme{seed, k}.for_step(s), so output never depends on the worker count.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "ordkit/metrics.hpp"
#include "ordkit/parallel.hpp"
#include "ordkit/random.hpp"
#include "ordkit/transform.hpp"
#include "ordkit/treebank.hpp"

namespace ordkit {

class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct ReorderStep {
  ReorderRule rule;
};
struct ConstituentShuffleStep {
  bool include_root = true;
};
struct WordShuffleStep {};
struct AblateStep {
  double alpha = 0.0;
  bool shuffle_after = false;
};

using ChainStep = std::variant<ReorderStep, ConstituentShuffleStep, WordShuffleStep, AblateStep>;

inline std::string describe(const ChainStep& step) {
  struct {
    std::string operator()(const ReorderStep& s) const { return "reorder:" + s.rule.feature_id; }
    std::string operator()(const ConstituentShuffleStep& s) const {
      return s.include_root ? "constituent_shuffle" : "constituent_shuffle:noroot";
    }
    std::string operator()(const WordShuffleStep&) const { return "word_shuffle"; }
    std::string operator()(const AblateStep& s) const {
      std::ostringstream o;
      o << "ablate:" << s.alpha << (s.shuffle_after ? ":shuffle" : "");
      return o.str();
    }
  } visitor;
  return std::visit(visitor, step);
}

inline std::string describe(const std::vector<ChainStep>& chain) {
  std::string out;
  for (const auto& s : chain) {
    if (!out.empty()) out += ',';
    out += describe(s);
  }
  return out;
}

/// Comma-separated steps:
///   reorder:FEATURE[:inverse]   built-in 83A/85A/87A or a rule from `custom`
///   constituent_shuffle[:noroot]
///   word_shuffle                (must be last)
///   ablate:ALPHA[:shuffle]
inline std::vector<ChainStep> parse_chain(std::string_view text, const std::vector<ReorderRule>& custom = {}) {
  std::vector<ChainStep> chain;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto comma = text.find(',', start);
    if (comma == std::string_view::npos) comma = text.size();
    std::string item(text.substr(start, comma - start));
    start = comma + 1;
    while (!item.empty() && item.back() == ' ') item.pop_back();
    while (!item.empty() && item.front() == ' ') item.erase(item.begin());
    if (item.empty()) {
      if (comma == text.size()) break;
      throw UsageError("empty step in chain '" + std::string(text) + "'");
    }
    std::vector<std::string> parts;
    for (std::size_t p = 0;;) {
      auto colon = item.find(':', p);
      parts.push_back(item.substr(p, colon == std::string::npos ? std::string::npos : colon - p));
      if (colon == std::string::npos) break;
      p = colon + 1;
    }
    const std::string& op = parts[0];
    if (op == "reorder") {
      if (parts.size() < 2 || parts.size() > 3 || (parts.size() == 3 && parts[2] != "inverse")) {
        throw UsageError("expected reorder:FEATURE[:inverse], got '" + item + "'");
      }
      std::optional<ReorderRule> rule;
      for (const auto& r : custom) {
        if (r.feature_id == parts[1]) rule = r;
      }
      if (!rule) {
        try {
          rule = builtin_rule(parts[1]);
        } catch (const RuleError&) {
          throw UsageError("unknown reorder feature '" + parts[1] + "'");
        }
      }
      chain.emplace_back(ReorderStep{parts.size() == 3 ? inverse_rule(*rule) : *rule});
    } else if (op == "constituent_shuffle") {
      if (parts.size() > 2 || (parts.size() == 2 && parts[1] != "noroot")) {
        throw UsageError("expected constituent_shuffle[:noroot], got '" + item + "'");
      }
      chain.emplace_back(ConstituentShuffleStep{parts.size() == 1});
    } else if (op == "word_shuffle") {
      if (parts.size() != 1) throw UsageError("word_shuffle takes no arguments");
      chain.emplace_back(WordShuffleStep{});
    } else if (op == "ablate") {
      if (parts.size() < 2 || parts.size() > 3 || (parts.size() == 3 && parts[2] != "shuffle")) {
        throw UsageError("expected ablate:ALPHA[:shuffle], got '" + item + "'");
      }
      AblateStep s;
      try {
        std::size_t used = 0;
        s.alpha = std::stod(parts[1], &used);
        if (used != parts[1].size()) throw std::invalid_argument("trailing");
      } catch (const std::logic_error&) {
        throw UsageError("bad ablation ratio '" + parts[1] + "'");
      }
      if (!(s.alpha >= 0.0 && s.alpha <= 1.0)) throw UsageError("ablation ratio must lie in [0, 1]");
      s.shuffle_after = parts.size() == 3;
      chain.emplace_back(s);
    } else {
      throw UsageError("unknown chain step '" + op + "'");
    }
  }
  if (chain.empty()) throw UsageError("transformation chain is empty");
  for (std::size_t i = 0; i + 1 < chain.size(); ++i) {
    if (std::holds_alternative<WordShuffleStep>(chain[i])) {
      throw UsageError("word_shuffle discards the tree and must be the last step");
    }
  }
  return chain;
}

struct TransformedSentence {
  std::optional<ConstituentTree> tree;  // empty once word_shuffle ran
  Sentence sentence;
};

inline TransformedSentence apply_chain(const ConstituentTree& input, const std::vector<ChainStep>& chain,
                                       std::uint64_t global_seed, std::uint64_t sentence_index) {
  const SeedScheme base{global_seed, sentence_index};
  ConstituentTree tree = input;
  for (std::size_t k = 0; k < chain.size(); ++k) {
    const SeedScheme seed = base.for_step(k);
    const auto& step = chain[k];
    if (const auto* r = std::get_if<ReorderStep>(&step)) {
      tree = apply_reorder(tree, r->rule);
    } else if (const auto* c = std::get_if<ConstituentShuffleStep>(&step)) {
      tree = constituent_shuffle(tree, seed, {c->include_root});
    } else if (const auto* a = std::get_if<AblateStep>(&step)) {
      tree = remove_composition(tree, {a->alpha, a->shuffle_after, seed.global_seed}, sentence_index);
    } else {
      return {std::nullopt, word_shuffle(yield_sentence(tree), seed)};
    }
  }
  Sentence s = yield_sentence(tree);
  return {std::move(tree), std::move(s)};
}

struct TransformConfig {
  std::vector<ChainStep> chain;
  std::uint64_t seed = 0;
  unsigned workers = 1;
  bool skip_bad = false;
  std::size_t chunk_size = 4096;
};

struct TransformSinks {
  std::ostream* sentences = nullptr;  // tokens space-joined
  std::ostream* trees = nullptr;
  std::ostream* origins = nullptr;    // origin index of each output token
};

struct TransformSummary {
  std::size_t sentences = 0;
  std::size_t skipped_empty = 0;
  std::vector<TreebankReader::BadLine> bad_lines;
  CorpusAccumulator metrics;  // each output sentence against its input
};

namespace detail {

struct RawLine {
  std::size_t line_number;
  std::string text;
};

}  // namespace detail

/// Runs the chain over every tree of `in`. Parse failures throw a
/// ParseError naming `source_name` and the line, unless skip_bad is set.
inline TransformSummary run_transform(std::istream& in, const TransformConfig& config, const TransformSinks& sinks,
                                      const std::string& source_name = "<input>",
                                      std::uint64_t first_sentence_index = 0) {
  if (config.chain.empty()) throw UsageError("transformation chain is empty");
  if (sinks.trees != nullptr && std::holds_alternative<WordShuffleStep>(config.chain.back())) {
    throw UsageError("tree output is unavailable after word_shuffle");
  }
  TransformSummary summary;
  std::uint64_t next_index = first_sentence_index;
  std::size_t line_number = 0;
  const std::size_t chunk = std::max<std::size_t>(1, config.chunk_size);

  for (bool more = true; more;) {
    std::vector<detail::RawLine> raw;
    std::string line;
    while (raw.size() < chunk && (more = static_cast<bool>(std::getline(in, line)))) {
      ++line_number;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (is_empty_tree_line(line)) {
        ++summary.skipped_empty;
        continue;
      }
      raw.push_back({line_number, std::move(line)});
    }
    if (raw.empty()) continue;

    std::vector<std::optional<ConstituentTree>> parsed(raw.size());
    std::vector<std::string> errors(raw.size());
    parallel_for(raw.size(), config.workers, [&](std::size_t i) {
      try {
        parsed[i] = parse_ptb(raw[i].text);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    });

    std::vector<std::size_t> good;
    for (std::size_t i = 0; i < raw.size(); ++i) {
      if (parsed[i]) {
        good.push_back(i);
        continue;
      }
      const std::string where = source_name + ":" + std::to_string(raw[i].line_number);
      if (!config.skip_bad) throw ParseError(0, where + ": " + errors[i]);
      summary.bad_lines.push_back({raw[i].line_number, errors[i]});
    }

    std::vector<TransformedSentence> out(good.size());
    std::vector<AlignedPermutation> perms(good.size());
    parallel_for(good.size(), config.workers, [&](std::size_t g) {
      const auto& tree = *parsed[good[g]];
      out[g] = apply_chain(tree, config.chain, config.seed, next_index + g);
      perms[g] = alignment(yield_sentence(tree), out[g].sentence);
    });

    for (std::size_t g = 0; g < good.size(); ++g) {
      if (sinks.sentences) *sinks.sentences << out[g].sentence.text() << '\n';
      if (sinks.trees) *sinks.trees << serialize(*out[g].tree) << '\n';
      if (sinks.origins) {
        const auto& toks = out[g].sentence.tokens;
        for (std::size_t t = 0; t < toks.size(); ++t) *sinks.origins << (t ? " " : "") << toks[t].origin;
        *sinks.origins << '\n';
      }
      summary.metrics.add(perms[g]);
    }
    next_index += good.size();
    summary.sentences += good.size();
  }
  return summary;
}

/// Compares two line-aligned sentence files. Without origin annotations the
/// k-th occurrence of a word in a modified line is matched to its k-th
/// occurrence in the original line.
inline CorpusStats run_stats(std::istream& original, std::istream& modified, std::istream* origins = nullptr) {
  CorpusAccumulator acc;
  std::string a, b, o;
  std::size_t line = 0;
  for (;;) {
    const bool has_a = static_cast<bool>(std::getline(original, a));
    const bool has_b = static_cast<bool>(std::getline(modified, b));
    ++line;
    if (!has_a && !has_b) break;
    if (has_a != has_b) {
      throw AlignmentError("line " + std::to_string(line) + ": " + (has_a ? "modified" : "original") +
                           " file ended early");
    }
    const Sentence orig = sentence_from_text(a);
    if (orig.empty() && sentence_from_text(b).empty()) {
      if (origins != nullptr) std::getline(*origins, o);
      continue;
    }
    try {
      Sentence mod = sentence_from_text(b);
      if (origins != nullptr) {
        if (!std::getline(*origins, o)) throw AlignmentError("origins file ended early");
        std::istringstream ids(o);
        std::size_t t = 0;
        for (std::size_t v; ids >> v; ++t) {
          if (t >= mod.size()) throw AlignmentError("more origin indices than tokens");
          mod.tokens[t].origin = v;
        }
        if (t != mod.size()) throw AlignmentError("fewer origin indices than tokens");
      } else {
        mod = align_by_occurrence(orig, mod);
      }
      acc.add(alignment(orig, mod));
    } catch (const AlignmentError& e) {
      throw AlignmentError("line " + std::to_string(line) + ": " + e.what());
    }
  }
  return acc.stats();
}

}  // namespace ordkit
