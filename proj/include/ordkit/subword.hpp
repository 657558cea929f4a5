#pragma once

// Byte-pair encoding vocabularies and masked-LM input corruption.
//
// Words are whitespace-separated and split into UTF-8 characters; the last
// character of every word carries the end-of-word marker ("low" becomes
// l o w</w>). Merges are learned greedily, most frequent adjacent pair
// first, ties going to the lexicographically smallest pair.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "ordkit/random.hpp"

namespace ordkit {

using TokenId = std::int32_t;
using SymbolPair = std::pair<std::string, std::string>;

class BpeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Split into UTF-8 code points. Malformed bytes become one-byte symbols.
inline std::vector<std::string> utf8_chars(std::string_view s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    const auto c = static_cast<unsigned char>(s[i]);
    std::size_t len = 1;
    if (c >= 0xF0 && c < 0xF8) {
      len = 4;
    } else if (c >= 0xE0) {
      len = c < 0xF0 ? 3 : 1;
    } else if (c >= 0xC0) {
      len = 2;
    }
    if (i + len > s.size()) len = 1;
    for (std::size_t k = 1; k < len; ++k) {
      if ((static_cast<unsigned char>(s[i + k]) & 0xC0) != 0x80) {
        len = 1;
        break;
      }
    }
    out.emplace_back(s.substr(i, len));
    i += len;
  }
  return out;
}

inline std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> words;
  std::istringstream in{std::string(text)};
  for (std::string w; in >> w;) words.push_back(std::move(w));
  return words;
}

struct SpecialTokens {
  std::string pad = "[PAD]";
  std::string unk = "[UNK]";
  std::string cls = "[CLS]";
  std::string sep = "[SEP]";
  std::string mask = "[MASK]";

  friend bool operator==(const SpecialTokens&, const SpecialTokens&) = default;
};

class BpeModel {
 public:
  static constexpr TokenId kPadId = 0;
  static constexpr TokenId kUnkId = 1;
  static constexpr TokenId kClsId = 2;
  static constexpr TokenId kSepId = 3;
  static constexpr TokenId kMaskId = 4;
  static constexpr TokenId kEndOfWordId = 5;
  // Ids below this are never produced by masking or random replacement.
  static constexpr TokenId kReservedCount = 6;

  BpeModel() = default;

  /// Builds the vocabulary: specials, the end-of-word marker, each alphabet
  /// character in its inner and word-final form, then one symbol per merge.
  BpeModel(std::string language, std::vector<std::string> alphabet, std::vector<SymbolPair> merges,
           SpecialTokens specials = {}, std::string end_of_word = "</w>")
      : language_(std::move(language)),
        end_of_word_(std::move(end_of_word)),
        specials_(std::move(specials)),
        alphabet_(std::move(alphabet)),
        merges_(std::move(merges)) {
    std::sort(alphabet_.begin(), alphabet_.end());
    alphabet_.erase(std::unique(alphabet_.begin(), alphabet_.end()), alphabet_.end());
    for (const auto& s : {specials_.pad, specials_.unk, specials_.cls, specials_.sep, specials_.mask, end_of_word_}) {
      add_symbol(s, true);
    }
    for (const auto& c : alphabet_) {
      add_symbol(c, false);
      add_symbol(c + end_of_word_, false);
    }
    for (std::size_t r = 0; r < merges_.size(); ++r) {
      const auto& [a, b] = merges_[r];
      if (!vocab_.contains(a) || !vocab_.contains(b)) {
        throw BpeError("merge " + std::to_string(r) + " (" + a + " " + b + ") uses an unknown symbol");
      }
      add_symbol(a + b, false);
      ranks_.emplace(merges_[r], r);
    }
  }

  static std::size_t initial_size(std::size_t alphabet_size) {
    return static_cast<std::size_t>(kReservedCount) + 2 * alphabet_size;
  }

  const std::string& language() const noexcept { return language_; }
  const std::string& end_of_word() const noexcept { return end_of_word_; }
  const SpecialTokens& specials() const noexcept { return specials_; }
  const std::vector<std::string>& alphabet() const noexcept { return alphabet_; }
  const std::vector<SymbolPair>& merges() const noexcept { return merges_; }
  const std::vector<std::string>& symbols() const noexcept { return symbols_; }
  std::size_t vocab_size() const noexcept { return symbols_.size(); }

  TokenId id_of(const std::string& symbol) const {
    auto it = vocab_.find(symbol);
    return it == vocab_.end() ? kUnkId : it->second;
  }

  bool contains(const std::string& symbol) const { return vocab_.contains(symbol); }
  const std::string& symbol(TokenId id) const { return symbols_.at(static_cast<std::size_t>(id)); }

  /// Segments one word by repeatedly merging the lowest-ranked adjacent pair.
  std::vector<std::string> segment_word(std::string_view word) const {
    std::vector<std::string> syms = utf8_chars(word);
    if (syms.empty()) return syms;
    syms.back() += end_of_word_;
    for (;;) {
      std::size_t best_rank = merges_.size();
      for (std::size_t i = 0; i + 1 < syms.size(); ++i) {
        auto it = ranks_.find(SymbolPair{syms[i], syms[i + 1]});
        if (it != ranks_.end() && it->second < best_rank) best_rank = it->second;
      }
      if (best_rank == merges_.size()) break;
      syms = merge_pair(syms, merges_[best_rank]);
    }
    return syms;
  }

  /// Unknown word-final symbols emit [UNK] followed by the end-of-word id so
  /// word boundaries survive decoding.
  std::vector<TokenId> encode(std::string_view text) const {
    std::vector<TokenId> ids;
    for (const auto& word : split_words(text)) {
      for (const auto& s : segment_word(word)) {
        auto it = vocab_.find(s);
        if (it != vocab_.end()) {
          ids.push_back(it->second);
        } else {
          ids.push_back(kUnkId);
          if (s.ends_with(end_of_word_)) ids.push_back(kEndOfWordId);
        }
      }
    }
    return ids;
  }

  std::string decode(std::span<const TokenId> ids) const {
    std::string out;
    std::string word;
    auto flush = [&] {
      if (word.empty()) return;
      if (!out.empty()) out += ' ';
      out += word;
      word.clear();
    };
    for (TokenId id : ids) {
      if (id < 0 || static_cast<std::size_t>(id) >= symbols_.size()) {
        throw BpeError("token id " + std::to_string(id) + " outside vocabulary");
      }
      if (id == kEndOfWordId) {
        flush();
      } else if (id < kReservedCount) {
        word += symbols_[static_cast<std::size_t>(id)];
      } else {
        const std::string& s = symbols_[static_cast<std::size_t>(id)];
        if (s.ends_with(end_of_word_)) {
          word.append(s, 0, s.size() - end_of_word_.size());
          flush();
        } else {
          word += s;
        }
      }
    }
    flush();
    return out;
  }

  static std::vector<std::string> merge_pair(const std::vector<std::string>& syms, const SymbolPair& pair) {
    std::vector<std::string> out;
    out.reserve(syms.size());
    for (std::size_t i = 0; i < syms.size();) {
      if (i + 1 < syms.size() && syms[i] == pair.first && syms[i + 1] == pair.second) {
        out.push_back(syms[i] + syms[i + 1]);
        i += 2;
      } else {
        out.push_back(syms[i]);
        ++i;
      }
    }
    return out;
  }

  void write(std::ostream& out) const {
    out << "ordkit-bpe 1\n";
    out << "language " << language_ << '\n';
    out << "end_of_word " << end_of_word_ << '\n';
    out << "specials " << specials_.pad << ' ' << specials_.unk << ' ' << specials_.cls << ' ' << specials_.sep
        << ' ' << specials_.mask << '\n';
    out << "vocab_size " << symbols_.size() << '\n';
    out << "alphabet " << alphabet_.size() << '\n';
    for (const auto& c : alphabet_) out << c << '\n';
    out << "merges " << merges_.size() << '\n';
    for (const auto& [a, b] : merges_) out << a << ' ' << b << '\n';
  }

  static BpeModel read(std::istream& in) {
    std::string line;
    auto expect = [&](std::string_view key) {
      if (!std::getline(in, line) || !line.starts_with(key)) {
        throw BpeError("model file: expected '" + std::string(key) + "'");
      }
      return line.size() > key.size() ? line.substr(key.size() + 1) : std::string();
    };
    if (expect("ordkit-bpe") != "1") throw BpeError("model file: unsupported version");
    std::string language = expect("language");
    std::string eow = expect("end_of_word");
    std::istringstream sp(expect("specials"));
    SpecialTokens specials;
    if (!(sp >> specials.pad >> specials.unk >> specials.cls >> specials.sep >> specials.mask)) {
      throw BpeError("model file: malformed specials line");
    }
    const std::size_t declared = std::stoull(expect("vocab_size"));
    const std::size_t n_alpha = std::stoull(expect("alphabet"));
    std::vector<std::string> alphabet(n_alpha);
    for (auto& c : alphabet) {
      if (!std::getline(in, c) || c.empty()) throw BpeError("model file: truncated alphabet");
    }
    const std::size_t n_merges = std::stoull(expect("merges"));
    std::vector<SymbolPair> merges;
    merges.reserve(n_merges);
    for (std::size_t i = 0; i < n_merges; ++i) {
      if (!std::getline(in, line)) throw BpeError("model file: truncated merges");
      std::istringstream ms(line);
      SymbolPair p;
      if (!(ms >> p.first >> p.second)) throw BpeError("model file: malformed merge line " + line);
      merges.push_back(std::move(p));
    }
    BpeModel model(std::move(language), std::move(alphabet), std::move(merges), std::move(specials), std::move(eow));
    if (model.vocab_size() != declared) throw BpeError("model file: vocab_size does not match contents");
    return model;
  }

 private:
  void add_symbol(const std::string& s, bool reserved) {
    if (vocab_.contains(s)) {
      if (reserved) throw BpeError("duplicate reserved symbol '" + s + "'");
      return;
    }
    vocab_.emplace(s, static_cast<TokenId>(symbols_.size()));
    symbols_.push_back(s);
  }

  struct PairHash {
    std::size_t operator()(const SymbolPair& p) const noexcept {
      const std::size_t h = std::hash<std::string>{}(p.first);
      return h ^ (std::hash<std::string>{}(p.second) + 0x9E3779B97F4A7C15ULL + (h << 6) + (h >> 2));
    }
  };

  std::string language_;
  std::string end_of_word_ = "</w>";
  SpecialTokens specials_;
  std::vector<std::string> alphabet_;
  std::vector<SymbolPair> merges_;
  std::vector<std::string> symbols_;
  std::unordered_map<std::string, TokenId> vocab_;
  std::unordered_map<SymbolPair, std::size_t, PairHash> ranks_;
};

namespace detail {

class PairCounter {
 public:
  void adjust(const SymbolPair& p, std::int64_t delta, std::size_t word) {
    auto& count = counts_[p];
    if (count > 0) queue_.erase({count, p});
    count += delta;
    if (count > 0) queue_.insert({count, p});
    if (delta > 0) where_[p].insert(word);
  }

  // Highest count, then smallest pair.
  const std::pair<std::int64_t, SymbolPair>* best() const {
    return queue_.empty() ? nullptr : &*queue_.begin();
  }

  std::vector<std::size_t> words_with(const SymbolPair& p) const {
    auto it = where_.find(p);
    if (it == where_.end()) return {};
    return {it->second.begin(), it->second.end()};
  }

 private:
  struct Order {
    bool operator()(const std::pair<std::int64_t, SymbolPair>& a,
                    const std::pair<std::int64_t, SymbolPair>& b) const {
      if (a.first != b.first) return a.first > b.first;
      return a.second < b.second;
    }
  };

  std::map<SymbolPair, std::int64_t> counts_;
  std::map<SymbolPair, std::set<std::size_t>> where_;  // may hold stale entries
  std::set<std::pair<std::int64_t, SymbolPair>, Order> queue_;
};

}  // namespace detail

/// Learns merges until the vocabulary reaches vocab_size or no adjacent pair
/// occurs at least twice. Pair counts include overlapping occurrences; a
/// merge rewrites occurrences left to right.
inline BpeModel bpe_learn(const std::vector<std::string>& corpus_lines, std::size_t vocab_size,
                          std::string language = "und") {
  std::map<std::string, std::int64_t> word_freq;
  for (const auto& line : corpus_lines) {
    for (auto& w : split_words(line)) ++word_freq[w];
  }
  if (word_freq.empty()) throw BpeError("cannot learn BPE from an empty corpus");

  std::set<std::string> alphabet;
  std::vector<std::vector<std::string>> words;
  std::vector<std::int64_t> freqs;
  const std::string eow = "</w>";
  for (const auto& [w, f] : word_freq) {
    auto chars = utf8_chars(w);
    alphabet.insert(chars.begin(), chars.end());
    chars.back() += eow;
    words.push_back(std::move(chars));
    freqs.push_back(f);
  }
  const std::size_t minimum = BpeModel::initial_size(alphabet.size());
  if (vocab_size < minimum) {
    throw BpeError("vocab_size " + std::to_string(vocab_size) + " is too small; the minimum for this corpus is " +
                   std::to_string(minimum) + " (" + std::to_string(BpeModel::kReservedCount) +
                   " reserved symbols + 2 x " + std::to_string(alphabet.size()) + " characters)");
  }

  detail::PairCounter counter;
  for (std::size_t w = 0; w < words.size(); ++w) {
    for (std::size_t i = 0; i + 1 < words[w].size(); ++i) counter.adjust({words[w][i], words[w][i + 1]}, freqs[w], w);
  }

  std::set<std::string> known;
  for (const auto& c : alphabet) {
    known.insert(c);
    known.insert(c + eow);
  }
  std::size_t size = minimum;
  std::vector<SymbolPair> merges;
  while (size < vocab_size) {
    const auto* top = counter.best();
    if (top == nullptr || top->first < 2) break;
    const SymbolPair pair = top->second;
    merges.push_back(pair);
    if (known.insert(pair.first + pair.second).second) ++size;
    for (std::size_t w : counter.words_with(pair)) {
      auto& syms = words[w];
      bool present = false;
      for (std::size_t i = 0; i + 1 < syms.size() && !present; ++i) {
        present = syms[i] == pair.first && syms[i + 1] == pair.second;
      }
      if (!present) continue;
      for (std::size_t i = 0; i + 1 < syms.size(); ++i) counter.adjust({syms[i], syms[i + 1]}, -freqs[w], w);
      syms = BpeModel::merge_pair(syms, pair);
      for (std::size_t i = 0; i + 1 < syms.size(); ++i) counter.adjust({syms[i], syms[i + 1]}, freqs[w], w);
    }
  }
  return BpeModel(std::move(language), {alphabet.begin(), alphabet.end()}, std::move(merges));
}

struct MaskingConfig {
  double mask_rate = 0.15;
  double replace_mask = 0.8;
  double keep_original = 0.1;
  double replace_random = 0.1;
  std::uint64_t seed = 0;

  void validate() const {
    auto in_unit = [](double x) { return x >= 0.0 && x <= 1.0; };
    if (!in_unit(mask_rate) || !in_unit(replace_mask) || !in_unit(keep_original) || !in_unit(replace_random)) {
      throw std::invalid_argument("masking fractions must lie in [0, 1]");
    }
    const double total = replace_mask + keep_original + replace_random;
    if (total < 1.0 - 1e-9 || total > 1.0 + 1e-9) {
      throw std::invalid_argument("replace_mask + keep_original + replace_random must equal 1");
    }
  }
};

struct MaskedSequence {
  std::vector<TokenId> ids;
  std::vector<TokenId> labels;  // 0 where not selected, else the original id
};

/// Selects each non-reserved position with probability mask_rate; selected
/// positions become [MASK], stay, or become a uniformly drawn non-reserved
/// id in the configured proportions.
inline MaskedSequence mask_tokens(std::span<const TokenId> ids, const MaskingConfig& config,
                                  std::size_t vocab_size, std::uint64_t sentence_index = 0,
                                  TokenId reserved = BpeModel::kReservedCount,
                                  TokenId mask_id = BpeModel::kMaskId) {
  config.validate();
  if (vocab_size <= static_cast<std::size_t>(reserved)) {
    throw std::invalid_argument("vocab_size must exceed the reserved id count");
  }
  MaskedSequence out{{ids.begin(), ids.end()}, std::vector<TokenId>(ids.size(), 0)};
  Rng rng(SeedScheme{config.seed, sentence_index});
  const auto random_span = static_cast<std::uint64_t>(vocab_size) - static_cast<std::uint64_t>(reserved);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < reserved) continue;
    if (rng.uniform01() >= config.mask_rate) continue;
    out.labels[i] = ids[i];
    const double u = rng.uniform01();
    if (u < config.replace_mask) {
      out.ids[i] = mask_id;
    } else if (u >= config.replace_mask + config.keep_original) {
      out.ids[i] = reserved + static_cast<TokenId>(rng.uniform(random_span));
    }
  }
  return out;
}

}  // namespace ordkit
