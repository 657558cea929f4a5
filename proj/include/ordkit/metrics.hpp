#pragma once

// Word-order change metrics between an original and a modified sentence.
//
//   inversion ratio     = #{i < j : pi[i] > pi[j]} / (n (n - 1) / 2)
//   word move distance  = sum_i |pi[i] - i| / n^2
//
// where pi[i] is the position in the modified sentence of the word at
// position i of the original. Words are identified by origin index, never
// by surface form.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "ordkit/treebank.hpp"

namespace ordkit {

class AlignmentError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct AlignedPermutation {
  std::vector<std::size_t> pi;

  std::size_t size() const noexcept { return pi.size(); }

  static AlignedPermutation identity(std::size_t n) {
    AlignedPermutation p;
    p.pi.resize(n);
    for (std::size_t i = 0; i < n; ++i) p.pi[i] = i;
    return p;
  }

  bool is_valid() const {
    std::vector<bool> seen(pi.size(), false);
    for (auto v : pi) {
      if (v >= pi.size() || seen[v]) return false;
      seen[v] = true;
    }
    return true;
  }

  friend bool operator==(const AlignedPermutation&, const AlignedPermutation&) = default;
};

/// Aligns by (surface, origin_index). pi[i] is the position in `modified` of
/// the token found at position i of `original`; when `original` is freshly
/// read its origin indices are 0..n-1, so pi is indexed by origin index.
inline AlignedPermutation alignment(const Sentence& original, const Sentence& modified) {
  if (original.empty()) throw AlignmentError("cannot align an empty sentence");
  std::unordered_map<std::size_t, std::size_t> position_of_origin;
  position_of_origin.reserve(modified.size());
  for (std::size_t j = 0; j < modified.size(); ++j) {
    if (!position_of_origin.emplace(modified.tokens[j].origin, j).second) {
      throw AlignmentError("modified sentence repeats origin index " +
                           std::to_string(modified.tokens[j].origin) + " (token '" +
                           modified.tokens[j].surface + "')");
    }
  }
  AlignedPermutation perm;
  perm.pi.reserve(original.size());
  for (const auto& tok : original.tokens) {
    auto it = position_of_origin.find(tok.origin);
    if (it == position_of_origin.end() || modified.tokens[it->second].surface != tok.surface) {
      throw AlignmentError("token '" + tok.surface + "' (origin " + std::to_string(tok.origin) +
                           ") missing from modified sentence");
    }
    perm.pi.push_back(it->second);
    position_of_origin.erase(it);
  }
  if (!position_of_origin.empty()) {
    const auto& extra = modified.tokens[position_of_origin.begin()->second];
    throw AlignmentError("modified sentence has extra token '" + extra.surface + "' (origin " +
                         std::to_string(extra.origin) + ")");
  }
  return perm;
}

/// Gives every token of `modified` the origin index of its counterpart in
/// `original`: the k-th occurrence of a word is matched to the k-th
/// occurrence. Used when only surface text is available.
inline Sentence align_by_occurrence(const Sentence& original, const Sentence& modified) {
  std::map<std::string, std::vector<std::size_t>> origins;
  for (const auto& t : original.tokens) origins[t.surface].push_back(t.origin);
  std::map<std::string, std::size_t> used;
  Sentence out = modified;
  for (auto& t : out.tokens) {
    auto it = origins.find(t.surface);
    std::size_t& k = used[t.surface];
    if (it == origins.end() || k >= it->second.size()) {
      throw AlignmentError("token '" + t.surface + "' of modified sentence not found in original");
    }
    t.origin = it->second[k++];
  }
  if (out.size() != original.size()) {
    for (const auto& [word, list] : origins) {
      if (used[word] < list.size()) {
        throw AlignmentError("token '" + word + "' of original sentence missing from modified");
      }
    }
  }
  return out;
}

namespace detail {

inline std::uint64_t count_inversions(std::vector<std::size_t>& v, std::vector<std::size_t>& buf,
                                      std::size_t lo, std::size_t hi) {
  if (hi - lo < 2) return 0;
  const std::size_t mid = lo + (hi - lo) / 2;
  std::uint64_t n = count_inversions(v, buf, lo, mid) + count_inversions(v, buf, mid, hi);
  std::size_t i = lo, j = mid, k = lo;
  while (i < mid && j < hi) {
    if (v[j] < v[i]) {
      n += mid - i;
      buf[k++] = v[j++];
    } else {
      buf[k++] = v[i++];
    }
  }
  while (i < mid) buf[k++] = v[i++];
  while (j < hi) buf[k++] = v[j++];
  std::copy(buf.begin() + static_cast<std::ptrdiff_t>(lo), buf.begin() + static_cast<std::ptrdiff_t>(hi),
            v.begin() + static_cast<std::ptrdiff_t>(lo));
  return n;
}

}  // namespace detail

/// Merge-sort count, O(n log n).
inline std::uint64_t inversion_count(const AlignedPermutation& perm) {
  std::vector<std::size_t> v = perm.pi;
  std::vector<std::size_t> buf(v.size());
  return detail::count_inversions(v, buf, 0, v.size());
}

/// 0 for n < 2.
inline double inversion_ratio(const AlignedPermutation& perm) {
  const std::size_t n = perm.size();
  if (n < 2) return 0.0;
  const double pairs = static_cast<double>(n) * static_cast<double>(n - 1) / 2.0;
  return static_cast<double>(inversion_count(perm)) / pairs;
}

inline std::uint64_t total_displacement(const AlignedPermutation& perm) {
  std::uint64_t d = 0;
  for (std::size_t i = 0; i < perm.pi.size(); ++i) {
    d += perm.pi[i] > i ? perm.pi[i] - i : i - perm.pi[i];
  }
  return d;
}

inline double word_move_distance(const AlignedPermutation& perm) {
  const std::size_t n = perm.size();
  if (n == 0) return 0.0;
  const double nn = static_cast<double>(n);
  return static_cast<double>(total_displacement(perm)) / (nn * nn);
}

struct CorpusStats {
  double mean_inversion_ratio = 0.0;
  double mean_word_move_distance = 0.0;
  std::size_t sentence_count = 0;
  std::size_t token_count = 0;
  std::size_t short_sentences = 0;  // n < 2, inversion ratio taken as 0
};

/// Streaming accumulator; each sentence weighs the same. merge() is the
/// monoid operation for sharded aggregation.
class CorpusAccumulator {
 public:
  void add(const AlignedPermutation& perm) {
    ir_sum_ += inversion_ratio(perm);
    wmd_sum_ += word_move_distance(perm);
    ++sentences_;
    tokens_ += perm.size();
    if (perm.size() < 2) ++short_;
  }

  void add(const Sentence& original, const Sentence& modified) {
    try {
      add(alignment(original, modified));
    } catch (const AlignmentError& e) {
      throw AlignmentError("sentence " + std::to_string(sentences_ + 1) + ": " + e.what());
    }
  }

  CorpusAccumulator& merge(const CorpusAccumulator& other) {
    ir_sum_ += other.ir_sum_;
    wmd_sum_ += other.wmd_sum_;
    sentences_ += other.sentences_;
    tokens_ += other.tokens_;
    short_ += other.short_;
    return *this;
  }

  CorpusStats stats() const {
    CorpusStats s;
    s.sentence_count = sentences_;
    s.token_count = tokens_;
    s.short_sentences = short_;
    if (sentences_ > 0) {
      s.mean_inversion_ratio = ir_sum_ / static_cast<double>(sentences_);
      s.mean_word_move_distance = wmd_sum_ / static_cast<double>(sentences_);
    }
    return s;
  }

 private:
  double ir_sum_ = 0.0;
  double wmd_sum_ = 0.0;
  std::size_t sentences_ = 0;
  std::size_t tokens_ = 0;
  std::size_t short_ = 0;
};

/// Pairs must be ranges of (original, modified) Sentence pairs.
template <typename Pairs>
CorpusStats corpus_stats(const Pairs& pairs) {
  CorpusAccumulator acc;
  for (const auto& [original, modified] : pairs) acc.add(original, modified);
  return acc.stats();
}

/// Tab-separated table, one row per source type, percentages to two places.
inline void write_stats_report(std::ostream& out, const std::vector<std::pair<std::string, CorpusStats>>& rows) {
  out << "source_type\tinversion_ratio_pct\tword_move_distance_pct\tsentences\ttokens\tshort_sentences\n";
  for (const auto& [name, s] : rows) {
    std::ostringstream line;
    line << std::fixed << std::setprecision(2) << name << '\t' << s.mean_inversion_ratio * 100.0 << '\t'
         << s.mean_word_move_distance * 100.0 << '\t' << s.sentence_count << '\t' << s.token_count << '\t'
         << s.short_sentences << '\n';
    out << line.str();
  }
}

}  // namespace ordkit
