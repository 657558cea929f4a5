#pragma once

// Sentence retrieval over exported token embeddings: mean pooling that skips
// special tokens, then cosine nearest neighbour from source to target.
// Binary layouts are described in docs/formats.md.

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ordkit/parallel.hpp"

namespace ordkit {

class RetrievalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using Vector = std::vector<double>;

struct SentenceEmbedding {
  std::size_t tokens = 0;
  std::vector<float> values;         // tokens x dim, row-major
  std::vector<std::uint8_t> special;  // one flag per token

  std::span<const float> token(std::size_t t, std::size_t dim) const {
    return std::span<const float>(values).subspan(t * dim, dim);
  }
};

struct EmbeddingMatrix {
  std::size_t dim = 0;
  std::string layer;  // free-form tag from the exporter, e.g. "8"
  std::vector<SentenceEmbedding> sentences;

  std::size_t rows() const noexcept { return sentences.size(); }
};

/// Mean of the non-special token vectors.
inline Vector mean_pool(const SentenceEmbedding& s, std::size_t dim) {
  if (s.values.size() != s.tokens * dim || s.special.size() != s.tokens) {
    throw RetrievalError("sentence embedding shape does not match its token count");
  }
  Vector sum(dim, 0.0);
  std::size_t used = 0;
  for (std::size_t t = 0; t < s.tokens; ++t) {
    if (s.special[t]) continue;
    auto v = s.token(t, dim);
    for (std::size_t k = 0; k < dim; ++k) sum[k] += v[k];
    ++used;
  }
  if (used == 0) throw RetrievalError("every token of the sentence is special; nothing to pool");
  for (auto& x : sum) x /= static_cast<double>(used);
  return sum;
}

inline std::vector<Vector> mean_pool(const EmbeddingMatrix& m) {
  std::vector<Vector> out;
  out.reserve(m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    try {
      out.push_back(mean_pool(m.sentences[i], m.dim));
    } catch (const RetrievalError& e) {
      throw RetrievalError("row " + std::to_string(i) + ": " + e.what());
    }
  }
  return out;
}

struct RetrievalResult {
  double top1_accuracy = 0.0;
  std::vector<std::size_t> nearest;  // per source row
  double margin = 0.0;               // mean (best - second best) cosine
  std::size_t ties = 0;              // queries whose best cosine was shared
};

namespace detail {

inline std::vector<Vector> unit_rows(const std::vector<Vector>& rows, const char* side) {
  std::vector<Vector> out;
  out.reserve(rows.size());
  const std::size_t dim = rows.empty() ? 0 : rows.front().size();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != dim || dim == 0) {
      throw RetrievalError(std::string(side) + " row " + std::to_string(i) + " has the wrong dimension");
    }
    double norm = 0.0;
    for (double x : rows[i]) norm += x * x;
    norm = std::sqrt(norm);
    if (!(norm > 0.0)) throw RetrievalError(std::string(side) + " row " + std::to_string(i) + " has zero norm");
    Vector u(rows[i]);
    for (auto& x : u) x /= norm;
    out.push_back(std::move(u));
  }
  return out;
}

}  // namespace detail

/// Source row i is correct when its cosine nearest target row is i. Equal
/// cosines resolve to the lowest target index.
inline RetrievalResult top1_retrieval(const std::vector<Vector>& source, const std::vector<Vector>& target,
                                      unsigned workers = 1) {
  if (source.empty()) throw RetrievalError("no sentences to retrieve");
  if (source.size() != target.size()) {
    throw RetrievalError("source has " + std::to_string(source.size()) + " rows but target has " +
                         std::to_string(target.size()));
  }
  const auto src = detail::unit_rows(source, "source");
  const auto tgt = detail::unit_rows(target, "target");
  if (src.front().size() != tgt.front().size()) throw RetrievalError("source and target dimensions differ");

  const std::size_t n = src.size();
  RetrievalResult result;
  result.nearest.assign(n, 0);
  std::vector<double> gap(n, 0.0);
  std::vector<std::uint8_t> tied(n, 0);

  auto query = [&](std::size_t i) {
    double best = -2.0, second = -2.0;
    std::size_t arg = 0;
    for (std::size_t j = 0; j < n; ++j) {
      double c = 0.0;
      for (std::size_t k = 0; k < src[i].size(); ++k) c += src[i][k] * tgt[j][k];
      if (c > best) {
        second = best;
        best = c;
        arg = j;
        tied[i] = 0;
      } else {
        if (c == best) tied[i] = 1;
        second = std::max(second, c);
      }
    }
    result.nearest[i] = arg;
    gap[i] = n > 1 ? best - second : 0.0;
  };

  parallel_for(n, n < 64 ? 1u : workers, query);

  std::size_t correct = 0;
  double gap_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    correct += result.nearest[i] == i;
    gap_sum += gap[i];
    result.ties += tied[i];
  }
  result.top1_accuracy = static_cast<double>(correct) / static_cast<double>(n);
  result.margin = gap_sum / static_cast<double>(n);
  return result;
}

// ---------------------------------------------------------------------------
// Binary embedding files (little-endian).

namespace detail {

inline constexpr char kEmbeddingMagic[4] = {'O', 'K', 'E', 'M'};
inline constexpr std::uint32_t kEmbeddingVersion = 1;

template <typename T>
void put(std::ostream& out, T v) {
  if constexpr (std::endian::native == std::endian::big && sizeof(T) > 1) {
    auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(v);
    std::reverse(bytes.begin(), bytes.end());
    out.write(reinterpret_cast<const char*>(bytes.data()), sizeof(T));
  } else {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
  }
}

template <typename T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw RetrievalError("embedding file truncated");
  if constexpr (std::endian::native == std::endian::big && sizeof(T) > 1) {
    auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(v);
    std::reverse(bytes.begin(), bytes.end());
    v = std::bit_cast<T>(bytes);
  }
  return v;
}

inline void write_header(std::ostream& out, std::uint32_t kind, std::uint64_t rows, std::uint64_t max_tokens,
                         std::uint64_t dim, const std::string& layer) {
  out.write(kEmbeddingMagic, 4);
  put<std::uint32_t>(out, kEmbeddingVersion);
  put<std::uint32_t>(out, kind);
  put<std::uint64_t>(out, rows);
  put<std::uint64_t>(out, max_tokens);
  put<std::uint64_t>(out, dim);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(layer.size()));
  out.write(layer.data(), static_cast<std::streamsize>(layer.size()));
}

}  // namespace detail

enum class EmbeddingKind : std::uint32_t { kTokens = 0, kPooled = 1 };

inline void write_embeddings(std::ostream& out, const EmbeddingMatrix& m) {
  std::size_t max_tokens = 0;
  for (const auto& s : m.sentences) max_tokens = std::max(max_tokens, s.tokens);
  detail::write_header(out, static_cast<std::uint32_t>(EmbeddingKind::kTokens), m.rows(), max_tokens, m.dim, m.layer);
  for (const auto& s : m.sentences) {
    detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(s.tokens));
    for (auto f : s.special) detail::put<std::uint8_t>(out, f ? 1 : 0);
    for (float v : s.values) detail::put<float>(out, v);
  }
}

inline void write_pooled(std::ostream& out, const std::vector<Vector>& rows, const std::string& layer = {}) {
  const std::size_t dim = rows.empty() ? 0 : rows.front().size();
  detail::write_header(out, static_cast<std::uint32_t>(EmbeddingKind::kPooled), rows.size(), 1, dim, layer);
  for (const auto& r : rows) {
    if (r.size() != dim) throw RetrievalError("pooled rows differ in dimension");
    for (double v : r) detail::put<float>(out, static_cast<float>(v));
  }
}

/// Reads either layout; token-level files are mean-pooled.
struct LoadedEmbeddings {
  EmbeddingKind kind = EmbeddingKind::kTokens;
  std::string layer;
  std::vector<Vector> pooled;
};

inline EmbeddingMatrix read_token_embeddings(std::istream& in, std::uint64_t rows, std::uint64_t max_tokens,
                                             std::uint64_t dim, std::string layer) {
  EmbeddingMatrix m;
  m.dim = dim;
  m.layer = std::move(layer);
  m.sentences.resize(rows);
  for (auto& s : m.sentences) {
    s.tokens = detail::get<std::uint32_t>(in);
    if (s.tokens > max_tokens) throw RetrievalError("sentence exceeds the declared max token count");
    s.special.resize(s.tokens);
    for (auto& f : s.special) f = detail::get<std::uint8_t>(in);
    s.values.resize(s.tokens * dim);
    for (auto& v : s.values) v = detail::get<float>(in);
  }
  return m;
}

inline LoadedEmbeddings read_embeddings(std::istream& in) {
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, detail::kEmbeddingMagic, 4) != 0) throw RetrievalError("not an embedding file");
  if (detail::get<std::uint32_t>(in) != detail::kEmbeddingVersion) {
    throw RetrievalError("unsupported embedding file version");
  }
  const auto kind = static_cast<EmbeddingKind>(detail::get<std::uint32_t>(in));
  const auto rows = detail::get<std::uint64_t>(in);
  const auto max_tokens = detail::get<std::uint64_t>(in);
  const auto dim = detail::get<std::uint64_t>(in);
  const auto layer_len = detail::get<std::uint32_t>(in);
  std::string layer(layer_len, '\0');
  in.read(layer.data(), layer_len);
  if (!in) throw RetrievalError("embedding file truncated");
  if (dim == 0) throw RetrievalError("embedding dimension must be positive");

  LoadedEmbeddings out;
  out.kind = kind;
  out.layer = layer;
  if (kind == EmbeddingKind::kPooled) {
    out.pooled.assign(rows, Vector(dim));
    for (auto& r : out.pooled) {
      for (auto& v : r) v = detail::get<float>(in);
    }
  } else if (kind == EmbeddingKind::kTokens) {
    out.pooled = mean_pool(read_token_embeddings(in, rows, max_tokens, dim, std::move(layer)));
  } else {
    throw RetrievalError("unknown embedding layout");
  }
  return out;
}

}  // namespace ordkit
