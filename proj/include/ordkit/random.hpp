#pragma once

// Seeded, platform-independent random streams.
//
// Every random decision in ordkit is drawn from a SplitMix64 stream whose
// starting state is derived from (global_seed, sentence_index). The
// standard library distributions are avoided on purpose: their output is
// implementation-defined, and corpora must be byte-identical everywhere.
//
//   fmix(z):   z ^= z >> 30; z *= 0xBF58476D1CE4E5B9
//              z ^= z >> 27; z *= 0x94D049BB133111EB
//              z ^= z >> 31
//   stream_seed(g, i) = fmix(g ^ fmix(i + 0x9E3779B97F4A7C15))
//   next():    state += 0x9E3779B97F4A7C15; return fmix(state)
//   uniform(n): draw r = next() until r >= (2^64 - n) mod n; return r mod n
//   uniform01(): (next() >> 11) * 2^-53
//   step k of a chain uses global seed fmix(g + (k + 1) * 0xD1B54A32D192ED03)

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>

namespace ordkit {

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

constexpr std::uint64_t fmix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Identifies the random stream of one sentence.
struct SeedScheme {
  std::uint64_t global_seed = 0;
  std::uint64_t sentence_index = 0;

  constexpr std::uint64_t stream_seed() const noexcept {
    return fmix64(global_seed ^ fmix64(sentence_index + kGolden));
  }

  /// Scheme for the k-th step of a transformation chain. Steps get
  /// unrelated streams so two shuffles in one chain are independent.
  constexpr SeedScheme for_step(std::size_t step) const noexcept {
    return {fmix64(global_seed + (static_cast<std::uint64_t>(step) + 1) * 0xD1B54A32D192ED03ULL),
            sentence_index};
  }

  friend constexpr bool operator==(const SeedScheme&, const SeedScheme&) = default;
};

class Rng {
 public:
  explicit constexpr Rng(std::uint64_t seed) noexcept : state_(seed) {}
  explicit constexpr Rng(const SeedScheme& scheme) noexcept : state_(scheme.stream_seed()) {}

  constexpr std::uint64_t next() noexcept {
    state_ += kGolden;
    return fmix64(state_);
  }

  // Unbiased integer in [0, n). n must be positive.
  constexpr std::uint64_t uniform(std::uint64_t n) noexcept {
    const std::uint64_t threshold = (0 - n) % n;
    for (;;) {
      const std::uint64_t r = next();
      if (r >= threshold) return r % n;
    }
  }

  constexpr double uniform01() noexcept {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
  }

  template <typename T>
  constexpr void shuffle(std::span<T> items) noexcept {
    // Fisher-Yates, high index downwards.
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(uniform(i));
      using std::swap;
      swap(items[i - 1], items[j]);
    }
  }

 private:
  std::uint64_t state_;
};

}  // namespace ordkit
