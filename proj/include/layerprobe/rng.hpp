#pragma once

// Seed derivation and sampling primitives shared by every stochastic step.
//
// All randomness in the pipeline is derived from explicit per-task seeds via
// mix_seed(); there is no global or shared generator. The sampling helpers
// avoid std::uniform_int_distribution / std::shuffle, whose algorithms are
// implementation-defined, so sampled subsets are identical across standard
// libraries.

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

namespace layerprobe {

inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Order-sensitive combination of seed components.
inline uint64_t mix_seed(std::initializer_list<uint64_t> parts) {
  uint64_t h = 0x6a09e667f3bcc908ULL;
  for (uint64_t p : parts) h = splitmix64(h ^ splitmix64(p));
  return h;
}

// FNV-1a, used to fold identifiers such as feature names into seeds.
inline uint64_t hash_string(std::string_view s) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Stream tags keep the independent random streams of one task apart.
enum class StreamTag : uint64_t {
  kSubset = 0x5b1,
  kPermutation = 0x9e7,
  kInnerFolds = 0x1f0,
};

using Engine = std::mt19937_64;

inline Engine make_engine(uint64_t seed) { return Engine(seed); }

// Uniform integer in [0, bound) by rejection; bound must be > 0.
inline uint64_t uniform_below(Engine& eng, uint64_t bound) {
  const uint64_t limit = std::numeric_limits<uint64_t>::max() -
                         std::numeric_limits<uint64_t>::max() % bound;
  uint64_t x;
  do {
    x = eng();
  } while (x >= limit);
  return x % bound;
}

// Fisher-Yates; after the call the first `prefix` entries are a uniform
// ordered sample without replacement.
template <typename T>
void partial_shuffle(std::span<T> items, std::size_t prefix, Engine& eng) {
  const std::size_t n = items.size();
  for (std::size_t i = 0; i < prefix && i + 1 < n; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(uniform_below(eng, n - i));
    std::swap(items[i], items[j]);
  }
}

template <typename T>
void shuffle(std::span<T> items, Engine& eng) {
  partial_shuffle(items, items.size(), eng);
}

// `k` distinct indices from [0, population), in random order.
inline std::vector<std::size_t> sample_without_replacement(std::size_t population,
                                                           std::size_t k,
                                                           uint64_t seed) {
  std::vector<std::size_t> idx(population);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Engine eng = make_engine(seed);
  partial_shuffle(std::span<std::size_t>(idx), k, eng);
  idx.resize(k);
  return idx;
}

// A uniformly random permutation of [0, n).
inline std::vector<std::size_t> random_permutation(std::size_t n, uint64_t seed) {
  return sample_without_replacement(n, n, seed);
}

}  // namespace layerprobe
