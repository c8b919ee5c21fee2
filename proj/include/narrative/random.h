#ifndef NARRATIVE_RANDOM_H_
#define NARRATIVE_RANDOM_H_

#include <cstdint>
#include <random>
#include <string_view>

namespace narrative {

// std::mt19937_64 is fully specified by the standard, unlike the standard
// distributions, so all sampling goes through the helpers below to keep
// results identical across standard libraries.
using Rng = std::mt19937_64;

// Uniform double in [0, 1) with 53 random bits.
inline double UniformUnit(Rng &rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Uniform integer in [0, n). Uses rejection to avoid modulo bias.
inline uint64_t UniformIndex(Rng &rng, uint64_t n) {
  const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % n;
}

// SplitMix64 finalizer; used to derive independent seeds.
inline uint64_t MixSeed(uint64_t seed, uint64_t stream) {
  uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// 64-bit FNV-1a.
inline uint64_t Fnv1a64(std::string_view data,
                        uint64_t hash = 0xcbf29ce484222325ULL) {
  for (unsigned char c : data) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

// Fisher-Yates with UniformIndex so the permutation is portable.
template <typename It>
void Shuffle(It first, It last, Rng &rng) {
  const auto n = last - first;
  for (auto i = n - 1; i > 0; --i) {
    const auto j = static_cast<decltype(i)>(
        UniformIndex(rng, static_cast<uint64_t>(i) + 1));
    std::swap(first[i], first[j]);
  }
}

}  // namespace narrative

#endif  // NARRATIVE_RANDOM_H_
