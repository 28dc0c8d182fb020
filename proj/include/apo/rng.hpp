#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace apo {

using Rng = std::mt19937_64;

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t hash_name(std::string_view name) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : name) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Independent generator for the (base, seed, stream) coordinate. Each
// coordinate is hashed separately, so adding seeds or streams never changes
// the generator of an existing one.
inline Rng make_rng(std::uint64_t seed_base, std::uint64_t seed,
                    std::uint64_t stream = 0) {
  const std::uint64_t key =
      splitmix64(splitmix64(splitmix64(seed_base) ^ seed) ^ splitmix64(stream + 1));
  std::seed_seq seq{static_cast<std::uint32_t>(key),
                    static_cast<std::uint32_t>(key >> 32),
                    static_cast<std::uint32_t>(splitmix64(key)),
                    static_cast<std::uint32_t>(splitmix64(key) >> 32)};
  return Rng(seq);
}

}  // namespace apo
