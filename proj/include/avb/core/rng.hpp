#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace avb {

using Rng = std::mt19937_64;

/// Stable 64-bit FNV-1a hash, used to key RNG substreams by model id.
[[nodiscard]] constexpr std::uint64_t stable_hash(std::string_view s) noexcept {
  std::uint64_t h = 14695981039346656037ULL;
  for (const char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  return h;
}

/// Independent generator for (master seed, key...) so results never depend
/// on the order in which substreams are created.
[[nodiscard]] inline Rng make_rng(std::uint64_t master,
                                  std::initializer_list<std::uint64_t> keys = {}) {
  std::seed_seq::result_type words[16];
  std::size_t k = 0;
  words[k++] = static_cast<std::uint32_t>(master);
  words[k++] = static_cast<std::uint32_t>(master >> 32);
  for (const auto key : keys) {
    if (k + 2 > 16)
      break;
    words[k++] = static_cast<std::uint32_t>(key);
    words[k++] = static_cast<std::uint32_t>(key >> 32);
  }
  std::seed_seq seq(words, words + k);
  return Rng(seq);
}

/// Uniform on [0, 1).
[[nodiscard]] inline double uniform01(Rng &rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

} // namespace avb
