#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace refexp {

/// The only random engine used by the toolkit. Its output sequence is fixed
/// by the standard, so seeded runs reproduce across platforms as long as we
/// never route it through std::*_distribution.
using Rng = std::mt19937_64;

/// 64-bit FNV-1a over `data`, continuing from `basis`.
std::uint64_t fnv1a64(std::string_view data,
                      std::uint64_t basis = 0xcbf29ce484222325ULL) noexcept;

/// Derives a child seed from a parent seed and a label (image id, object id,
/// category, ...). Stable across runs and platforms.
std::uint64_t derive_seed(std::uint64_t parent, std::string_view label) noexcept;

/// Uniform integer in [0, bound). bound must be > 0.
std::uint64_t uniform_below(Rng& rng, std::uint64_t bound);

/// Fair coin.
bool coin_flip(Rng& rng);

/// Fisher-Yates shuffle driven by uniform_below.
template <typename T>
void seeded_shuffle(std::vector<T>& items, Rng& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(uniform_below(rng, i));
    std::swap(items[i - 1], items[j]);
  }
}

/// Lower-case hexadecimal rendering of a 64-bit value, zero padded to 16.
std::string to_hex(std::uint64_t value);

}  // namespace refexp
