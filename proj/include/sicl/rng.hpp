#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace sicl {

using Rng = std::mt19937_64;

// Stable across platforms: FNV-1a over the label mixed into the master seed
// with a splitmix64 finalizer.
std::uint64_t derive_seed(std::uint64_t master, std::string_view label);
std::uint64_t derive_seed(std::uint64_t master, std::string_view label, std::uint64_t index);

inline Rng make_rng(std::uint64_t master, std::string_view label) { return Rng(derive_seed(master, label)); }

}  // namespace sicl
