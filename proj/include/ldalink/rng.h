#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace ldalink {

using Rng = std::mt19937_64;

// Derives an independent sub-seed from a master seed and a component name,
// so that components draw from separate streams and can be reordered
// without perturbing each other. Stable across platforms (FNV-1a followed by
// a splitmix64 finalizer).
std::uint64_t derive_seed(std::uint64_t master, std::string_view component,
                          std::uint64_t index = 0);

}  // namespace ldalink
