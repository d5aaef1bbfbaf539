#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace oceanbo {

using Rng = std::mt19937_64;

// SplitMix64 finalizer. Used to derive independent child seeds.
std::uint64_t mix64(std::uint64_t x);

// Child seed for (parent, index); stable across platforms and runs.
std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t index);

// FNV-1a over bytes, for content hashes in headers and manifests.
std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace oceanbo
