#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace cfs {

using Rng = std::mt19937_64;

/// Seed splitting. Every random stream in the library is keyed by
/// (root seed, stream name, index), so a parallel loop draws the same
/// numbers no matter how its iterations are scheduled.
///
///   root --"feature"--> per-feature seeds
///   root --"replica"--> per-replica seeds
///   root --"tree"-----> per-tree seeds
std::uint64_t derive_seed(std::uint64_t root, std::string_view stream,
                          std::uint64_t index = 0);

inline Rng make_rng(std::uint64_t root, std::string_view stream,
                    std::uint64_t index = 0) {
  return Rng(derive_seed(root, stream, index));
}

/// 64-bit FNV-1a, used for stream names and input file fingerprints.
std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace cfs
