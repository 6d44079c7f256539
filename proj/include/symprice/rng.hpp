#pragma once

#include <array>
#include <cstdint>

namespace symprice::rng {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
///
/// Every draw is a pure function of (key, counter). Streams are keyed by the
/// 64-bit seed; the 128-bit counter carries (index_lo, index_hi, attempt,
/// stream). A draw for sample i never depends on how many draws a worker
/// produced before it, so any partition of the index range over threads
/// yields identical output.
struct Counter {
  std::uint64_t index = 0;
  std::uint32_t attempt = 0;
  std::uint32_t stream = 0;
};

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                        std::array<std::uint32_t, 2> key) noexcept;

/// Two uniforms in (0, 1] with 53 bits each, from one Philox block.
std::array<double, 2> uniform_pair(std::uint64_t seed, Counter c) noexcept;

/// Two independent standard normals (Box-Muller on one Philox block).
std::array<double, 2> normal_pair(std::uint64_t seed, Counter c) noexcept;

/// Derive an independent 64-bit seed for sub-experiment `index` (trials,
/// bootstrap replicates). SplitMix64 finaliser over seed and index.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) noexcept;

// Stream identifiers. Distinct uses of one seed never share counters.
inline constexpr std::uint32_t kStreamBivariate = 1;
inline constexpr std::uint32_t kStreamGbm = 2;
inline constexpr std::uint32_t kStreamBootstrap = 3;

}  // namespace symprice::rng
