#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace fedaux {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer; used to derive independent stream seeds.
constexpr std::uint64_t mix_seed(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Seed for a named sub-stream, e.g. derive_seed(base, {kStationStream, u, t}).
inline std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> keys) noexcept {
    std::uint64_t h = mix_seed(base);
    for (auto k : keys) h = mix_seed(h ^ mix_seed(k));
    return h;
}

inline Rng make_rng(std::uint64_t base, std::initializer_list<std::uint64_t> keys) {
    return Rng(derive_seed(base, keys));
}

// Stream tags keep sub-streams of one experiment seed from colliding.
namespace stream {
inline constexpr std::uint64_t kInit = 1;
inline constexpr std::uint64_t kSplit = 2;
inline constexpr std::uint64_t kPartition = 3;
inline constexpr std::uint64_t kStation = 4;
inline constexpr std::uint64_t kParticipation = 5;
inline constexpr std::uint64_t kSynth = 6;
}  // namespace stream

}  // namespace fedaux
