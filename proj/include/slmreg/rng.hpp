#pragma once

#include <cstdint>
#include <random>

namespace slmreg {

/// SplitMix64 finalizer; used to derive independent stream seeds.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Seed for replication `index` of a study with the given master seed.
/// Depends on nothing else, so results do not change with execution order.
constexpr std::uint64_t replication_seed(std::uint64_t master, std::uint64_t index) noexcept {
    return mix64(mix64(master) ^ mix64(index + 0x5851f42d4c957f2dULL));
}

using Engine = std::mt19937_64;

}  // namespace slmreg
