#pragma once

#include <cstdint>
#include <random>

namespace bcr {

// All randomness in the library flows through one seedable generator type so
// that a (config, base seed) pair pins down every simulated trajectory.
using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t seed) { return Rng(seed); }

// Stateless mixing step (splitmix64); used to derive independent sub-stream
// seeds from a run seed without correlating nearby seeds.
inline std::uint64_t mix_seed(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

// Seed for sub-stream `channel` of run `run_seed` (agents, replay chains, ...).
inline std::uint64_t sub_seed(std::uint64_t run_seed, std::uint64_t channel) {
    return mix_seed(run_seed * 0x100000001b3ull + channel + 1);
}

}  // namespace bcr
