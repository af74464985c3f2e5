#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace sls {

using Engine = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Child seed for a (parent, index) pair. Order-independent: repeat r's seed
/// does not depend on which other repeats ran.
inline std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t index) {
    return splitmix64(splitmix64(parent) ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

/// Independent stream for a named purpose ("beta", "design", ...).
inline Engine make_stream(std::uint64_t seed, std::string_view label) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(fnv1a64(label)),
                      static_cast<std::uint32_t>(fnv1a64(label) >> 32)};
    return Engine(seq);
}

}  // namespace sls
