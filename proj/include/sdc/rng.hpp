#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace sdc {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Derives an independent generator for a named stream. Components that own
// separate streams can be enabled or disabled without shifting draws seen
// by the others, which is what keeps ablated runs bit-comparable.
inline std::mt19937_64 derive_rng(std::uint64_t seed, std::string_view stream,
                                  std::uint64_t a = 0, std::uint64_t b = 0) {
    std::uint64_t h = splitmix64(seed ^ fnv1a64(stream));
    h = splitmix64(h ^ splitmix64(a + 0x9e3779b97f4a7c15ULL));
    h = splitmix64(h ^ splitmix64(b + 0x632be59bd9b4e019ULL));
    return std::mt19937_64(h);
}

}  // namespace sdc
