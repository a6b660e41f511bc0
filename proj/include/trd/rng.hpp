#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace trd::rng {

// FNV-1a, used for substream naming and file digests.
constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ull;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ull;

constexpr std::uint64_t fnv1a64(std::string_view s, std::uint64_t h = kFnvOffset) {
    for (unsigned char c : s) {
        h ^= c;
        h *= kFnvPrime;
    }
    return h;
}

constexpr std::uint64_t fnv1a64_bytes(const unsigned char* data, std::size_t len,
                                      std::uint64_t h = kFnvOffset) {
    for (std::size_t i = 0; i < len; ++i) {
        h ^= data[i];
        h *= kFnvPrime;
    }
    return h;
}

constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

// All randomness flows from one root seed through named substreams, so
// independent components (collect/init/eval/...) never share a generator.
constexpr std::uint64_t derive(std::uint64_t root, std::string_view name,
                               std::uint64_t index = 0) {
    return splitmix64(splitmix64(root ^ fnv1a64(name)) + index);
}

inline std::mt19937_64 substream(std::uint64_t root, std::string_view name,
                                 std::uint64_t index = 0) {
    return std::mt19937_64(derive(root, name, index));
}

}  // namespace trd::rng
