#pragma once

#include <cstdint>
#include <random>

namespace noisyor {

/// SplitMix64 finaliser; used only to derive independent seeds.
constexpr std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Seed of sub-stream `index` within stream `stream` of a root seed.
constexpr std::uint64_t derive_seed(std::uint64_t root, std::uint64_t stream, std::uint64_t index = 0) {
    return mix64(mix64(root ^ mix64(stream)) + index);
}

/// Named streams, so different consumers of one root seed never collide.
enum class Stream : std::uint64_t {
    model = 1,
    sample = 2,
    partition = 3,
    decomposition = 4,
};

inline std::mt19937_64 make_engine(std::uint64_t root, Stream stream, std::uint64_t index = 0) {
    return std::mt19937_64(derive_seed(root, static_cast<std::uint64_t>(stream), index));
}

/// Fresh nondeterministic seed for commands invoked without one.
inline std::uint64_t draw_seed() {
    std::random_device rd;
    return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

}  // namespace noisyor
