#pragma once

#include <cstdint>
#include <random>

namespace uhdtest::rng {

using Engine = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// Deterministic sub-seed from (master, stream, index); every parallel work
// unit draws from its own stream so results never depend on scheduling.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream,
                                 std::uint64_t index = 0) {
    std::uint64_t s = master;
    std::uint64_t a = splitmix64(s);
    s ^= stream * 0xD1342543DE82EF95ULL;
    std::uint64_t b = splitmix64(s);
    s ^= index * 0xDB4F0B9175AE2165ULL;
    std::uint64_t c = splitmix64(s);
    return a ^ (b + 0x165667B19E3779F9ULL) ^ (c << 1);
}

inline Engine make_engine(std::uint64_t master, std::uint64_t stream,
                          std::uint64_t index = 0) {
    return Engine(derive_seed(master, stream, index));
}

inline double uniform01(Engine& eng) {
    return std::uniform_real_distribution<double>(0.0, 1.0)(eng);
}

template <typename It>
void fill_gaussian(Engine& eng, It first, It last) {
    std::normal_distribution<double> normal;
    for (; first != last; ++first) *first = normal(eng);
}

// Two-point innovation: sqrt(2) w.p. 1/3, -sqrt(2)/2 w.p. 2/3.
// Mean 0, variance 1, fourth cumulant -1.5.
inline double two_point(Engine& eng) {
    constexpr double hi = 1.4142135623730951;
    return uniform01(eng) < 1.0 / 3.0 ? hi : -hi / 2.0;
}

template <typename It>
void fill_two_point(Engine& eng, It first, It last) {
    for (; first != last; ++first) *first = two_point(eng);
}

// Stream tags; arbitrary distinct constants.
inline constexpr std::uint64_t kStreamSplit = 0x53504C49ULL;      // split sampling
inline constexpr std::uint64_t kStreamCalibData = 0x43414C44ULL;  // calibration data
inline constexpr std::uint64_t kStreamCalibSplit = 0x43414C53ULL;
inline constexpr std::uint64_t kStreamScenario = 0x5343454EULL;   // population draw
inline constexpr std::uint64_t kStreamRepData = 0x52455044ULL;
inline constexpr std::uint64_t kStreamRepSplit = 0x52455053ULL;

}  // namespace uhdtest::rng
