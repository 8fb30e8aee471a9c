#pragma once
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace nomahfl {

// Invalid parameters or configuration values.
class config_error : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// A round cannot proceed (unreachable client, empty schedule, diverged training).
class runtime_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class unreachable_client : public runtime_error {
public:
    using runtime_error::runtime_error;
};

struct TimeEnergy {
    double time = 0;    // seconds
    double energy = 0;  // joules
};

using rng_t = std::mt19937_64;

// Independent generator for (seed, stream, index). Streams keep the
// channel, data, learning and policy randomness separate so that
// changing one scheme does not shift the draws of another.
inline rng_t make_rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t index = 0)
{
    std::seed_seq seq{
        static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
        static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
        static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
    };
    return rng_t(seq);
}

namespace stream {
inline constexpr std::uint64_t topology = 1;
inline constexpr std::uint64_t channel = 2;
inline constexpr std::uint64_t data = 3;
inline constexpr std::uint64_t learning = 4;
inline constexpr std::uint64_t association = 5;
inline constexpr std::uint64_t allocation = 6;
inline constexpr std::uint64_t policy = 7;
inline constexpr std::uint64_t evaluation = 8;
}  // namespace stream

}  // namespace nomahfl
