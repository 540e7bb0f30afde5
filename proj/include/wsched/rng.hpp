#pragma once

#include <cstdint>
#include <random>

namespace wsched {

using Rng = std::mt19937_64;

/// Independent stream purposes derived from one experiment seed. Keeping
/// them separate lets every policy in a comparison see the same topology,
/// parameters and arrivals.
enum class StreamTag : std::uint32_t {
    topology = 1,
    user_params = 2,
    arrivals = 3,
    aloha = 4,
    external = 5,
};

inline Rng make_stream(std::uint64_t seed, StreamTag tag, std::uint64_t index = 0) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(tag), static_cast<std::uint32_t>(index),
                      static_cast<std::uint32_t>(index >> 32)};
    return Rng(seq);
}

}  // namespace wsched
