#pragma once

#include <array>
#include <cstdint>

namespace bisr {

/// xoshiro256** seeded through splitmix64. Distribution sampling is written out
/// here instead of using <random> distributions, whose output differs between
/// standard libraries.
///
/// Stream splitting: Rng(seed, stream) gives an independent sequence per stream
/// index; datasets use stream = image index so results do not depend on the
/// order or thread in which images are synthesized.
class Rng {
public:
    explicit Rng(std::uint64_t seed, std::uint64_t stream = 0) noexcept;

    std::uint64_t next_u64() noexcept;

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() noexcept;
    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) noexcept;

    /// Standard normal via the Box-Muller transform.
    double normal() noexcept;

    /// Exponential with unit rate.
    double exponential() noexcept;

private:
    std::array<std::uint64_t, 4> state_{};
    bool has_spare_ = false;
    double spare_ = 0.0;
};

std::uint64_t splitmix64(std::uint64_t& state) noexcept;

}  // namespace bisr
