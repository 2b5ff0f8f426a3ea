#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <string_view>

namespace divscale {

// SplitMix64 finalizer. Bijective on 64-bit words.
std::uint64_t mix64(std::uint64_t x) noexcept;

// FNV-1a over the bytes of `s`; stable across platforms and runs.
std::uint64_t stable_hash(std::string_view s) noexcept;

/// xoshiro256** generator with portable distribution helpers.
///
/// The standard <random> distributions are implementation-defined, which would
/// make pools differ between libstdc++ and libc++. Everything here is specified
/// bit-for-bit so a (seed, call sequence) pair reproduces on any platform.
class Rng {
public:
    using result_type = std::uint64_t;

    explicit Rng(std::uint64_t seed) noexcept;

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept {
        return std::numeric_limits<result_type>::max();
    }

    result_type operator()() noexcept { return next(); }
    result_type next() noexcept;

    // Uniform on [0, 1) with 53 random bits.
    double uniform() noexcept;
    // Uniform on [lo, hi).
    double uniform(double lo, double hi) noexcept;
    // Uniform integer on the closed range [lo, hi]. Unbiased (rejection).
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) noexcept;
    bool bernoulli(double p) noexcept;
    // Standard normal via the Marsaglia polar method.
    double normal() noexcept;

private:
    std::array<std::uint64_t, 4> s_{};
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace divscale
