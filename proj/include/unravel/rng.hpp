#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>

namespace unravel {

namespace detail {

/// splitmix64 avalanche finalizer. Full 64-bit avalanche: every input bit
/// affects every output bit.
inline std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// One splitmix64 draw; advances the counter by the golden gamma.
inline std::uint64_t splitmix64_next(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ULL;
    return mix64(state);
}

} // namespace detail

/// Deterministic, platform-independent random stream (xoshiro256++ core,
/// splitmix64 seeding). No std:: distributions are used anywhere, so equal
/// (base_seed, stream_index) pairs reproduce byte-for-byte on any platform.
///
/// Stream derivation: base_seed and stream index are avalanched separately
/// through the splitmix64 finalizer and combined; the result seeds a
/// splitmix64 sequence whose first four outputs fill the xoshiro state.
/// Distinct (base_seed, index) pairs therefore start from unrelated points
/// of the splitmix64 orbit.
class RngStream {
public:
    RngStream(std::uint64_t base_seed, std::uint64_t stream_index) {
        std::uint64_t s = detail::mix64(base_seed) ^
                          detail::mix64(stream_index * 0x9E3779B97F4A7C15ULL +
                                        0xD1B54A32D192ED03ULL);
        for (auto& word : state_) word = detail::splitmix64_next(s);
        if ((state_[0] | state_[1] | state_[2] | state_[3]) == 0) state_[3] = 1;
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    /// Uniform double in [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Standard normal via Box-Muller. Consumes exactly two uniforms per call
    /// (the second branch of the pair is discarded to keep draws stateless).
    double normal() {
        const double u1 = 1.0 - uniform(); // (0, 1], log-safe
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) *
               std::cos(2.0 * 3.14159265358979323846 * u2);
    }

    /// Exponential waiting time with the given rate.
    double exponential(double rate) {
        if (!(rate > 0.0))
            throw std::invalid_argument("RngStream::exponential: rate must be > 0");
        return -std::log(1.0 - uniform()) / rate;
    }

    /// Uniform integer in [0, n). Uses the floor of n*uniform(); the modulo
    /// bias is below 2^-53 and irrelevant for the small n used here.
    std::uint64_t uniform_int(std::uint64_t n) {
        if (n == 0) throw std::invalid_argument("RngStream::uniform_int: n == 0");
        auto v = static_cast<std::uint64_t>(uniform() * static_cast<double>(n));
        return v < n ? v : n - 1;
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    std::uint64_t state_[4];
};

/// Derive the i-th independent stream of a base seed.
inline RngStream derive_stream(std::uint64_t base_seed, std::uint64_t index) {
    return RngStream(base_seed, index);
}

/// Scalar seed for the i-th member of an ensemble; the member then derives
/// its own sub-streams (clock, process) from this value.
inline std::uint64_t derive_seed(std::uint64_t base_seed, std::uint64_t index) {
    return detail::mix64(base_seed) ^
           detail::mix64(index * 0x9E3779B97F4A7C15ULL + 0x8CB92BA72F3D8DD7ULL);
}

} // namespace unravel
