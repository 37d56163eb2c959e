#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace hypro {

namespace detail {

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

constexpr std::uint64_t fnv1a(std::string_view s) noexcept {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001B3ULL;
    }
    return h;
}

} // namespace detail

/// Counter-based generator: draw i is mix64(key + (i + 1) * golden), i.e. SplitMix64
/// evaluated at an explicit counter. Outputs depend only on (seed, draw index),
/// so results are identical across platforms and standard libraries.
class RngStream {
public:
    static constexpr std::string_view kAlgorithm = "splitmix64-counter";

    explicit RngStream(std::uint64_t seed = 0) noexcept : seed_(seed), key_(detail::mix64(seed ^ 0x6A09E667F3BCC909ULL)) {}

    [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }
    [[nodiscard]] std::uint64_t counter() const noexcept { return counter_; }

    std::uint64_t next_u64() noexcept {
        ++counter_;
        return detail::mix64(key_ + counter_ * detail::kGolden);
    }

    /// Uniform on the open interval (0, 1).
    double uniform() noexcept {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    double exponential(double rate) noexcept { return -std::log(uniform()) / rate; }

    /// Box-Muller; consumes two draws.
    double normal() noexcept {
        const double u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }

    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) noexcept {
        return static_cast<std::uint64_t>(uniform() * static_cast<double>(n)) % n;
    }

    /// Independent child stream; does not advance this stream.
    [[nodiscard]] RngStream substream(std::uint64_t index) const noexcept {
        return RngStream(detail::mix64(key_ ^ detail::mix64(index + detail::kGolden)));
    }

    [[nodiscard]] RngStream substream(std::string_view name) const noexcept {
        return substream(detail::fnv1a(name));
    }

private:
    std::uint64_t seed_;
    std::uint64_t key_;
    std::uint64_t counter_{0};
};

} // namespace hypro
