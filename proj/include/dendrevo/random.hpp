#pragma once

// Seeded random streams. Every draw is derived from raw 64-bit engine output
// with fixed arithmetic so that results are identical across standard library
// implementations (std::uniform_*_distribution is implementation-defined).

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <random>

namespace dendrevo {

/// SplitMix64 finalizer; used to decorrelate derived seeds.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept
{
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Deterministically combines a root seed with positional keys.
inline std::uint64_t derive_seed(std::uint64_t root, std::initializer_list<std::uint64_t> keys) noexcept
{
    std::uint64_t s = mix64(root);
    for (auto k : keys) {
        s = mix64(s ^ mix64(k + 0x632be59bd9b4e019ULL));
    }
    return s;
}

class Rng {
public:
    using result_type = std::uint64_t;

    explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

    static constexpr result_type min() { return std::mt19937_64::min(); }
    static constexpr result_type max() { return std::mt19937_64::max(); }
    result_type operator()() { return engine_(); }

    /// Uniform on [0, 1).
    double unit_open()
    {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    /// Uniform on [0, 1].
    double unit_closed()
    {
        return static_cast<double>(engine_() >> 11) / 9007199254740991.0;
    }

    /// Uniform on [lo, hi).
    double uniform_open(double lo, double hi) { return lo + (hi - lo) * unit_open(); }

    /// Uniform on [lo, hi].
    double uniform_closed(double lo, double hi)
    {
        double v = lo + (hi - lo) * unit_closed();
        return v > hi ? hi : v;
    }

    bool coin() { return (engine_() >> 63) != 0; }

    bool bernoulli(double p)
    {
        if (p >= 1.0)
            return true;
        if (p <= 0.0)
            return false;
        return unit_open() < p;
    }

    /// Unbiased integer in [0, bound). bound must be positive.
    std::size_t below(std::size_t bound)
    {
        const std::uint64_t b = bound;
        // 2^64 mod b; rejecting values below it leaves a multiple of b outcomes.
        const std::uint64_t skip = (0 - b) % b;
        std::uint64_t v;
        do {
            v = engine_();
        } while (v < skip);
        return static_cast<std::size_t>(v % b);
    }

    bool operator==(const Rng&) const = default;

private:
    std::mt19937_64 engine_;
};

} // namespace dendrevo
