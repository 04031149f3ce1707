#pragma once

#include <cstdint>
#include <limits>
#include <random>

namespace qkmin {

/// SplitMix64 finalizer. Used to derive well-separated substream seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Seeded generator with deterministic substreams.
///
/// One substream per trial keeps Monte-Carlo runs reproducible independent of
/// how trials are scheduled across workers. Satisfies
/// UniformRandomBitGenerator so it can drive <random> distributions.
class Rng {
public:
    using result_type = std::uint64_t;

    explicit Rng(std::uint64_t seed) : seed_(seed), engine_(splitmix64(seed)) {}

    /// Independent stream `index` derived from `seed`.
    static Rng stream(std::uint64_t seed, std::uint64_t index) {
        return Rng(splitmix64(seed ^ splitmix64(index + 0x632BE59BD9B4E019ULL)));
    }

    /// Child stream; does not advance this generator.
    [[nodiscard]] Rng split(std::uint64_t index) const { return stream(seed_, index); }

    static constexpr result_type min() { return std::mt19937_64::min(); }
    static constexpr result_type max() { return std::mt19937_64::max(); }
    result_type operator()() { return engine_(); }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, bound). `bound` must be positive.
    std::uint64_t below(std::uint64_t bound) {
        return std::uniform_int_distribution<std::uint64_t>(0, bound - 1)(engine_);
    }

    bool bernoulli(double p) { return uniform() < p; }

    [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

}  // namespace qkmin
