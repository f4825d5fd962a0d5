#pragma once

#include <cstdint>
#include <limits>

namespace deepclust {

// xoshiro256** (Blackman & Vigna, 2018) seeded by expanding a 64-bit seed
// through splitmix64. Every derived distribution is implemented here rather
// than through <random> distributions, whose algorithms vary between
// standard libraries, so streams are identical on every platform.
class Rng {
public:
    using result_type = std::uint64_t;

    explicit Rng(std::uint64_t seed = 0) noexcept;

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    std::uint64_t next_u64() noexcept;
    result_type operator()() noexcept { return next_u64(); }

    // Uniform in [0, 1) with 53 random bits.
    double uniform() noexcept;
    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
    // Unbiased integer in [0, n); n must be > 0.
    std::uint64_t index(std::uint64_t n) noexcept;
    // Standard normal via the Marsaglia polar method (one spare cached).
    double normal() noexcept;
    double normal(double mean, double stddev) noexcept { return mean + stddev * normal(); }
    bool bernoulli(double p) noexcept { return uniform() < p; }

    // Independent child stream; used to give each sweep cell or restart its own generator.
    Rng split() noexcept;

    std::uint64_t seed() const noexcept { return seed_; }

private:
    std::uint64_t seed_;
    std::uint64_t s_[4];
    double spare_ = 0.0;
    bool has_spare_ = false;
};

// splitmix64 finalizer; also used to derive sub-seeds deterministically.
std::uint64_t splitmix64(std::uint64_t& state) noexcept;
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) noexcept;

}  // namespace deepclust
