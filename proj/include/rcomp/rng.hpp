#pragma once

#include <array>
#include <cstdint>

#include "rcomp/linalg.hpp"

namespace rcomp {

class SplitMix64 {
public:
    static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}
    std::uint64_t next();
    // uniform in [0,1) from the top 53 bits
    double next_double() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

private:
    std::uint64_t state_;
};

// xoshiro256++ seeded through splitmix64
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    // independent stream k: splitmix64 state jumped by k increments
    static Rng substream(std::uint64_t seed, std::uint64_t k);

    std::uint64_t next();
    double uniform();  // [0,1)
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    double normal();   // Box-Muller, no caching
    Vector normal_vector(std::size_t n);
    // uniform in B(0; radius): normalized Gaussian times radius * U^{1/n}
    Vector in_ball(std::size_t n, double radius);

private:
    std::array<std::uint64_t, 4> s_{};
};

}  // namespace rcomp
