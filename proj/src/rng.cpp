#include "rcomp/rng.hpp"

#include <cmath>
#include <numbers>

namespace rcomp {

std::uint64_t SplitMix64::next() {
    std::uint64_t z = (state_ += kGolden);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

Rng::Rng(std::uint64_t seed) {
    SplitMix64 sm(seed);
    for (auto& w : s_) w = sm.next();
}

Rng Rng::substream(std::uint64_t seed, std::uint64_t k) {
    return Rng(seed + k * SplitMix64::kGolden);
}

namespace {
inline std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
}  // namespace

std::uint64_t Rng::next() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
}

double Rng::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

double Rng::normal() {
    double u1 = 1.0 - uniform();  // (0,1]
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

Vector Rng::normal_vector(std::size_t n) {
    Vector v(n);
    for (auto& x : v) x = normal();
    return v;
}

Vector Rng::in_ball(std::size_t n, double radius) {
    Vector g = normal_vector(n);
    double ng = norm(g);
    while (ng == 0.0) {
        g = normal_vector(n);
        ng = norm(g);
    }
    double r = radius * std::pow(uniform(), 1.0 / static_cast<double>(n));
    return scale(r / ng, g);
}

}  // namespace rcomp
