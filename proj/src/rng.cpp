#include "stmi/rng.hpp"

#include <cmath>

namespace stmi {

namespace {

constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;
constexpr std::uint64_t kMix1 = 0xBF58476D1CE4E5B9ULL;
constexpr std::uint64_t kMix2 = 0x94D049BB133111EBULL;

std::uint64_t splitmix64(std::uint64_t x) {
    std::uint64_t z = x + kGamma;
    z = (z ^ (z >> 30)) * kMix1;
    z = (z ^ (z >> 27)) * kMix2;
    return z ^ (z >> 31);
}

} // namespace

std::uint64_t Rng::mix(std::uint64_t a, std::uint64_t b) {
    return splitmix64(splitmix64(a) ^ (b * kGamma));
}

Rng Rng::fork(std::uint64_t tag) const {
    return Rng(mix(key_, tag));
}

std::uint64_t Rng::next_u64() {
    return splitmix64(key_ ^ splitmix64(counter_++ * kGamma));
}

double Rng::uniform() {
    // 53 high bits -> double in [0, 1)
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) {
    return lo + (hi - lo) * uniform();
}

std::uint64_t Rng::uniform_int(std::uint64_t n) {
    // Rejection sampling to avoid modulo bias.
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v = next_u64();
    while (v >= limit) v = next_u64();
    return v % n;
}

double Rng::normal() {
    if (cached_normal_) {
        double v = *cached_normal_;
        cached_normal_.reset();
        return v;
    }
    // Box-Muller; u1 shifted away from zero to keep log finite.
    double u1 = uniform();
    double u2 = uniform();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * M_PI * u2;
    cached_normal_ = r * std::sin(theta);
    return r * std::cos(theta);
}

double Rng::normal(double mean, double stddev) {
    return mean + stddev * normal();
}

bool Rng::bernoulli(double p) {
    return uniform() < p;
}

} // namespace stmi
