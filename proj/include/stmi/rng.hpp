#pragma once

#include <cstdint>
#include <optional>

namespace stmi {

// Deterministic counter-based generator. Each draw hashes (key, counter) with
// the splitmix64 finalizer, so a stream is fully described by two u64 values
// and can be forked, serialized, and resumed without hidden state.
//
// Constants are the standard splitmix64 set:
//   gamma 0x9E3779B97F4A7C15, mix1 0xBF58476D1CE4E5B9, mix2 0x94D049BB133111EB.
class Rng {
public:
    explicit Rng(std::uint64_t key, std::uint64_t counter = 0)
        : key_(key), counter_(counter) {}

    // Independent stream derived from this stream's key and a caller tag.
    // Does not advance this stream.
    Rng fork(std::uint64_t tag) const;

    std::uint64_t next_u64();

    // Uniform on [0, 1) with 53 random bits.
    double uniform();
    // Uniform on [lo, hi).
    double uniform(double lo, double hi);
    // Uniform integer on [0, n). n must be > 0.
    std::uint64_t uniform_int(std::uint64_t n);
    // Standard normal via Box-Muller; the paired draw is cached.
    double normal();
    double normal(double mean, double stddev);
    // True with probability p.
    bool bernoulli(double p);

    std::uint64_t key() const { return key_; }
    std::uint64_t counter() const { return counter_; }
    void restore(std::uint64_t key, std::uint64_t counter) {
        key_ = key;
        counter_ = counter;
        cached_normal_.reset();
    }

    static std::uint64_t mix(std::uint64_t a, std::uint64_t b);

private:
    std::uint64_t key_;
    std::uint64_t counter_;
    std::optional<double> cached_normal_;
};

} // namespace stmi
