#pragma once

#include <cstdint>

namespace regenn {

/// Counter-based deterministic random stream. Every draw is a pure function
/// of (seed, counter), so draw i of a reserved block can be computed from its
/// index alone — reductions and mask fills stay bit-identical regardless of
/// the execution order or thread count.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed, std::uint64_t counter = 0)
        : seed_(seed), counter_(counter) {}

    std::uint64_t seed() const { return seed_; }
    std::uint64_t counter() const { return counter_; }

    /// Advances the stream by n draws and returns the first reserved counter.
    std::uint64_t reserve(std::uint64_t n) {
        std::uint64_t base = counter_;
        counter_ += n;
        return base;
    }

    /// Uniform double in [0, 1) at an absolute counter position.
    double uniform_at(std::uint64_t counter) const {
        return static_cast<double>(bits_at(counter) >> 11) * 0x1.0p-53;
    }

    /// Next uniform double in [0, 1), advancing the stream.
    double next_uniform() { return uniform_at(reserve(1)); }

    /// Next uniform double in [lo, hi), advancing the stream.
    double next_uniform(double lo, double hi) {
        return lo + (hi - lo) * next_uniform();
    }

    /// Raw 64 random bits at an absolute counter position.
    std::uint64_t bits_at(std::uint64_t counter) const {
        return mix(seed_ + mix(counter + 0x9e3779b97f4a7c15ull));
    }

    /// Derives an independent stream, e.g. one per transfer-learning slice.
    static RngStream derive(std::uint64_t seed, std::uint64_t stream_id) {
        return RngStream(mix(seed + mix(stream_id + 0x6a09e667f3bcc909ull)));
    }

private:
    // SplitMix64 finalizer.
    static std::uint64_t mix(std::uint64_t x) {
        x += 0x9e3779b97f4a7c15ull;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
        return x ^ (x >> 31);
    }

    std::uint64_t seed_;
    std::uint64_t counter_;
};

} // namespace regenn
