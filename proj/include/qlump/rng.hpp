// Seeded randomness used by the generators and the Monte Carlo simulator.
//
// Engine: std::mt19937_64, whose output sequence is pinned down by the C++
// standard, so a seed reproduces identical draws on any conforming platform.
// Floating-point draws are derived from the raw 64-bit output below instead
// of std::uniform_real_distribution, whose mapping the standard leaves
// implementation-defined. Independent streams (one per walker, one per
// experiment seed) are derived with a splitmix64 mix of (seed, stream id).
#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace qlump {

class SeededRng {
public:
    explicit SeededRng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform double in [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double a, double b) { return a + (b - a) * uniform01(); }

    // Strictly positive Exp(1) draw; the zero-probability u = 0 case is redrawn
    // so simplex weights are never exactly zero.
    double exponential() {
        double e;
        do {
            e = -std::log1p(-uniform01());
        } while (!(e > 0.0));
        return e;
    }

    // Unbiased integer in [0, n) by rejection sampling.
    std::size_t uniform_index(std::size_t n) {
        if (n <= 1) return 0;
        const std::uint64_t un = static_cast<std::uint64_t>(n);
        std::uint64_t x, r;
        do {
            x = engine_();
            r = x % un;
        } while (x - r > std::uint64_t(0) - un);
        return static_cast<std::size_t>(r);
    }

    // Seed for an independent stream: splitmix64 finalizer over the pair.
    // Walker w of a Monte Carlo run uses derive_stream(seed, w); results are
    // therefore independent of how walkers are sharded across threads.
    static std::uint64_t derive_stream(std::uint64_t seed, std::uint64_t stream) {
        std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace qlump
