#pragma once

// Counter-based random numbers for reproducible parallel simulation.
// Every draw is a pure function of (seed, path index, counter), so an
// ensemble partitioned across any number of threads produces bit-identical
// output, and skipping a channel never shifts another channel's stream.

#include <cmath>
#include <cstdint>

namespace ruinopt::mc {

// SplitMix64 finalizer (Stafford mix 13).
inline std::uint64_t mix64(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ULL;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBULL;
    z ^= z >> 31;
    return z;
}

class CounterRng {
public:
    static CounterRng for_path(std::uint64_t seed, std::uint64_t path_index) {
        CounterRng r;
        r.key_ = mix64(seed + 0x9E3779B97F4A7C15ULL * (path_index + 1));
        return r;
    }

    std::uint64_t bits(std::uint64_t counter) const {
        return mix64(key_ + 0x9E3779B97F4A7C15ULL * (counter + 1));
    }

    // Uniform draw in the open interval (0, 1).
    double uniform(std::uint64_t counter) const {
        return (static_cast<double>(bits(counter) >> 11) + 0.5) * 0x1.0p-53;
    }

private:
    std::uint64_t key_ = 0;
};

// Streams standard normals indexed by step. Steps must be consumed in order
// starting at 0; normals come in Box-Muller pairs generated from counters
// (4*step, 4*step + 1) of the even step, so the value at a given step depends
// only on (seed, path, step).
class NormalStream {
public:
    explicit NormalStream(CounterRng rng) : rng_(rng) {}

    double next(std::uint64_t step) {
        if (step % 2 == 1 && has_cached_) {
            has_cached_ = false;
            return cached_;
        }
        const std::uint64_t even = step - step % 2;
        const double u1 = rng_.uniform(4 * even);
        const double u2 = rng_.uniform(4 * even + 1);
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * 3.14159265358979323846 * u2;
        if (step % 2 == 1) return r * std::sin(a);
        cached_ = r * std::sin(a);
        has_cached_ = true;
        return r * std::cos(a);
    }

private:
    CounterRng rng_;
    double cached_ = 0;
    bool has_cached_ = false;
};

}  // namespace ruinopt::mc
