#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace epivolt {

// Finalizer from the splitmix64 generator; used to decorrelate seeds.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Seed of the independent stream for replicate r of an ensemble keyed by a
/// master seed.
inline std::uint64_t replicate_seed(std::uint64_t master_seed, std::uint64_t replicate) {
    return splitmix64(master_seed) ^ splitmix64(replicate + 0x517cc1b727220a95ULL);
}

/// Randomness source owned by a single replicate / caller. All samplers in
/// this project draw through this class (never through std:: distributions),
/// so a given seed produces the same stream on every platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

    static Rng for_replicate(std::uint64_t master_seed, std::uint64_t replicate) {
        return Rng(replicate_seed(master_seed, replicate));
    }

    /// Uniform on [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Exponential with the given rate; rate must be positive.
    double exponential(double rate) { return -std::log1p(-uniform()) / rate; }

    std::uint64_t raw() { return engine_(); }

private:
    std::mt19937_64 engine_;
};

} // namespace epivolt
