// rng.hpp - seed derivation and per-stream random generation.
//
// Every stochastic component draws from an Rng owned by exactly one
// (policy, trial) or (env, trial) stream. Stream seeds are derived from the
// master seed with splitmix64 mixing, so results are independent of how
// trials are scheduled across threads.
#pragma once

#include <cstdint>
#include <random>

namespace linmed {

inline std::uint64_t splitmix64_next(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Mixes an arbitrary list of 64-bit words into one stream seed.
inline std::uint64_t derive_seed(std::initializer_list<std::uint64_t> words) {
    std::uint64_t state = 0x243f6a8885a308d3ULL;  // arbitrary nonzero start
    for (std::uint64_t w : words) {
        state ^= splitmix64_next(state) + w;
        (void)splitmix64_next(state);
    }
    return splitmix64_next(state);
}

// Stream tags keep unrelated consumers of the same (seed, trial) apart.
enum class Stream : std::uint64_t {
    kEnvNoise = 1,
    kPolicy = 2,
    kArmGeneration = 3,
};

class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    double uniform() { return unif_(gen_); }          // [0, 1)
    double normal() { return normal_(gen_); }         // standard normal
    double normal(double mean, double stddev) { return mean + stddev * normal_(gen_); }
    std::uint64_t bits() { return gen_(); }

    // Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) {
        std::uniform_int_distribution<std::uint64_t> d(0, n - 1);
        return d(gen_);
    }

    std::mt19937_64& engine() { return gen_; }

private:
    std::mt19937_64 gen_;
    std::uniform_real_distribution<double> unif_{0.0, 1.0};
    std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace linmed
