#pragma once

#include <cmath>
#include <cstdint>
#include <span>

namespace blp {

// splitmix64 step; used both as a stand-alone mixer and to seed streams.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Deterministic key derivation for per-particle streams: children of a
// particle get keys mix(parent_key, event_index, child_slot), which is
// stable across truncation levels (the same particle sees the same events).
inline std::uint64_t derive_key(std::uint64_t parent, std::uint64_t a, std::uint64_t b) {
    std::uint64_t s = parent ^ (0x9e3779b97f4a7c15ULL * (a + 1));
    splitmix64(s);
    s ^= 0xc2b2ae3d27d4eb4fULL * (b + 1);
    return splitmix64(s);
}

// xoshiro256++ with explicit draw helpers. All distributions are sampled
// through this class so that runs are bit-reproducible given a seed.
class Rng {
public:
    Rng() : Rng(0x853c49e6748fea9bULL) {}

    explicit Rng(std::uint64_t key) {
        std::uint64_t s = key;
        for (auto& w : state_) w = splitmix64(s);
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // uniform on (0,1), never returns an endpoint
    double uniform01() {
        return (static_cast<double>(next_u64() >> 12) + 0.5) * 0x1.0p-52;
    }

    double exponential(double rate) { return -std::log(uniform01()) / rate; }

    // Box-Muller, one normal per call (no caching: keeps per-stream draw
    // counts easy to reason about)
    double normal() {
        const double u1 = uniform01();
        const double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    // inversion by sequential search; fine for the small means we use
    std::uint64_t poisson(double mean) {
        if (mean <= 0.0) return 0;
        double p = std::exp(-mean);
        double cdf = p;
        const double u = uniform01();
        std::uint64_t k = 0;
        while (u > cdf && k < 100000000ULL) {
            ++k;
            p *= mean / static_cast<double>(k);
            cdf += p;
        }
        return k;
    }

    // index into `weights` with probability proportional to weights[i];
    // caller guarantees total > 0
    std::size_t categorical(std::span<const double> weights, double total) {
        double x = uniform01() * total;
        for (std::size_t i = 0; i + 1 < weights.size(); ++i) {
            x -= weights[i];
            if (x <= 0.0) return i;
        }
        return weights.empty() ? 0 : weights.size() - 1;
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    std::uint64_t state_[4];
};

}  // namespace blp
