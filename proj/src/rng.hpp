#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

// Seedable randomness used across the project.
//
// std::mt19937_64 is fully specified by the standard, so sequences are
// reproducible across toolchains. The std <random> *distributions* are not;
// every mapping from raw engine output to floats here is written out by hand
// for the same reason (checkpoints and logs must be bit-stable).

namespace fseg::rng {

/// splitmix64 finalizer: a cheap, well-mixed 64-bit hash.
inline uint64_t splitmix64(uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

/// Derive an independent sub-seed from (seed, stream index).
inline uint64_t mix(uint64_t seed, uint64_t stream) {
    return splitmix64(splitmix64(seed) ^ (stream + 0x9E3779B97F4A7C15ull));
}

/// Uniform in [0,1) with exactly the 24 bits a float mantissa can hold.
inline float unit_float(uint64_t bits) {
    return float(bits >> 40) * (1.0f / 16777216.0f);
}

/// Uniform double in [0,1) from the top 53 bits.
inline double unit_double(uint64_t bits) {
    return double(bits >> 11) * (1.0 / 9007199254740992.0);
}

template <class Engine>
float uniform(Engine& eng, float lo, float hi) {
    return lo + (hi - lo) * unit_float(eng());
}

/// Hand-rolled Fisher–Yates shuffle (std::shuffle is implementation-defined).
template <class T, class Engine>
void fisher_yates(std::vector<T>& v, Engine& eng) {
    for (size_t i = v.size(); i > 1; --i) {
        size_t j = size_t(eng() % i);
        std::swap(v[i - 1], v[j]);
    }
}

/// Counter-based generator: value i of stream s under seed k is a pure
/// function of (k, s, i). Scene synthesis uses this so every pixel and
/// lattice node is reproducible regardless of evaluation order.
class CounterRng {
public:
    CounterRng(uint64_t seed, uint64_t stream) : base_(mix(seed, stream)) {}

    uint64_t u64(uint64_t counter) const {
        return splitmix64(base_ + counter * 0x9E3779B97F4A7C15ull);
    }

    double uniform(uint64_t counter) const { return unit_double(u64(counter)); }

    /// Standard normal via Box–Muller; one draw consumes two hash values.
    double normal(uint64_t counter) const {
        double u1 = double((u64(2 * counter) >> 11) + 1) * (1.0 / 9007199254740993.0); // (0,1]
        double u2 = unit_double(u64(2 * counter + 1));                                 // [0,1)
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }

private:
    uint64_t base_;
};

} // namespace fseg::rng
