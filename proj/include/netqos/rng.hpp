#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace netqos {

// All randomness in the project goes through splitmix64 (Steele, Lea & Flood,
// "Fast splittable pseudorandom number generators", OOPSLA 2014). Streams are
// keyed by (seed, channel, a, b) plus a draw counter, so draws are independent
// of iteration order and reproduce bit-for-bit on any platform. Gaussian draws
// use Box-Muller on explicit 53-bit uniforms; std:: distributions are avoided
// because their output is implementation-defined.

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

inline std::uint64_t mix_key(std::uint64_t seed, std::uint64_t channel,
                             std::uint64_t a = 0, std::uint64_t b = 0) {
    std::uint64_t h = splitmix64(seed ^ 0x6A09E667F3BCC909ULL);
    h = splitmix64(h ^ channel);
    h = splitmix64(h ^ a);
    h = splitmix64(h ^ b);
    return h;
}

/// Counter-based stream: draw i is splitmix64(key + i).
class KeyedRng {
public:
    explicit KeyedRng(std::uint64_t key) : key_(key) {}

    KeyedRng(std::uint64_t seed, std::uint64_t channel, std::uint64_t a = 0, std::uint64_t b = 0)
        : key_(mix_key(seed, channel, a, b)) {}

    std::uint64_t next_u64() { return splitmix64(key_ + counter_++); }

    /// Uniform in [0, 1), 53-bit resolution.
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Uniform in (0, 1]; safe as a log argument.
    double uniform_open() {
        return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller; consumes two draws per call.
    double normal() {
        double u1 = uniform_open();
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
    }

    /// Mean-one lognormal: exp(sigma * Z - sigma^2 / 2).
    double lognormal_unit(double sigma) {
        return std::exp(sigma * normal() - 0.5 * sigma * sigma);
    }

    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) { return n ? next_u64() % n : 0; }

    bool bernoulli(double p) { return uniform() < p; }

    std::uint64_t key() const { return key_; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

/// Deterministic in-place Fisher-Yates shuffle driven by a keyed stream.
template <typename T>
void keyed_shuffle(std::vector<T>& v, KeyedRng rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        std::size_t j = static_cast<std::size_t>(rng.below(i));
        std::swap(v[i - 1], v[j]);
    }
}

} // namespace netqos
