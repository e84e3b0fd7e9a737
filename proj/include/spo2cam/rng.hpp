/**
 * @file rng.hpp
 * @brief Seeded random number generation with explicit value mappings.
 *
 * std::mt19937_64 provides the raw stream; the uniform/normal mappings are
 * spelled out here instead of using std::*_distribution so that a given seed
 * produces the same values on every standard library.
 */

#ifndef SPO2CAM_RNG_HPP
#define SPO2CAM_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace spo2cam {

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed), seed_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform in [0, 1) with 53-bit resolution.
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n).
    std::uint64_t uniform_index(std::uint64_t n) {
        // Rejection sampling to avoid modulo bias.
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return x % n;
    }

    /// Standard normal via Box-Muller (one value per call, no cached spare).
    double normal() {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
    }

    double normal(double mean, double sigma) { return mean + sigma * normal(); }

    /// Fisher-Yates shuffle.
    template <typename T>
    void shuffle(std::vector<T>& items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(uniform_index(i));
            std::swap(items[i - 1], items[j]);
        }
    }

    /// Derive an independent child stream. SplitMix64 finalizer keeps
    /// low-entropy (seed, salt) pairs well separated.
    Rng derive(std::uint64_t salt) const {
        std::uint64_t z = seed_ + salt * 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        z = z ^ (z >> 31);
        return Rng(z);
    }

private:
    std::mt19937_64 engine_;
    std::uint64_t seed_ = 0;
};

} // namespace spo2cam

#endif // SPO2CAM_RNG_HPP
