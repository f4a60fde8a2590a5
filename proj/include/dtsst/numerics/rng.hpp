#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace dtsst {

/// Seedable generator with a platform-independent stream.
///
/// Bits come from std::mt19937_64, whose output sequence is fixed by the
/// C++ standard. Uniforms use the top 53 bits; Gaussians use the basic
/// Box-Muller transform, emitting the cosine branch first and caching the
/// sine branch for the next call. No std::*_distribution is used because
/// their algorithms are implementation-defined.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : engine_(seed), seed_(seed) {}

    /// Independent stream for (seed, stream) pairs, e.g. one per training iteration.
    static Rng for_stream(std::uint64_t seed, std::uint64_t stream);

    std::uint64_t seed() const { return seed_; }
    std::uint64_t next_u64() { return engine_(); }

    /// Uniform in [0, 1).
    double uniform();
    /// Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    /// Uniform integer in [lo, hi] (inclusive), unbiased by rejection.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);
    double normal();
    bool bernoulli(double p) { return uniform() < p; }

    template <typename T>
    void fill_normal(T* out, std::size_t n, double scale = 1.0) {
        for (std::size_t i = 0; i < n; ++i) {
            out[i] = static_cast<T>(scale * normal());
        }
    }

    template <typename T>
    std::vector<T> normal_vector(std::size_t n, double scale = 1.0) {
        std::vector<T> v(n);
        fill_normal(v.data(), n, scale);
        return v;
    }

private:
    std::mt19937_64 engine_;
    std::uint64_t seed_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

/// SplitMix64 finalizer; used to derive well-separated seeds.
std::uint64_t mix64(std::uint64_t x);

} // namespace dtsst
