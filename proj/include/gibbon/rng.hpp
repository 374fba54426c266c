#pragma once

#include "gibbon/types.hpp"

#include <cmath>
#include <cstdint>
#include <random>

namespace gibbon {

// Deterministic random source. The raw engine is std::mt19937_64 but all
// variate transforms are done here with fixed arithmetic, so identical seeds
// give identical streams on any platform (std::*_distribution makes no such
// promise and would break byte-identical trace files).
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    // SplitMix64 mix of (seed, stream); use to hand independent streams to
    // sub-tasks without correlating them.
    static std::uint64_t derive(std::uint64_t seed, std::uint64_t stream) {
        std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (stream + 1);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    // Uniform on [0, 1).
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Standard normal via Box-Muller; the spare draw is cached.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        double u2 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925287 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    Vector normal_vector(int n) {
        Vector v(n);
        for (int i = 0; i < n; ++i) v[i] = normal();
        return v;
    }

    Vector uniform_vector(const Box& box) {
        Vector v(box.dim());
        for (int i = 0; i < box.dim(); ++i) v[i] = uniform(box.lo[i], box.hi[i]);
        return v;
    }

    // Uniform integer in [0, bound).
    std::uint64_t integer(std::uint64_t bound) {
        // Rejection to avoid modulo bias; bound is tiny in practice.
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
        std::uint64_t x = engine_();
        while (x >= limit) x = engine_();
        return x % bound;
    }

  private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace gibbon
