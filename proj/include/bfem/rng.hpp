#ifndef BFEM_RNG_HPP
#define BFEM_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>

#include "bfem/types.hpp"

namespace bfem {

/// Seedable generator with explicit sampling transforms. Distributions are
/// implemented by hand (Box-Muller, scaled uniforms) so a given seed yields
/// the same stream on every platform, which std::normal_distribution does
/// not guarantee.
class Rng {
   public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double uniform() {
        // 53-bit mantissa in [0, 1)
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    /// Uniform integer in [0, bound) via rejection sampling.
    std::uint64_t uniform_int(std::uint64_t bound) {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
        std::uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return x % bound;
    }

    double gaussian() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1, u2;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * M_PI * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    Vector gaussian_vector(int n) {
        Vector v(n);
        for (int i = 0; i < n; ++i) v[i] = gaussian();
        return v;
    }

    /// Index sampled from unnormalized non-negative weights.
    int discrete(const Vector& weights) {
        const double total = weights.sum();
        double t = uniform() * total;
        for (int i = 0; i < weights.size(); ++i) {
            t -= weights[i];
            if (t <= 0.0) return i;
        }
        return static_cast<int>(weights.size()) - 1;
    }

   private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace bfem

#endif
