#pragma once

#include <cstdint>
#include <cmath>

#include "hsk/vec3.hpp"

namespace hsk {

/// Splittable counter-keyed random stream.
///
/// Every stream is identified by a 64-bit key; split(i) derives an
/// independent child stream deterministically, so ensembles can be mapped
/// over workers in any order while staying bitwise reproducible. The core
/// generator is xoshiro256++ seeded from the key via splitmix64, and all
/// variates (gaussian, sphere, poisson) are produced by fixed in-house
/// algorithms rather than libstdc++ distributions, which keeps the byte
/// streams stable across standard library versions.
class RngStream {
public:
    explicit RngStream(std::uint64_t key = 0) : key_(key) {
        std::uint64_t s = key;
        for (auto& w : state_) w = splitmix64(s);
    }

    std::uint64_t key() const { return key_; }

    /// Independent child stream; (key, index) -> child key is injective in practice.
    RngStream split(std::uint64_t index) const {
        std::uint64_t s = key_ ^ (0x9E3779B97F4A7C15ull * (index + 1));
        return RngStream(splitmix64(s));
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

    /// Uniform in [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double a, double b) { return a + (b - a) * uniform(); }

    /// Standard normal (polar Box-Muller, one value cached).
    double gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double m = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * m;
        have_spare_ = true;
        return u * m;
    }

    /// Uniform point on the unit sphere S^2.
    Vec3 unit_sphere() {
        const double z = 1.0 - 2.0 * uniform();
        const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
        const double phi = 2.0 * M_PI * uniform();
        return {r * std::cos(phi), r * std::sin(phi), z};
    }

    /// Exponential with unit rate.
    double exponential() { return -std::log1p(-uniform()); }

    /// Exact Poisson sample by counting unit-rate arrivals (adequate for
    /// means up to a few thousand).
    long long poisson(double mean) {
        long long k = -1;
        double s = 0.0;
        do {
            s += exponential();
            ++k;
        } while (s < mean);
        return k;
    }

private:
    static constexpr std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }
    static std::uint64_t splitmix64(std::uint64_t& s) {
        std::uint64_t z = (s += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    std::uint64_t key_;
    std::uint64_t state_[4] = {};
    double spare_ = 0.0;
    bool have_spare_ = false;
};

/// Maxwellian velocity with inverse temperature beta: each component is
/// Gaussian with variance 1/beta.
Vec3 sample_maxwellian(double beta, RngStream& rng);

} // namespace hsk
