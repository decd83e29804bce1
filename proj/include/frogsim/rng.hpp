#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <stdexcept>

namespace frogsim {

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& x) {
    std::uint64_t z = (x += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

inline std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
}

}  // namespace detail

/// Deterministic, seedable, splittable random stream (xoshiro256++ state,
/// seeded through splitmix64). Every stochastic operation in the library
/// takes one of these explicitly; identical seed and call sequence give
/// identical output. `split(i)` derives an independent child stream from the
/// parent's seed and the index without consuming parent state, which is what
/// makes trial-level parallelism reproducible regardless of scheduling.
class RandomStream {
public:
    RandomStream() : RandomStream(0) {}

    explicit RandomStream(std::uint64_t seed) : seed_(seed) {
        std::uint64_t x = seed;
        for (auto& w : s_) w = detail::splitmix64(x);
    }

    /// Seed derived by hashing a list of components (seed, stream kind,
    /// identity, ...). Used for per-trial and per-frog streams.
    static std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> parts) {
        std::uint64_t x = base;
        std::uint64_t h = detail::splitmix64(x);
        for (std::uint64_t p : parts) {
            x = h ^ (p + 0x9E3779B97F4A7C15ull + (h << 6) + (h >> 2));
            h = detail::splitmix64(x);
        }
        return h;
    }

    std::uint64_t seed() const { return seed_; }

    RandomStream split(std::uint64_t index) const {
        return RandomStream(derive_seed(seed_, {0xC0FFEEull, index}));
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = detail::rotl(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = detail::rotl(s_[3], 45);
        return result;
    }

    /// Uniform integer in [0, bound). bound must be positive.
    std::uint64_t below(std::uint64_t bound) {
        // Lemire's multiply-shift with rejection for exact uniformity.
        std::uint64_t x = next_u64();
        __uint128_t m = static_cast<__uint128_t>(x) * bound;
        std::uint64_t lo = static_cast<std::uint64_t>(m);
        if (lo < bound) {
            std::uint64_t threshold = -bound % bound;
            while (lo < threshold) {
                x = next_u64();
                m = static_cast<__uint128_t>(x) * bound;
                lo = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

    /// Uniform double in [0, 1).
    double u01() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    bool bernoulli(double p) {
        if (p <= 0.0) return false;
        if (p >= 1.0) return true;
        return u01() < p;
    }

    /// Geometric on {1,2,...} with success probability p.
    std::int64_t geometric1(double p) {
        if (p <= 0.0 || p > 1.0) throw std::invalid_argument("geometric1: p must be in (0,1]");
        if (p == 1.0) return 1;
        double u = u01();
        while (u == 0.0) u = u01();
        return 1 + static_cast<std::int64_t>(std::floor(std::log(u) / std::log1p(-p)));
    }

    /// Exact Poisson(mu). Sequential inversion below mu = 30, Hormann's PTRS
    /// transformed rejection above; both sample the exact law.
    std::int64_t poisson(double mu) {
        if (mu < 0.0 || !std::isfinite(mu)) throw std::invalid_argument("poisson: mean must be finite and >= 0");
        if (mu == 0.0) return 0;
        if (mu < 30.0) return poisson_inversion(mu);
        return poisson_ptrs(mu);
    }

private:
    std::int64_t poisson_inversion(double mu) {
        double p = std::exp(-mu);
        double cumulative = p;
        double u = u01();
        std::int64_t k = 0;
        while (u > cumulative) {
            ++k;
            p *= mu / static_cast<double>(k);
            cumulative += p;
            if (k > 2048) break;  // cumulative ~ 1 long before this at mu < 30
        }
        return k;
    }

    std::int64_t poisson_ptrs(double mu) {
        const double log_mu = std::log(mu);
        const double b = 0.931 + 2.53 * std::sqrt(mu);
        const double a = -0.059 + 0.02483 * b;
        const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
        const double v_r = 0.9277 - 3.6224 / (b - 2.0);
        for (;;) {
            const double u = u01() - 0.5;
            const double v = u01();
            const double us = 0.5 - std::fabs(u);
            const double kf = std::floor((2.0 * a / us + b) * u + mu + 0.43);
            if (us >= 0.07 && v <= v_r) return static_cast<std::int64_t>(kf);
            if (kf < 0.0 || (us < 0.013 && v > us)) continue;
            const double k = kf;
            if (std::log(v * inv_alpha / (a / (us * us) + b)) <=
                k * log_mu - mu - std::lgamma(k + 1.0)) {
                return static_cast<std::int64_t>(kf);
            }
        }
    }

    std::uint64_t seed_;
    std::uint64_t s_[4];
};

}  // namespace frogsim
