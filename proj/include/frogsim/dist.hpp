#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

#include "frogsim/rng.hpp"

namespace frogsim {

/// Menu of per-vertex sleeping-frog count distributions.
///
/// BernoulliExtended(mu) is Bernoulli(mu) for mu <= 1 and, for mu > 1, the
/// unique distribution on {floor(mu), ceil(mu)} with mean exactly mu.
class InitDistribution {
public:
    enum class Kind { Poisson, BernoulliExtended, Deterministic };

    static InitDistribution poisson(double mu) {
        require_mean(mu);
        return InitDistribution(Kind::Poisson, mu, 0);
    }

    static InitDistribution bernoulli_extended(double mu) {
        require_mean(mu);
        return InitDistribution(Kind::BernoulliExtended, mu, 0);
    }

    static InitDistribution deterministic(std::int64_t k) {
        if (k < 0) throw std::invalid_argument("InitDistribution: count must be >= 0");
        return InitDistribution(Kind::Deterministic, static_cast<double>(k), k);
    }

    Kind kind() const { return kind_; }
    double mean() const { return mu_; }
    std::int64_t deterministic_count() const { return count_; }

    std::int64_t sample(RandomStream& rng) const {
        switch (kind_) {
            case Kind::Poisson:
                return rng.poisson(mu_);
            case Kind::BernoulliExtended: {
                if (mu_ <= 1.0) return rng.bernoulli(mu_) ? 1 : 0;
                const double fl = std::floor(mu_);
                return static_cast<std::int64_t>(fl) + (rng.bernoulli(mu_ - fl) ? 1 : 0);
            }
            case Kind::Deterministic:
                return count_;
        }
        throw std::logic_error("InitDistribution: unreachable");
    }

    std::string name() const {
        switch (kind_) {
            case Kind::Poisson: return "poisson";
            case Kind::BernoulliExtended: return "bernoulli-extended";
            case Kind::Deterministic: return "deterministic";
        }
        return "?";
    }

    bool operator==(const InitDistribution& o) const {
        return kind_ == o.kind_ && mu_ == o.mu_ && count_ == o.count_;
    }

private:
    InitDistribution(Kind kind, double mu, std::int64_t count)
        : kind_(kind), mu_(mu), count_(count) {}

    static void require_mean(double mu) {
        if (!(mu >= 0.0) || !std::isfinite(mu))
            throw std::invalid_argument("InitDistribution: mean must be finite and >= 0");
    }

    Kind kind_;
    double mu_;
    std::int64_t count_;
};

}  // namespace frogsim
