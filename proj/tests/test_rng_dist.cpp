#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "frogsim/dist.hpp"
#include "frogsim/rng.hpp"

using namespace frogsim;

TEST_CASE("same seed, same sequence") {
    RandomStream a(42), b(42);
    for (int i = 0; i < 1000; ++i) REQUIRE(a.next_u64() == b.next_u64());
}

TEST_CASE("split streams differ from parent and from each other") {
    RandomStream base(7);
    RandomStream s0 = base.split(0);
    RandomStream s1 = base.split(1);
    RandomStream s0_again = base.split(0);
    CHECK(s0.next_u64() != s1.next_u64());
    RandomStream s0b = base.split(0);
    CHECK(s0_again.next_u64() == s0b.next_u64());
}

TEST_CASE("below produces the full range uniformly enough") {
    RandomStream rng(3);
    std::vector<int> counts(7, 0);
    const int n = 70000;
    for (int i = 0; i < n; ++i) ++counts[static_cast<std::size_t>(rng.below(7))];
    for (int c : counts) {
        // 4 standard errors around n/7
        const double expect = n / 7.0;
        const double se = std::sqrt(expect * (1.0 - 1.0 / 7.0));
        CHECK(std::fabs(c - expect) < 4.0 * se);
    }
}

TEST_CASE("poisson sampling has the right moments across regimes") {
    for (double mu : {0.5, 4.0, 29.5, 45.0, 400.0}) {
        RandomStream rng(11);
        const int n = 100000;
        double sum = 0.0, sumsq = 0.0;
        for (int i = 0; i < n; ++i) {
            const double x = static_cast<double>(rng.poisson(mu));
            sum += x;
            sumsq += x * x;
        }
        const double mean = sum / n;
        const double var = sumsq / n - mean * mean;
        const double se_mean = std::sqrt(mu / n);
        INFO("mu = " << mu);
        CHECK(std::fabs(mean - mu) < 4.0 * se_mean);
        CHECK(std::fabs(var - mu) < 0.1 * mu + 6.0 * mu / std::sqrt(static_cast<double>(n)));
    }
}

TEST_CASE("poisson matches the exact pmf at a PTRS-regime mean") {
    RandomStream rng(5);
    const double mu = 50.0;
    const int n = 200000;
    std::vector<int> hist(200, 0);
    for (int i = 0; i < n; ++i) {
        const std::int64_t k = rng.poisson(mu);
        if (k < 200) ++hist[static_cast<std::size_t>(k)];
    }
    for (std::int64_t k : {35, 45, 50, 55, 70}) {
        const double p = std::exp(-mu + k * std::log(mu) - std::lgamma(k + 1.0));
        const double expect = p * n;
        const double se = std::sqrt(expect * (1 - p));
        INFO("k = " << k);
        CHECK(std::fabs(hist[static_cast<std::size_t>(k)] - expect) < 4.5 * se);
    }
}

TEST_CASE("deterministic distribution") {
    RandomStream rng(1);
    const auto d = InitDistribution::deterministic(3);
    for (int i = 0; i < 10; ++i) CHECK(d.sample(rng) == 3);
    CHECK_THROWS_AS(InitDistribution::deterministic(-1), std::invalid_argument);
}

TEST_CASE("extended Bernoulli keeps its support and mean") {
    RandomStream rng(2);
    const auto d = InitDistribution::bernoulli_extended(2.5);
    const int n = 100000;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        const std::int64_t x = d.sample(rng);
        REQUIRE((x == 2 || x == 3));
        sum += static_cast<double>(x);
    }
    const double se = 0.5 / std::sqrt(static_cast<double>(n));
    CHECK(std::fabs(sum / n - 2.5) < 4.0 * se);

    const auto small = InitDistribution::bernoulli_extended(0.3);
    int ones = 0;
    for (int i = 0; i < n; ++i) {
        const std::int64_t x = small.sample(rng);
        REQUIRE((x == 0 || x == 1));
        ones += static_cast<int>(x);
    }
    CHECK(std::fabs(ones / static_cast<double>(n) - 0.3) <
          4.0 * std::sqrt(0.3 * 0.7 / n));

    // Integer mean degenerates to a point mass.
    const auto point = InitDistribution::bernoulli_extended(4.0);
    for (int i = 0; i < 20; ++i) CHECK(point.sample(rng) == 4);
}

TEST_CASE("geometric1 mean") {
    RandomStream rng(9);
    const double p = 0.25;
    const int n = 100000;
    double sum = 0;
    for (int i = 0; i < n; ++i) sum += static_cast<double>(rng.geometric1(p));
    const double mean = sum / n;
    const double sd = std::sqrt((1 - p) / (p * p));
    CHECK(std::fabs(mean - 4.0) < 4.0 * sd / std::sqrt(static_cast<double>(n)));
}
