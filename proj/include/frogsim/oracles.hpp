#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "frogsim/tree.hpp"
#include "frogsim/walk.hpp"

namespace frogsim {

// ---------------------------------------------------------------------------
// Hitting-time linear solves
// ---------------------------------------------------------------------------

/// Path graph with weighted edges; a walker at node i moves to a neighbor
/// with probability proportional to the edge weight. This is the symmetry
/// quotient used for spine excursion times: the tree collapses to a chain
/// after identifying vertices at equal depth.
struct WeightedChain {
    std::vector<double> edge_weights;  // weight between node i and i+1
    std::size_t node_count() const { return edge_weights.size() + 1; }
};

/// Expected steps for the chain walker from `start` to hit any node in
/// `targets`. Direct tridiagonal elimination; exact up to roundoff.
inline double expected_hitting_time(const WeightedChain& chain, std::size_t start,
                                    const std::vector<std::size_t>& targets) {
    const std::size_t n = chain.node_count();
    if (n < 2) throw std::invalid_argument("expected_hitting_time: chain too small");
    if (start >= n) throw std::invalid_argument("expected_hitting_time: start out of range");
    if (targets.empty()) throw std::invalid_argument("expected_hitting_time: no targets");
    std::vector<char> is_target(n, 0);
    for (std::size_t t : targets) {
        if (t >= n) throw std::invalid_argument("expected_hitting_time: target out of range");
        is_target[t] = 1;
    }
    for (double w : chain.edge_weights)
        if (!(w > 0.0)) throw std::invalid_argument("expected_hitting_time: weights must be positive");
    if (is_target[start]) return 0.0;

    // E[i] = 1 + pl*E[i-1] + pr*E[i+1] for non-targets, E = 0 at targets.
    // Forward sweep expresses E[i] = a[i] + b[i]*E[i+1].
    std::vector<double> a(n, 0.0), b(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        if (is_target[i]) { a[i] = 0.0; b[i] = 0.0; continue; }
        const double wl = (i > 0) ? chain.edge_weights[i - 1] : 0.0;
        const double wr = (i + 1 < n) ? chain.edge_weights[i] : 0.0;
        const double tot = wl + wr;
        if (tot <= 0.0) throw std::invalid_argument("expected_hitting_time: isolated node");
        const double pl = wl / tot, pr = wr / tot;
        if (i == 0) { a[i] = 1.0; b[i] = pr; continue; }
        const double denom = 1.0 - pl * b[i - 1];
        if (std::fabs(denom) < 1e-300)
            throw std::runtime_error("expected_hitting_time: target unreachable");
        a[i] = (1.0 + pl * a[i - 1]) / denom;
        b[i] = pr / denom;
    }
    // Backward sweep. The last node's equation must close on its own.
    std::vector<double> e(n, 0.0);
    if (!is_target[n - 1]) {
        if (std::fabs(1.0 - b[n - 1]) < 1e-12 && b[n - 1] != 0.0)
            throw std::runtime_error("expected_hitting_time: target unreachable");
        e[n - 1] = a[n - 1];
    }
    for (std::size_t i = n - 1; i-- > 0;) {
        e[i] = is_target[i] ? 0.0 : a[i] + b[i] * e[i + 1];
    }
    return e[start];
}

/// The weighted-chain quotient for the excursion from spine vertex v_k:
/// node 0 is the identified pair {v_{k-1}, v_{k+1}}, node 1 is v_k, and
/// node 1+m identifies the depth-m descendants of v_k that avoid v_{k-1}.
inline WeightedChain spine_excursion_chain(std::int64_t d, std::int64_t k) {
    if (d < 2 || k < 1) throw std::invalid_argument("spine_excursion_chain: need d >= 2, k >= 1");
    WeightedChain chain;
    chain.edge_weights.push_back(2.0);
    double w = static_cast<double>(d - 1);
    for (std::int64_t m = 1; m <= k; ++m) {
        chain.edge_weights.push_back(w);
        w *= static_cast<double>(d);
    }
    return chain;
}

/// Expected steps for simple random walk from v_k to hit {v_{k-1}, v_{k+1}},
/// via the chain quotient. Note: a closed form d^(k-1)(d-1)/2 is sometimes
/// quoted for this quantity, but it does not match first-step analysis
/// (d = 2, k = 1 gives 2, not 1/2); the solver value is authoritative here.
inline double expected_tau_spine(std::int64_t d, std::int64_t k) {
    const WeightedChain chain = spine_excursion_chain(d, k);
    return expected_hitting_time(chain, 1, {0});
}

/// Expected hitting time of `targets` for simple random walk on the tree,
/// from `start`. Tree-structured elimination: children are expressed in
/// terms of their parent bottom-up, then values propagate top-down. O(V).
inline double expected_hitting_time(const TreeShape& shape, VertexId start,
                                    const std::vector<VertexId>& targets) {
    shape.require_valid(start);
    if (targets.empty()) throw std::invalid_argument("expected_hitting_time: no targets");
    const std::int64_t V = shape.vertex_count();
    std::vector<char> is_target(static_cast<std::size_t>(V), 0);
    for (VertexId t : targets) {
        shape.require_valid(t);
        is_target[static_cast<std::size_t>(t)] = 1;
    }
    if (is_target[static_cast<std::size_t>(start)]) return 0.0;

    const std::int64_t d = shape.degree();
    const std::int64_t H = shape.heap_count();
    // E[v] = a[v] + b[v] * E[parent(v)] for heap vertices (parent of root is
    // a dummy; b[root] stays 0). y is folded into the root's equation.
    std::vector<double> a(static_cast<std::size_t>(V), 0.0), b(static_cast<std::size_t>(V), 0.0);

    double y_a = 0.0, y_b = 0.0;  // E[y] = y_a + y_b * E[root]
    if (shape.has_y()) {
        if (is_target[static_cast<std::size_t>(shape.y_index())]) { y_a = 0.0; y_b = 0.0; }
        else { y_a = 1.0; y_b = 1.0; }
    }

    for (VertexId v = H - 1; v >= 0; --v) {
        const std::size_t vi = static_cast<std::size_t>(v);
        if (is_target[vi]) { a[vi] = 0.0; b[vi] = 0.0; continue; }
        if (shape.is_leaf(v)) { a[vi] = 1.0; b[vi] = 1.0; continue; }
        double sum_a = 0.0, sum_b = 0.0;
        for (std::int64_t i = 0; i < d; ++i) {
            const std::size_t c = static_cast<std::size_t>(shape.child(v, i));
            sum_a += a[c];
            sum_b += b[c];
        }
        if (v == 0) {
            const double deg = static_cast<double>(d + (shape.has_y() ? 1 : 0));
            const double denom = 1.0 - (sum_b + (shape.has_y() ? y_b : 0.0)) / deg;
            if (std::fabs(denom) < 1e-12)
                throw std::runtime_error("expected_hitting_time: target unreachable");
            a[vi] = (1.0 + (sum_a + (shape.has_y() ? y_a : 0.0)) / deg) / denom;
            b[vi] = 0.0;
        } else {
            const double deg = static_cast<double>(d + 1);
            const double denom = 1.0 - sum_b / deg;
            if (std::fabs(denom) < 1e-300)
                throw std::runtime_error("expected_hitting_time: degenerate elimination");
            a[vi] = (1.0 + sum_a / deg) / denom;
            b[vi] = (1.0 / deg) / denom;
        }
    }
    // Top-down: E[root] = a[0]; E[child] = a + b * E[parent].
    if (start == 0) return a[0];
    std::vector<double> e(static_cast<std::size_t>(V), 0.0);
    e[0] = a[0];
    for (VertexId v = 1; v < H; ++v) {
        const std::size_t vi = static_cast<std::size_t>(v);
        e[vi] = is_target[vi] ? 0.0 : a[vi] + b[vi] * e[static_cast<std::size_t>(shape.parent(v))];
    }
    if (shape.is_y(start)) return y_a + y_b * e[0];
    return e[static_cast<std::size_t>(start)];
}

// ---------------------------------------------------------------------------
// Spine gambler's-ruin formulas
// ---------------------------------------------------------------------------

struct SpineFormulas {
    double p_hit;            // P[sigma_k < sigma_{J+1}] from v_J
    double expected_visits;  // E[V_k | sigma_0 < sigma_{J+1}]
};

/// p_hit = 1/(J+1-k); expected visits to v_k before hitting v_0, conditioned
/// on reaching v_0 before v_{J+1}, equals 2k(1 - k/(J+1)).
inline SpineFormulas spine_formulas(std::int64_t J, std::int64_t k) {
    if (J < 1 || k < 1 || k > J) throw std::invalid_argument("spine_formulas: need 1 <= k <= J");
    const double j1 = static_cast<double>(J + 1);
    const double kd = static_cast<double>(k);
    return SpineFormulas{1.0 / (j1 - kd), 2.0 * kd * (1.0 - kd / j1)};
}

// ---------------------------------------------------------------------------
// Supermartingale roots and branching-random-walk bounds
// ---------------------------------------------------------------------------

struct ThetaRoots {
    double theta0;
    double theta1;
};

inline double theta_discriminant_threshold(std::int64_t d) {
    const double dd = static_cast<double>(d);
    return (dd - 1.0) * (dd - 1.0) / (4.0 * dd);
}

/// Roots of theta^2 - (d+1) theta + (1+mu) d = 0; the weighted particle
/// functional sum theta^{-level} is a supermartingale at either root.
/// Requires mu <= (d-1)^2 / 4d for real roots.
inline ThetaRoots theta_roots(std::int64_t d, double mu) {
    if (d < 2) throw std::invalid_argument("theta_roots: need d >= 2");
    if (mu < 0.0) throw std::invalid_argument("theta_roots: need mu >= 0");
    const double dd = static_cast<double>(d);
    const double disc = (dd + 1.0) * (dd + 1.0) - 4.0 * (1.0 + mu) * dd;
    if (disc < -1e-12)
        throw std::domain_error("theta_roots: mu above (d-1)^2/4d, roots not real");
    const double s = std::sqrt(std::max(disc, 0.0));
    return ThetaRoots{(dd + 1.0 - s) / 2.0, (dd + 1.0 + s) / 2.0};
}

struct BrwBounds {
    double en_root;   // bound on E[frozen at level h], start at root
    double ex_root;   // bound on E[frozen at y], start at root
    double en_level;  // bound on E[frozen at level h], start at level h-1
    double ex_level;  // bound on E[frozen at y], start at level h-1
};

inline BrwBounds brw_bound_values(std::int64_t d, double mu, std::int64_t h) {
    if (h < 0) throw std::invalid_argument("brw_bound_values: need h >= 0");
    if (mu < 0.0 || mu > theta_discriminant_threshold(d) + 1e-15)
        throw std::domain_error("brw_bound_values: mu outside [0, (d-1)^2/4d]");
    const double dd = static_cast<double>(d);
    const double up = 1.0 + 2.0 * dd * mu / (dd - 1.0);
    const double down = dd * (1.0 - 2.0 * mu / (dd - 1.0));
    return BrwBounds{std::pow(up, static_cast<double>(h)), 1.0 / down, up,
                     std::pow(down, -static_cast<double>(h))};
}

// ---------------------------------------------------------------------------
// Index formulas
// ---------------------------------------------------------------------------

/// J = floor(log_d n + log_d(ln n) + 5 log_d 10 - log_d beta). The inner log
/// is natural. May be <= 0 at small n; callers clamp as needed.
inline std::int64_t j_index(std::int64_t d, std::int64_t n, double beta) {
    if (d < 2 || n < 2 || !(beta > 0.0))
        throw std::invalid_argument("j_index: need d >= 2, n >= 2, beta > 0");
    const long double ld = std::log(static_cast<long double>(d));
    const long double value =
        (std::log(static_cast<long double>(n)) +
         std::log(std::log(static_cast<long double>(n))) +
         5.0L * std::log(10.0L) - std::log(static_cast<long double>(beta))) /
        ld;
    return static_cast<std::int64_t>(std::floor(value));
}

/// Sanity identity implied by the floor: d^J >= 10^5 n ln n / (beta d).
inline bool j_index_identity_holds(std::int64_t d, std::int64_t n, double beta) {
    const std::int64_t J = j_index(d, n, beta);
    const long double lhs = static_cast<long double>(J) * std::log(static_cast<long double>(d));
    const long double rhs =
        std::log(1e5L * static_cast<long double>(n) * std::log(static_cast<long double>(n)) /
                 static_cast<long double>(beta) / static_cast<long double>(d));
    return lhs >= rhs - 1e-9L;
}

/// H_1 = 1; H_j = ceil(C j (ln(1+mu) + j) / ln(d/(1+mu))) for j >= 2.
inline std::int64_t h_sequence(std::int64_t d, double mu, double c_induction, std::int64_t j) {
    if (j < 1) throw std::invalid_argument("h_sequence: need j >= 1");
    if (!(mu >= 0.0)) throw std::invalid_argument("h_sequence: need mu >= 0");
    if (mu >= static_cast<double>(d) - 1.0)
        throw std::domain_error("h_sequence: need mu < d - 1");
    if (j == 1) return 1;
    const double num = c_induction * static_cast<double>(j) *
                       (std::log1p(mu) + static_cast<double>(j));
    const double den = std::log(static_cast<double>(d) / (1.0 + mu));
    return static_cast<std::int64_t>(std::ceil(num / den - 1e-12));
}

/// Low-density exponent eps = 1 - log_d(mu), clipped to (0, 1].
inline double epsilon_param(std::int64_t d, double mu) {
    if (mu <= 0.0) return 1.0;
    const double eps = 1.0 - std::log(mu) / std::log(static_cast<double>(d));
    return std::min(1.0, std::max(eps, std::numeric_limits<double>::min()));
}

// ---------------------------------------------------------------------------
// Exact reference distributions (used to validate the closed-form bounds)
// ---------------------------------------------------------------------------

inline double poisson_pmf(double lambda, std::int64_t k) {
    if (k < 0) return 0.0;
    if (lambda == 0.0) return k == 0 ? 1.0 : 0.0;
    return std::exp(-lambda + static_cast<double>(k) * std::log(lambda) -
                    std::lgamma(static_cast<double>(k) + 1.0));
}

/// P[Poi(lambda) <= k].
inline double poisson_cdf(double lambda, std::int64_t k) {
    if (k < 0) return 0.0;
    double sum = 0.0;
    for (std::int64_t i = 0; i <= k; ++i) sum += poisson_pmf(lambda, i);
    return std::min(sum, 1.0);
}

inline double binomial_pmf(std::int64_t n, double p, std::int64_t k) {
    if (k < 0 || k > n) return 0.0;
    if (p <= 0.0) return k == 0 ? 1.0 : 0.0;
    if (p >= 1.0) return k == n ? 1.0 : 0.0;
    const double lc = std::lgamma(static_cast<double>(n) + 1.0) -
                      std::lgamma(static_cast<double>(k) + 1.0) -
                      std::lgamma(static_cast<double>(n - k) + 1.0);
    return std::exp(lc + static_cast<double>(k) * std::log(p) +
                    static_cast<double>(n - k) * std::log1p(-p));
}

/// P[Bin(n, p) <= k].
inline double binomial_cdf(std::int64_t n, double p, std::int64_t k) {
    if (k < 0) return 0.0;
    if (k >= n) return 1.0;
    double sum = 0.0;
    for (std::int64_t i = 0; i <= k; ++i) sum += binomial_pmf(n, p, i);
    return std::min(sum, 1.0);
}

/// Exact P[Z <= z0] where Z is the number of occupied bins after m uniform
/// independent ball placements into n bins. Sequential-placement recursion;
/// exact integer arithmetic when n^m fits in 128 bits, double otherwise.
inline double balls_bins_exact_cdf(std::int64_t m, std::int64_t n, std::int64_t z0) {
    if (m < 0 || n < 1) throw std::invalid_argument("balls_bins_exact_cdf: bad m or n");
    if (z0 < 0) return 0.0;
    const double bits = static_cast<double>(m) * std::log2(static_cast<double>(n));
    if (bits < 126.0) {
        std::vector<unsigned __int128> cnt(static_cast<std::size_t>(n) + 1, 0);
        cnt[0] = 1;
        for (std::int64_t i = 0; i < m; ++i) {
            for (std::int64_t z = std::min<std::int64_t>(n, i + 1); z >= 1; --z) {
                cnt[static_cast<std::size_t>(z)] =
                    cnt[static_cast<std::size_t>(z)] * static_cast<unsigned __int128>(z) +
                    cnt[static_cast<std::size_t>(z - 1)] *
                        static_cast<unsigned __int128>(n - (z - 1));
            }
            cnt[0] = 0;
        }
        unsigned __int128 total = 0, below = 0;
        for (std::int64_t z = 0; z <= n; ++z) {
            total += cnt[static_cast<std::size_t>(z)];
            if (z <= z0) below += cnt[static_cast<std::size_t>(z)];
        }
        return static_cast<double>(below) / static_cast<double>(total);
    }
    std::vector<double> p(static_cast<std::size_t>(n) + 1, 0.0);
    p[0] = 1.0;
    for (std::int64_t i = 0; i < m; ++i) {
        for (std::int64_t z = std::min<std::int64_t>(n, i + 1); z >= 1; --z) {
            p[static_cast<std::size_t>(z)] =
                p[static_cast<std::size_t>(z)] * (static_cast<double>(z) / n) +
                p[static_cast<std::size_t>(z - 1)] * (static_cast<double>(n - (z - 1)) / n);
        }
        p[0] = 0.0;
    }
    double below = 0.0;
    for (std::int64_t z = 0; z <= z0 && z <= n; ++z) below += p[static_cast<std::size_t>(z)];
    return below;
}

/// Exact P[G_1 + ... + G_n >= m] for i.i.d. geometric on {1,2,...} with
/// parameter p: the sum exceeds m-1 trials iff fewer than n successes occur
/// in the first m-1 trials.
inline double geometric_sum_tail_exact(std::int64_t n, double p, std::int64_t m) {
    if (m <= n) return 1.0;
    return binomial_cdf(m - 1, p, n - 1);
}

/// P[exists i >= k : X_i < gamma2 * i] for independent X_i ~ Poi(gamma1 * i),
/// the concrete joint law used to validate the union bound. Terms decay
/// geometrically; truncated when the remaining union-bound mass < 1e-15.
inline double poisson_sequence_exact_independent(double gamma1, double gamma2, std::int64_t k) {
    double log_none = 0.0;  // log P[no index violates]
    for (std::int64_t i = k;; ++i) {
        const double need = gamma2 * static_cast<double>(i);
        const std::int64_t kk = static_cast<std::int64_t>(std::ceil(need)) - 1;
        const double qi = poisson_cdf(gamma1 * static_cast<double>(i), kk);
        log_none += std::log1p(-qi);
        if (qi < 1e-15 && i > k + 4) {
            // Remaining terms are dominated by a geometric tail of qi.
            break;
        }
        if (i > k + 100000) break;
    }
    return -std::expm1(log_none);
}

// ---------------------------------------------------------------------------
// Closed-form bound evaluators
// ---------------------------------------------------------------------------

/// Chernoff lower-tail bound: P[Y <= alpha * lambda] <= exp(-(1-alpha)^2 lambda / 2)
/// for Y Poisson (or a sum of independent [0,1] variables) with mean lambda.
inline double poi_lower_bound(double lambda, double alpha) {
    if (!(lambda > 0.0) || !(alpha > 0.0 && alpha < 1.0))
        throw std::domain_error("poi_lower_bound: need lambda > 0, 0 < alpha < 1");
    return std::exp(-(1.0 - alpha) * (1.0 - alpha) * lambda / 2.0);
}

/// Chernoff upper-tail bound: P[Y >= alpha * lambda] <= exp(-(alpha-1) lambda / (2/3 + 2/(alpha-1))).
inline double poi_upper_bound(double lambda, double alpha) {
    if (!(lambda > 0.0) || !(alpha > 1.0))
        throw std::domain_error("poi_upper_bound: need lambda > 0, alpha > 1");
    return std::exp(-(alpha - 1.0) * lambda / (2.0 / 3.0 + 2.0 / (alpha - 1.0)));
}

/// P[G_1 + ... + G_n >= lambda n / p] <= exp(-n (lambda/2 - 1)), lambda >= 2.
inline double geo_sum_bound(std::int64_t n, double p, double lambda) {
    if (n < 1 || !(p > 0.0 && p <= 1.0) || !(lambda >= 2.0))
        throw std::domain_error("geo_sum_bound: need n >= 1, p in (0,1], lambda >= 2");
    return std::exp(-static_cast<double>(n) * (lambda / 2.0 - 1.0));
}

/// The constant C' = 2(b' + C)/b for sums of variables with exponential tails
/// P[X_i >= l] <= C e^{-bl}: then P[sum >= C'n] <= e^{-b'n}.
inline double exp_sum_constant(double C, double b, double b_prime) {
    if (!(b > 0.0) || !(C > 0.0) || !(b_prime > 0.0))
        throw std::domain_error("exp_sum_constant: need C, b, b' > 0");
    return 2.0 * (b_prime + C) / b;
}

/// Union bound for a sequence X_i ~ Poisson/binomial with mean gamma1 * i:
/// P[exists i >= k : X_i < gamma2 i] <= 2 exp(-(1 - gamma2/gamma1)^2 gamma1 k / 2),
/// requiring gamma1 >= 2 gamma2 > 0 and gamma1 >= 8.
inline double poi_seq_bound(double gamma1, double gamma2, std::int64_t k) {
    if (!(gamma2 > 0.0) || !(gamma1 >= 2.0 * gamma2) || !(gamma1 >= 8.0) || k < 1)
        throw std::domain_error("poi_seq_bound: need gamma1 >= 2*gamma2 > 0, gamma1 >= 8, k >= 1");
    const double r = 1.0 - gamma2 / gamma1;
    return 2.0 * std::exp(-r * r * gamma1 * static_cast<double>(k) / 2.0);
}

/// P[Z <= 2n/3] <= e^{-m/54} for m >= 3n balls in n bins.
inline double balls_bins_bound(std::int64_t m, std::int64_t n) {
    if (n < 1 || m < 3 * n) throw std::domain_error("balls_bins_bound: need m >= 3n, n >= 1");
    return std::exp(-static_cast<double>(m) / 54.0);
}

/// Lower bound (t-k-2) d^{-k} / 4 on the probability that a root-biased
/// nonbacktracking walk from a leaf of the height-k tree visits the root
/// within t steps, valid for k >= 2 and k+2 <= t <= d^k.
inline double root_miss_lower(std::int64_t d, std::int64_t k, std::int64_t t) {
    if (d < 2 || k < 2) throw std::domain_error("root_miss_lower: need d >= 2, k >= 2");
    const double dk = std::pow(static_cast<double>(d), static_cast<double>(k));
    if (t < k + 2 || static_cast<double>(t) > dk)
        throw std::domain_error("root_miss_lower: need k+2 <= t <= d^k");
    return static_cast<double>(t - k - 2) / dk / 4.0;
}

/// Lower bound b * t * d^{-n} on the probability that simple random walk on
/// the height-n tree hits the root within t steps, for n log d / a <= t <= d^n.
/// The constants a, b are not pinned by theory; they are configuration used
/// by qualitative checks, never by correctness assertions.
inline double rw_root_lower(std::int64_t d, std::int64_t n, std::int64_t t, double a = 1.0,
                            double b = 0.05) {
    if (d < 2 || n < 1 || !(a > 0.0) || !(b > 0.0))
        throw std::domain_error("rw_root_lower: need d >= 2, n >= 1, a, b > 0");
    const double dn = std::pow(static_cast<double>(d), static_cast<double>(n));
    const double tmin = static_cast<double>(n) * std::log(static_cast<double>(d)) / a;
    if (static_cast<double>(t) < tmin || static_cast<double>(t) > dn)
        throw std::domain_error("rw_root_lower: need n log d / a <= t <= d^n");
    return b * static_cast<double>(t) / dn;
}

/// All-awake bound E[W] <= c1 * mu * t on the count frozen at y by time t
/// when every frog starts awake. c1 is configuration (default 10).
inline double all_awake_bound(double mu, std::int64_t t, double c1 = 10.0) {
    if (!(mu >= 0.0) || t < 0 || !(c1 > 0.0))
        throw std::domain_error("all_awake_bound: need mu >= 0, t >= 0, c1 > 0");
    return c1 * mu * static_cast<double>(t);
}

/// Named bound dispatch, for the CLI and JSON export.
struct BoundSpec {
    std::string id;  // PoiLower, PoiUpper, GeoSum, ExpSum, PoiSeq, BallsBins,
                     // RootMiss, RwRoot, AllAwake
    std::map<std::string, double> params;

    double param(const std::string& key) const {
        auto it = params.find(key);
        if (it == params.end())
            throw std::invalid_argument("BoundSpec: missing parameter '" + key + "' for " + id);
        return it->second;
    }
    std::int64_t iparam(const std::string& key) const {
        return static_cast<std::int64_t>(std::llround(param(key)));
    }
    double param_or(const std::string& key, double fallback) const {
        auto it = params.find(key);
        return it == params.end() ? fallback : it->second;
    }
};

inline double bound_value(const BoundSpec& spec) {
    if (spec.id == "PoiLower") return poi_lower_bound(spec.param("lambda"), spec.param("alpha"));
    if (spec.id == "PoiUpper") return poi_upper_bound(spec.param("lambda"), spec.param("alpha"));
    if (spec.id == "GeoSum")
        return geo_sum_bound(spec.iparam("n"), spec.param("p"), spec.param("lambda"));
    if (spec.id == "ExpSum")
        return exp_sum_constant(spec.param("C"), spec.param("b"), spec.param("bprime"));
    if (spec.id == "PoiSeq")
        return poi_seq_bound(spec.param("gamma1"), spec.param("gamma2"), spec.iparam("k"));
    if (spec.id == "BallsBins") return balls_bins_bound(spec.iparam("m"), spec.iparam("n"));
    if (spec.id == "RootMiss")
        return root_miss_lower(spec.iparam("d"), spec.iparam("k"), spec.iparam("t"));
    if (spec.id == "RwRoot")
        return rw_root_lower(spec.iparam("d"), spec.iparam("n"), spec.iparam("t"),
                             spec.param_or("a", 1.0), spec.param_or("b", 0.05));
    if (spec.id == "AllAwake")
        return all_awake_bound(spec.param("mu"), spec.iparam("t"), spec.param_or("c1", 10.0));
    throw std::invalid_argument("bound_value: unknown bound id '" + spec.id + "'");
}

// ---------------------------------------------------------------------------
// Exact walk distribution by dynamic programming
// ---------------------------------------------------------------------------

/// Exact distribution of a single walk (with the previous-vertex component
/// needed by the nonbacktracking kernels), advanced one step at a time.
/// Optionally absorbs at target vertices and records the hit-time law.
class WalkDistribution {
public:
    WalkDistribution(const TreeShape& shape, WalkKind kind, VertexId start,
                     std::vector<VertexId> targets = {},
                     std::int64_t state_cap = 10'000'000)
        : shape_(shape), kind_(kind) {
        shape_.require_valid(start);
        stride_ = shape_.degree() + 2;
        const std::int64_t states = shape_.vertex_count() * stride_;
        if (states > state_cap)
            throw std::invalid_argument("WalkDistribution: state space exceeds cap");
        prob_.assign(static_cast<std::size_t>(states), 0.0);
        next_.assign(static_cast<std::size_t>(states), 0.0);
        absorb_.assign(static_cast<std::size_t>(shape_.vertex_count()), 0);
        for (VertexId t : targets) {
            shape_.require_valid(t);
            absorb_[static_cast<std::size_t>(t)] = 1;
        }
        if (absorb_[static_cast<std::size_t>(start)]) {
            absorbed_ = 1.0;
            hit_pmf_.push_back(1.0);
        } else {
            prob_[index(start, kNoVertex)] = 1.0;
        }
    }

    std::int64_t time() const { return t_; }
    double absorbed_mass() const { return absorbed_; }
    const std::vector<double>& hit_time_pmf() const { return hit_pmf_; }

    /// Marginal occupation probability of each vertex among unabsorbed mass.
    std::vector<double> occupation() const {
        std::vector<double> occ(static_cast<std::size_t>(shape_.vertex_count()), 0.0);
        for (VertexId v = 0; v < shape_.vertex_count(); ++v)
            for (std::int64_t s = 0; s < stride_; ++s)
                occ[static_cast<std::size_t>(v)] += prob_[static_cast<std::size_t>(v * stride_ + s)];
        return occ;
    }

    double survival() const {
        double s = 0.0;
        for (double p : prob_) s += p;
        return s;
    }

    void advance() {
        std::fill(next_.begin(), next_.end(), 0.0);
        double newly_hit = 0.0;
        for (VertexId v = 0; v < shape_.vertex_count(); ++v) {
            for (std::int64_t s = 0; s < stride_; ++s) {
                const double p = prob_[static_cast<std::size_t>(v * stride_ + s)];
                if (p == 0.0) continue;
                const WalkState st{v, prev_of(v, s)};
                for (const auto& [u, q] : kernel_row(shape_, kind_, st)) {
                    const double mass = p * q;
                    if (absorb_[static_cast<std::size_t>(u)]) {
                        newly_hit += mass;
                    } else {
                        next_[index_from(u, v)] += mass;
                    }
                }
            }
        }
        prob_.swap(next_);
        absorbed_ += newly_hit;
        hit_pmf_.push_back(newly_hit);
        ++t_;
    }

private:
    // State slot encoding for "previous vertex": 0 = none, 1 = up neighbor
    // (parent, or y for the root), 2+j = child j.
    std::size_t index(VertexId v, VertexId prev) const {
        return static_cast<std::size_t>(v * stride_ + slot_of(v, prev));
    }

    std::size_t index_from(VertexId v, VertexId from) const {
        return static_cast<std::size_t>(v * stride_ + slot_of(v, from));
    }

    std::int64_t slot_of(VertexId v, VertexId prev) const {
        if (prev == kNoVertex) return 0;
        if (shape_.is_y(v)) return 1;  // prev must be the root
        if (shape_.is_y(prev)) return 1;
        if (v != 0 && prev == shape_.parent(v)) return 1;
        return 2 + (prev - (shape_.degree() * v + 1));
    }

    VertexId prev_of(VertexId v, std::int64_t slot) const {
        if (slot == 0) return kNoVertex;
        if (shape_.is_y(v)) return shape_.root();
        if (slot == 1) return v == 0 ? (shape_.has_y() ? shape_.y_index() : kNoVertex)
                                     : shape_.parent(v);
        return shape_.degree() * v + 1 + (slot - 2);
    }

    TreeShape shape_;
    WalkKind kind_;
    std::int64_t stride_;
    std::int64_t t_ = 0;
    double absorbed_ = 0.0;
    std::vector<double> prob_, next_;
    std::vector<char> absorb_;
    std::vector<double> hit_pmf_;  // hit_pmf_[t] = P[hit exactly at t]
};

/// Occupation distribution of the walk after exactly t_max steps.
inline std::vector<double> enumerate_small_walk_distribution(const TreeShape& shape, WalkKind kind,
                                                             VertexId start, std::int64_t t_max,
                                                             std::int64_t state_cap = 10'000'000) {
    WalkDistribution dp(shape, kind, start, {}, state_cap);
    for (std::int64_t t = 0; t < t_max; ++t) dp.advance();
    return dp.occupation();
}

struct DpHittingResult {
    double partial_expectation;  // sum over enumerated t of t * P[hit at t]
    double survival;             // unabsorbed mass at the truncation time
    std::int64_t t_reached;
};

/// Truncated expectation of the hitting time of `targets`, enumerated until
/// the survival mass drops below `tail_tol` (or t_cap). The caller bounds the
/// truncation error with the returned survival.
inline DpHittingResult dp_expected_hitting(const TreeShape& shape, WalkKind kind, VertexId start,
                                           const std::vector<VertexId>& targets,
                                           double tail_tol = 1e-13,
                                           std::int64_t t_cap = 10'000'000) {
    WalkDistribution dp(shape, kind, start, targets);
    double expectation = 0.0;
    while (dp.survival() > tail_tol && dp.time() < t_cap) {
        dp.advance();
        expectation += static_cast<double>(dp.time()) * dp.hit_time_pmf().back();
    }
    return DpHittingResult{expectation, dp.survival(), dp.time()};
}

}  // namespace frogsim
