#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace frogsim {

/// Two-sided 99% normal quantile, used for every CI in the harness.
inline constexpr double kZ99 = 2.5758293035489004;

/// Welford accumulator. Merging is associative, but the harness always
/// reduces in trial-index order so aggregates are bit-stable regardless of
/// completion order.
class OnlineStats {
public:
    void add(double x) {
        ++n_;
        const double delta = x - mean_;
        mean_ += delta / static_cast<double>(n_);
        m2_ += delta * (x - mean_);
    }

    void merge(const OnlineStats& o) {
        if (o.n_ == 0) return;
        if (n_ == 0) { *this = o; return; }
        const double delta = o.mean_ - mean_;
        const std::int64_t n = n_ + o.n_;
        mean_ += delta * static_cast<double>(o.n_) / static_cast<double>(n);
        m2_ += o.m2_ + delta * delta * static_cast<double>(n_) * static_cast<double>(o.n_) /
                           static_cast<double>(n);
        n_ = n;
    }

    std::int64_t count() const { return n_; }
    double mean() const { return mean_; }
    double variance() const { return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0; }
    double sd() const { return std::sqrt(variance()); }
    double standard_error() const {
        return n_ > 0 ? sd() / std::sqrt(static_cast<double>(n_)) : 0.0;
    }
    double ci99_halfwidth() const { return kZ99 * standard_error(); }

private:
    std::int64_t n_ = 0;
    double mean_ = 0.0;
    double m2_ = 0.0;
};

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
    /// ||residuals|| / ||y - mean(y)||; scale-free, comparable across models.
    double normalized_residual = 0.0;
};

inline LinearFit fit_linear(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() != ys.size() || xs.size() < 2)
        throw std::invalid_argument("fit_linear: need two equal-length samples of size >= 2");
    const double n = static_cast<double>(xs.size());
    double sx = 0, sy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) { sx += xs[i]; sy += ys[i]; }
    const double mx = sx / n, my = sy / n;
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
        syy += (ys[i] - my) * (ys[i] - my);
    }
    if (sxx == 0.0) throw std::invalid_argument("fit_linear: degenerate x values");
    LinearFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double ss_res = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double r = ys[i] - (fit.intercept + fit.slope * xs[i]);
        ss_res += r * r;
    }
    fit.r2 = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
    fit.normalized_residual = syy > 0.0 ? std::sqrt(ss_res / syy) : 0.0;
    return fit;
}

/// (max - min) / mean of a strictly positive sequence.
inline double relative_spread(const std::vector<double>& xs) {
    if (xs.empty()) throw std::invalid_argument("relative_spread: empty");
    double lo = xs[0], hi = xs[0], sum = 0.0;
    for (double x : xs) {
        lo = std::min(lo, x);
        hi = std::max(hi, x);
        sum += x;
    }
    const double mean = sum / static_cast<double>(xs.size());
    if (mean == 0.0) throw std::invalid_argument("relative_spread: zero mean");
    return (hi - lo) / mean;
}

namespace detail {
inline double binomial_cdf_stats(std::int64_t n, double p, std::int64_t k) {
    if (k < 0) return 0.0;
    if (k >= n) return 1.0;
    if (p <= 0.0) return 1.0;
    if (p >= 1.0) return 0.0;
    double sum = 0.0;
    for (std::int64_t i = 0; i <= k; ++i) {
        const double lc = std::lgamma(static_cast<double>(n) + 1.0) -
                          std::lgamma(static_cast<double>(i) + 1.0) -
                          std::lgamma(static_cast<double>(n - i) + 1.0);
        sum += std::exp(lc + static_cast<double>(i) * std::log(p) +
                        static_cast<double>(n - i) * std::log1p(-p));
    }
    return std::min(sum, 1.0);
}
}  // namespace detail

struct ProportionCi {
    double lower;
    double upper;
};

/// Exact (Clopper-Pearson) two-sided confidence interval for a proportion,
/// found by bisection on the binomial CDF. Used for proportion checks whose
/// estimates sit near 0 or 1, where the normal interval misbehaves.
inline ProportionCi clopper_pearson(std::int64_t successes, std::int64_t n,
                                    double confidence = 0.99) {
    if (n <= 0 || successes < 0 || successes > n)
        throw std::invalid_argument("clopper_pearson: bad counts");
    const double alpha = 1.0 - confidence;
    auto solve = [&](auto f) {
        double lo = 0.0, hi = 1.0;
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (f(mid)) lo = mid; else hi = mid;
        }
        return 0.5 * (lo + hi);
    };
    ProportionCi ci{0.0, 1.0};
    if (successes > 0) {
        ci.lower = solve([&](double p) {
            return 1.0 - detail::binomial_cdf_stats(n, p, successes - 1) < alpha / 2.0;
        });
    }
    if (successes < n) {
        ci.upper = solve([&](double p) {
            return detail::binomial_cdf_stats(n, p, successes) >= alpha / 2.0;
        });
    }
    return ci;
}

}  // namespace frogsim
