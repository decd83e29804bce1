#pragma once

#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "frogsim/engine.hpp"
#include "frogsim/oracles.hpp"
#include "frogsim/stats.hpp"

namespace frogsim {

// ---------------------------------------------------------------------------
// Deterministic trial-level parallelism
// ---------------------------------------------------------------------------

inline int default_parallelism() {
    if (const char* env = std::getenv("FROGSIM_THREADS")) {
        const int v = std::atoi(env);
        if (v > 0) return v;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

/// Runs fn(0..trials-1) across threads; results land in index order, so every
/// downstream reduction is independent of scheduling. Each trial derives its
/// own stream from (base_seed, index) — never from thread identity.
template <typename R, typename Fn>
std::vector<R> parallel_trials(std::int64_t trials, int threads, Fn&& fn) {
    if (trials < 0) throw std::invalid_argument("parallel_trials: trials must be >= 0");
    std::vector<R> results(static_cast<std::size_t>(trials));
    if (trials == 0) return results;
    const int n_threads =
        std::max(1, std::min<int>(threads > 0 ? threads : default_parallelism(),
                                  static_cast<int>(std::min<std::int64_t>(trials, 64))));
    if (n_threads == 1) {
        for (std::int64_t i = 0; i < trials; ++i)
            results[static_cast<std::size_t>(i)] = fn(i);
        return results;
    }
    std::atomic<std::int64_t> next{0};
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n_threads));
    pool.reserve(static_cast<std::size_t>(n_threads));
    for (int w = 0; w < n_threads; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (;;) {
                    const std::int64_t i = next.fetch_add(1);
                    if (i >= trials) break;
                    results[static_cast<std::size_t>(i)] = fn(i);
                }
            } catch (...) {
                errors[static_cast<std::size_t>(w)] = std::current_exception();
                next.store(trials);
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    return results;
}

inline std::uint64_t trial_seed(std::uint64_t base_seed, std::int64_t trial) {
    return RandomStream::derive_seed(base_seed, {0x7152ull, static_cast<std::uint64_t>(trial)});
}

// ---------------------------------------------------------------------------
// Experiment configuration
// ---------------------------------------------------------------------------

/// Model parameters shared by oracles and experiments. When beta is set, mu
/// is pinned to the (3+beta) d (d+1) parametrization.
struct ModelParams {
    std::int64_t d = 2;
    std::int64_t n = 4;
    double mu = 0.0;
    std::optional<double> beta;
    double c_induction = 1.0;
    double beta0 = 1.0;
    double c1 = 10.0;

    static double mu_from_beta(std::int64_t d, double beta) {
        return (3.0 + beta) * static_cast<double>(d) * static_cast<double>(d + 1);
    }

    double effective_mu() const {
        if (beta) {
            const double derived = mu_from_beta(d, *beta);
            if (mu != 0.0 && std::fabs(mu - derived) > 1e-9 * std::max(1.0, derived))
                throw std::invalid_argument(
                    "ModelParams: mu and beta disagree under mu = (3+beta)d(d+1)");
            return derived;
        }
        return mu;
    }

    double epsilon() const { return epsilon_param(d, effective_mu()); }
};

struct ExperimentConfig {
    int schema_version = 1;
    ModelParams params;
    std::string variant = "srw";
    std::string distribution = "poisson";  // poisson | bernoulli-extended | deterministic
    std::int64_t horizon = 100000;
    std::int64_t trials = 1;
    std::uint64_t base_seed = 1;
    int parallelism = 0;  // 0 = FROGSIM_THREADS or hardware
    std::int64_t step_budget = 1'000'000'000;
    VertexId observe = kNoVertex;

    InitDistribution make_distribution() const {
        const double mu = params.effective_mu();
        if (distribution == "poisson") return InitDistribution::poisson(mu);
        if (distribution == "bernoulli-extended") return InitDistribution::bernoulli_extended(mu);
        if (distribution == "deterministic")
            return InitDistribution::deterministic(static_cast<std::int64_t>(std::llround(mu)));
        throw std::invalid_argument("ExperimentConfig: unknown distribution '" + distribution +
                                    "'");
    }

    TreeShape make_shape() const {
        const bool with_y = variant == "frozen-y";
        return build_tree(params.d, params.n, with_y);
    }

    void validate() const {
        if (schema_version != 1)
            throw std::invalid_argument("ExperimentConfig: unsupported schema_version");
        if (trials < 1) throw std::invalid_argument("ExperimentConfig: trials must be >= 1");
        if (horizon < 0) throw std::invalid_argument("ExperimentConfig: horizon must be >= 0");
        params.effective_mu();  // throws on a mu/beta mismatch
        make_distribution();
    }
};

/// One record per trial, seeded deterministically from (base_seed, index).
inline std::vector<RunRecord> run_trials(const ExperimentConfig& config) {
    config.validate();
    const TreeShape shape = config.make_shape();
    return parallel_trials<RunRecord>(
        config.trials, config.parallelism, [&](std::int64_t i) {
            FrogInitSpec spec;
            spec.shape = shape;
            spec.distribution = config.make_distribution();
            RunConfig cfg = make_variant(config.variant, shape);
            cfg.horizon = config.horizon;
            cfg.step_budget = config.step_budget;
            cfg.observe = config.observe;
            return run(spec, cfg, trial_seed(config.base_seed, i));
        });
}

/// Compact per-trial summary; what batch experiments keep in memory and what
/// the per-trial CSV rows are made of.
struct TrialBrief {
    std::uint64_t seed = 0;
    std::optional<std::int64_t> cover;
    bool budget_exhausted = false;
    bool halted = false;
    std::int64_t n_returns = 0;
    std::int64_t final_time = 0;
    std::uint64_t digest = 0;
};

inline TrialBrief brief_of(const RunRecord& rec) {
    return TrialBrief{rec.seed,   rec.cover_time,
                      rec.budget_exhausted, rec.halted,
                      static_cast<std::int64_t>(rec.returns.size()), rec.final_time,
                      rec.digest()};
}

inline std::vector<TrialBrief> run_trial_briefs(const ExperimentConfig& config) {
    config.validate();
    const TreeShape shape = config.make_shape();
    return parallel_trials<TrialBrief>(
        config.trials, config.parallelism, [&](std::int64_t i) {
            FrogInitSpec spec;
            spec.shape = shape;
            spec.distribution = config.make_distribution();
            RunConfig cfg = make_variant(config.variant, shape);
            cfg.horizon = config.horizon;
            cfg.step_budget = config.step_budget;
            cfg.observe = config.observe;
            return brief_of(run(spec, cfg, trial_seed(config.base_seed, i)));
        });
}

// ---------------------------------------------------------------------------
// Check reports
// ---------------------------------------------------------------------------

enum class Verdict { Pass, Fail, Inconclusive };

inline const char* verdict_name(Verdict v) {
    switch (v) {
        case Verdict::Pass: return "pass";
        case Verdict::Fail: return "fail";
        case Verdict::Inconclusive: return "inconclusive";
    }
    return "?";
}

/// Claim "true value <= bound": pass only when the whole interval sits on
/// the favorable side; a straddling interval is inconclusive. An estimate
/// beyond the bound can never pass.
inline Verdict verdict_upper(double estimate, double halfwidth, double bound) {
    if (estimate + halfwidth <= bound) return Verdict::Pass;
    if (estimate - halfwidth > bound) return Verdict::Fail;
    return Verdict::Inconclusive;
}

inline Verdict verdict_lower(double estimate, double halfwidth, double bound) {
    if (estimate - halfwidth >= bound) return Verdict::Pass;
    if (estimate + halfwidth < bound) return Verdict::Fail;
    return Verdict::Inconclusive;
}

/// Drift-style claim "true value <= 0" where equality is expected (exact
/// martingales at the roots): pass unless significantly positive.
inline Verdict verdict_not_significantly_positive(double estimate, double halfwidth) {
    return estimate <= halfwidth ? Verdict::Pass : Verdict::Fail;
}

/// Claim "true value == target" at CI resolution.
inline Verdict verdict_two_sided(double estimate, double halfwidth, double target) {
    return std::fabs(estimate - target) <= halfwidth ? Verdict::Pass : Verdict::Fail;
}

inline Verdict worst_verdict(Verdict a, Verdict b) {
    if (a == Verdict::Fail || b == Verdict::Fail) return Verdict::Fail;
    if (a == Verdict::Inconclusive || b == Verdict::Inconclusive) return Verdict::Inconclusive;
    return Verdict::Pass;
}

using CheckParams = std::map<std::string, double>;

struct CheckReport {
    std::string check_id;
    CheckParams params;
    double estimate = 0.0;
    double ci_halfwidth = 0.0;
    double bound_or_target = 0.0;
    std::string direction;  // "<=", ">=", "==", "drift<=0", "slope<0"
    Verdict verdict = Verdict::Inconclusive;
    std::int64_t trials = 0;
    double wall_ms = 0.0;
    std::vector<std::string> notes;
    std::map<std::string, double> extras;

    struct Row {
        std::string label;
        double estimate = 0.0;
        double ci_halfwidth = 0.0;
        double bound = 0.0;
        Verdict verdict = Verdict::Inconclusive;
    };
    std::vector<Row> rows;

    /// Fold the row verdicts into the headline; the headline estimate/bound
    /// are taken from the worst row.
    void finalize_from_rows() {
        if (rows.empty()) return;
        const Row* headline = &rows.front();
        Verdict overall = Verdict::Pass;
        for (const auto& r : rows) {
            overall = worst_verdict(overall, r.verdict);
            const bool r_worse =
                (r.verdict == Verdict::Fail && headline->verdict != Verdict::Fail) ||
                (r.verdict == Verdict::Inconclusive && headline->verdict == Verdict::Pass);
            if (r_worse) headline = &r;
        }
        verdict = overall;
        estimate = headline->estimate;
        ci_halfwidth = headline->ci_halfwidth;
        bound_or_target = headline->bound;
    }
};

namespace detail {

inline double require_param(const CheckParams& p, const std::string& key) {
    auto it = p.find(key);
    if (it == p.end())
        throw std::invalid_argument("verify: missing parameter '" + key + "'");
    return it->second;
}

inline double param_or(const CheckParams& p, const std::string& key, double fallback) {
    auto it = p.find(key);
    return it == p.end() ? fallback : it->second;
}

inline std::int64_t iparam(const CheckParams& p, const std::string& key) {
    return static_cast<std::int64_t>(std::llround(require_param(p, key)));
}

inline std::int64_t iparam_or(const CheckParams& p, const std::string& key,
                              std::int64_t fallback) {
    return static_cast<std::int64_t>(
        std::llround(param_or(p, key, static_cast<double>(fallback))));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Cover-time experiments and the regime fit
// ---------------------------------------------------------------------------

struct CoverSummary {
    std::int64_t d = 0, n = 0;
    double mu = 0.0;
    std::int64_t trials = 0;
    std::int64_t completed = 0;
    std::int64_t capped = 0;     // budget exhausted
    std::int64_t uncovered = 0;  // horizon reached without covering
    double mean = 0.0;
    double ci99 = 0.0;
    double sd = 0.0;
    double min_cover = 0.0;
    bool all_at_least_n = true;
    std::vector<TrialBrief> trials_detail;  // filled only when requested
};

inline CoverSummary cover_experiment(std::int64_t d, std::int64_t n, double mu,
                                     const std::string& variant, std::int64_t horizon,
                                     std::int64_t trials, std::uint64_t seed,
                                     std::int64_t step_budget = 1'000'000'000,
                                     int parallelism = 0, bool collect_trials = false) {
    const TreeShape shape = build_tree(d, n, false);
    const auto outs = parallel_trials<TrialBrief>(trials, parallelism, [&](std::int64_t i) {
        FrogInitSpec spec;
        spec.shape = shape;
        spec.distribution = InitDistribution::poisson(mu);
        RunConfig cfg = make_variant(variant, shape);
        cfg.horizon = horizon;
        cfg.step_budget = step_budget;
        return brief_of(run(spec, cfg, trial_seed(seed, i)));
    });
    CoverSummary s;
    s.d = d;
    s.n = n;
    s.mu = mu;
    s.trials = trials;
    OnlineStats stats;
    double min_cover = 0.0;
    for (const auto& o : outs) {
        if (o.budget_exhausted) {
            ++s.capped;
        } else if (!o.cover) {
            ++s.uncovered;
        } else {
            stats.add(static_cast<double>(*o.cover));
            if (s.completed == 0 || static_cast<double>(*o.cover) < min_cover)
                min_cover = static_cast<double>(*o.cover);
            ++s.completed;
            if (*o.cover < n) s.all_at_least_n = false;
        }
    }
    s.mean = stats.mean();
    s.ci99 = stats.ci99_halfwidth();
    s.sd = stats.sd();
    s.min_cover = min_cover;
    if (collect_trials) s.trials_detail = outs;
    return s;
}

struct RegimeLeg {
    double mu = 0.0;
    std::vector<CoverSummary> per_n;
    std::vector<double> ratios_nlogn;  // mean cover / (n ln n)
    double ratio_spread = 0.0;
    bool monotone_blowup = false;
    LinearFit fit_nlogn;    // mean cover vs n ln n
    LinearFit fit_expsqrt;  // log(mean cover) vs sqrt(n ln d)
    std::string preferred;  // "n-log-n" or "exp-sqrt"
};

struct RegimeFitResult {
    std::int64_t d = 0;
    std::int64_t trials = 0;
    std::uint64_t seed = 0;
    RegimeLeg fast;
    RegimeLeg slow;
};

namespace detail {

inline RegimeLeg regime_leg(std::int64_t d, const std::vector<std::int64_t>& n_list, double mu,
                            std::int64_t horizon, std::int64_t trials, std::uint64_t seed,
                            std::int64_t step_budget, int parallelism, bool collect_trials) {
    if (n_list.size() < 2) throw std::invalid_argument("regime_fit: need at least two heights");
    for (std::size_t i = 1; i < n_list.size(); ++i)
        if (n_list[i] <= n_list[i - 1])
            throw std::invalid_argument("regime_fit: heights must be ascending");
    RegimeLeg leg;
    leg.mu = mu;
    std::vector<double> x_nlogn, y_cover, x_sqrt, y_logcover;
    for (std::size_t i = 0; i < n_list.size(); ++i) {
        const std::int64_t n = n_list[i];
        const auto s = cover_experiment(d, n, mu, "srw", horizon, trials,
                                        RandomStream::derive_seed(seed, {static_cast<std::uint64_t>(n)}),
                                        step_budget, parallelism, collect_trials);
        if (s.completed == 0)
            throw std::runtime_error("regime_fit: no completed trials at n=" + std::to_string(n) +
                                     " (budget or horizon too small)");
        leg.per_n.push_back(s);
        const double nlogn = static_cast<double>(n) * std::log(static_cast<double>(n));
        leg.ratios_nlogn.push_back(s.mean / nlogn);
        x_nlogn.push_back(nlogn);
        y_cover.push_back(s.mean);
        x_sqrt.push_back(std::sqrt(static_cast<double>(n) * std::log(static_cast<double>(d))));
        y_logcover.push_back(std::log(s.mean));
    }
    leg.ratio_spread = relative_spread(leg.ratios_nlogn);
    leg.monotone_blowup = true;
    for (std::size_t i = 1; i < leg.ratios_nlogn.size(); ++i)
        if (leg.ratios_nlogn[i] <= leg.ratios_nlogn[i - 1]) leg.monotone_blowup = false;
    leg.fit_nlogn = fit_linear(x_nlogn, y_cover);
    leg.fit_expsqrt = fit_linear(x_sqrt, y_logcover);
    leg.preferred = leg.fit_nlogn.normalized_residual <= leg.fit_expsqrt.normalized_residual
                        ? "n-log-n"
                        : "exp-sqrt";
    return leg;
}

}  // namespace detail

/// The two-regime experiment: covers measured at mu_high and mu_low over the
/// given heights, each summarized by both candidate growth models.
inline RegimeFitResult regime_fit(std::int64_t d, const std::vector<std::int64_t>& n_list_fast,
                                  const std::vector<std::int64_t>& n_list_slow, double mu_high,
                                  double mu_low, std::int64_t trials, std::uint64_t seed,
                                  std::int64_t fast_horizon = 100'000,
                                  std::int64_t slow_horizon = 10'000'000,
                                  std::int64_t step_budget = 1'000'000'000,
                                  int parallelism = 0, bool collect_trials = false) {
    if (mu_low < 0.0 || mu_high <= mu_low)
        throw std::invalid_argument("regime_fit: need mu_high > mu_low >= 0");
    RegimeFitResult res;
    res.d = d;
    res.trials = trials;
    res.seed = seed;
    res.fast = detail::regime_leg(d, n_list_fast, mu_high, fast_horizon, trials,
                                  RandomStream::derive_seed(seed, {0xFA57ull}), step_budget,
                                  parallelism, collect_trials);
    res.slow = detail::regime_leg(d, n_list_slow, mu_low, slow_horizon, trials,
                                  RandomStream::derive_seed(seed, {0x510Dull}), step_budget,
                                  parallelism, collect_trials);
    return res;
}

inline RegimeFitResult regime_fit(std::int64_t d, const std::vector<std::int64_t>& n_list,
                                  double mu_high, double mu_low, std::int64_t trials,
                                  std::uint64_t seed) {
    return regime_fit(d, n_list, n_list, mu_high, mu_low, trials, seed);
}

}  // namespace frogsim
