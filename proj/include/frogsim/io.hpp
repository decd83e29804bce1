#pragma once

#include <cstdio>
#include <fstream>
#include <ostream>
#include <set>
#include <string>

#include <json.hpp>

#include "frogsim/checks.hpp"
#include "frogsim/engine.hpp"
#include "frogsim/harness.hpp"

namespace frogsim {

using nlohmann::json;

/// 17 significant digits: doubles survive a print/parse round trip bit-exactly.
inline std::string fmt_g17(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

// ---------------------------------------------------------------------------
// Experiment configuration <-> JSON (strict)
// ---------------------------------------------------------------------------

inline json config_to_json(const ExperimentConfig& c) {
    json j{{"schema_version", c.schema_version},
           {"d", c.params.d},
           {"n", c.params.n},
           {"mu", c.params.mu},
           {"variant", c.variant},
           {"distribution", c.distribution},
           {"horizon", c.horizon},
           {"trials", c.trials},
           {"seed", c.base_seed},
           {"parallelism", c.parallelism},
           {"step_budget", c.step_budget},
           {"observe", c.observe},
           {"c_induction", c.params.c_induction},
           {"beta0", c.params.beta0},
           {"c1", c.params.c1}};
    if (c.params.beta) j["beta"] = *c.params.beta;
    return j;
}

/// Strict parse: unknown keys are rejected so config typos fail loudly.
inline ExperimentConfig config_from_json(const json& j) {
    static const std::set<std::string> known = {
        "schema_version", "d",     "n",           "mu",          "beta",  "variant",
        "distribution",   "horizon", "trials",    "seed",        "parallelism",
        "step_budget",    "observe", "c_induction", "beta0",     "c1"};
    if (!j.is_object()) throw std::invalid_argument("config: expected a JSON object");
    for (const auto& [key, value] : j.items())
        if (!known.count(key))
            throw std::invalid_argument("config: unknown field '" + key + "'");
    ExperimentConfig c;
    c.schema_version = j.value("schema_version", 1);
    c.params.d = j.value("d", std::int64_t{2});
    c.params.n = j.value("n", std::int64_t{4});
    c.params.mu = j.value("mu", 0.0);
    if (j.contains("beta") && !j["beta"].is_null()) c.params.beta = j["beta"].get<double>();
    c.params.c_induction = j.value("c_induction", 1.0);
    c.params.beta0 = j.value("beta0", 1.0);
    c.params.c1 = j.value("c1", 10.0);
    c.variant = j.value("variant", std::string("srw"));
    c.distribution = j.value("distribution", std::string("poisson"));
    c.horizon = j.value("horizon", std::int64_t{100000});
    c.trials = j.value("trials", std::int64_t{1});
    c.base_seed = j.value("seed", std::uint64_t{1});
    c.parallelism = j.value("parallelism", 0);
    c.step_budget = j.value("step_budget", std::int64_t{1'000'000'000});
    c.observe = j.value("observe", kNoVertex);
    c.validate();
    return c;
}

// ---------------------------------------------------------------------------
// Reports -> JSON
// ---------------------------------------------------------------------------

inline json check_report_to_json(const CheckReport& r) {
    json rows = json::array();
    for (const auto& row : r.rows)
        rows.push_back(json{{"label", row.label},
                            {"estimate", row.estimate},
                            {"ci_halfwidth", row.ci_halfwidth},
                            {"bound", row.bound},
                            {"verdict", verdict_name(row.verdict)}});
    return json{{"check_id", r.check_id},
                {"params", r.params},
                {"estimate", r.estimate},
                {"ci_halfwidth", r.ci_halfwidth},
                {"bound_or_target", r.bound_or_target},
                {"direction", r.direction},
                {"verdict", verdict_name(r.verdict)},
                {"trials", r.trials},
                {"wall_ms", r.wall_ms},
                {"notes", r.notes},
                {"extras", r.extras},
                {"rows", rows}};
}

inline json cover_summary_to_json(const CoverSummary& s) {
    return json{{"d", s.d},
                {"n", s.n},
                {"mu", s.mu},
                {"trials", s.trials},
                {"completed", s.completed},
                {"capped", s.capped},
                {"uncovered", s.uncovered},
                {"mean", s.mean},
                {"ci99", s.ci99},
                {"sd", s.sd},
                {"min_cover", s.min_cover},
                {"all_at_least_n", s.all_at_least_n}};
}

inline json linear_fit_to_json(const LinearFit& f) {
    return json{{"slope", f.slope},
                {"intercept", f.intercept},
                {"r2", f.r2},
                {"normalized_residual", f.normalized_residual}};
}

inline json regime_leg_to_json(const RegimeLeg& leg) {
    json per_n = json::array();
    for (const auto& s : leg.per_n) per_n.push_back(cover_summary_to_json(s));
    return json{{"mu", leg.mu},
                {"per_n", per_n},
                {"ratios_nlogn", leg.ratios_nlogn},
                {"ratio_spread", leg.ratio_spread},
                {"monotone_blowup", leg.monotone_blowup},
                {"fit_nlogn", linear_fit_to_json(leg.fit_nlogn)},
                {"fit_expsqrt", linear_fit_to_json(leg.fit_expsqrt)},
                {"preferred", leg.preferred}};
}

inline json regime_fit_to_json(const RegimeFitResult& r) {
    return json{{"d", r.d},
                {"trials", r.trials},
                {"seed", r.seed},
                {"fast", regime_leg_to_json(r.fast)},
                {"slow", regime_leg_to_json(r.slow)}};
}

inline json run_record_summary_to_json(const RunRecord& r) {
    json j{{"d", r.d},
           {"n", r.n},
           {"has_y", r.has_y},
           {"seed", r.seed},
           {"config_digest", r.config_digest},
           {"final_time", r.final_time},
           {"initial_total", r.initial_total},
           {"steps_taken", r.steps_taken},
           {"budget_exhausted", r.budget_exhausted},
           {"halted", r.halted},
           {"n_returns", r.returns.size()},
           {"n_frozen", r.frozen.size()},
           {"record_digest", r.digest()}};
    if (r.cover_time) j["cover_time"] = *r.cover_time;
    else j["cover_time"] = nullptr;
    return j;
}

// ---------------------------------------------------------------------------
// CSV (fixed column order) and NDJSON traces
// ---------------------------------------------------------------------------

inline constexpr const char* kTrialCsvHeader =
    "trial,seed,d,n,mu,variant,cover_time,budget_exhausted,n_returns";

inline void write_trial_csv_row(std::ostream& out, std::int64_t trial, const RunRecord& rec,
                                double mu, const std::string& variant) {
    out << trial << ',' << rec.seed << ',' << rec.d << ',' << rec.n << ',' << fmt_g17(mu) << ','
        << variant << ',';
    if (rec.cover_time) out << *rec.cover_time;
    out << ',' << (rec.budget_exhausted ? 1 : 0) << ',' << rec.returns.size() << '\n';
}

/// Newline-delimited trace records: one JSON object per event with fields
/// t, event (init|move|wake|retag|freeze|strip), frog, vertex, from, tag,
/// old_tag. Documented in the README.
class NdjsonTraceWriter {
public:
    explicit NdjsonTraceWriter(std::ostream& out) : out_(out) {
        sink_ = [this](const TraceEvent& e) { write(e); };
    }

    std::function<void(const TraceEvent&)>* sink() { return &sink_; }

private:
    void write(const TraceEvent& e) {
        static const std::map<char, const char*> names = {{'i', "init"},   {'m', "move"},
                                                          {'w', "wake"},   {'r', "retag"},
                                                          {'f', "freeze"}, {'s', "strip"}};
        json j{{"t", e.time},
               {"event", names.count(e.kind) ? names.at(e.kind) : "?"},
               {"frog", e.frog},
               {"vertex", e.vertex},
               {"tag", e.tag.label()}};
        if (e.from != kNoVertex) j["from"] = e.from;
        if (!(e.old_tag == e.tag)) j["old_tag"] = e.old_tag.label();
        out_ << j.dump() << '\n';
    }

    std::ostream& out_;
    std::function<void(const TraceEvent&)> sink_;
};

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open output file '" + path + "'");
    out << content;
}

}  // namespace frogsim
