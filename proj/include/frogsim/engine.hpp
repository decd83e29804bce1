#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "frogsim/dist.hpp"
#include "frogsim/oracles.hpp"
#include "frogsim/rng.hpp"
#include "frogsim/tree.hpp"
#include "frogsim/walk.hpp"

namespace frogsim {

// ---------------------------------------------------------------------------
// Tags
// ---------------------------------------------------------------------------

enum class TagKind : std::uint8_t { None, A, B, C };

struct Tag {
    TagKind kind = TagKind::None;
    std::int32_t index = 0;

    bool operator==(const Tag& o) const { return kind == o.kind && index == o.index; }

    std::string label() const {
        switch (kind) {
            case TagKind::None: return "-";
            case TagKind::A: return "A";
            case TagKind::B: return "B" + std::to_string(index);
            case TagKind::C: return "C" + std::to_string(index);
        }
        return "?";
    }
};

/// Per-tag counters collected on tagged runs. m_c[0] counts the retags
/// B_i -> C_0 (the moves from level h to h-1 at time 2^j or later).
struct TagTallies {
    std::int64_t x_a = 0;
    std::vector<std::int64_t> x_b, x_c;  // frozen at y carrying B_i / C_i
    std::vector<std::int64_t> n_b, n_c;  // received tag B_i / C_i at level h
    std::vector<std::int64_t> m_b, m_c;  // moved level h -> h-1 carrying the tag
    std::int64_t frozen_at_y = 0;        // all frogs frozen at y, any tag

    static void bump(std::vector<std::int64_t>& v, std::int64_t i, std::int64_t by = 1) {
        if (i < 0) throw std::logic_error("TagTallies: negative tag index");
        if (static_cast<std::size_t>(i) >= v.size()) v.resize(static_cast<std::size_t>(i) + 1, 0);
        v[static_cast<std::size_t>(i)] += by;
    }

    std::int64_t tagged_frozen_at_y() const {
        std::int64_t s = x_a;
        for (auto v : x_b) s += v;
        for (auto v : x_c) s += v;
        return s;
    }

    /// The decomposition identity: every frog frozen at y inside the tagged
    /// window carries exactly one tag.
    bool decomposition_holds() const { return tagged_frozen_at_y() == frozen_at_y; }
};

// ---------------------------------------------------------------------------
// Run configuration
// ---------------------------------------------------------------------------

/// Initial condition: the pair (eta, start). Sleeping counts are sampled
/// i.i.d. from `distribution` at every vertex except the start vertex, y,
/// the listed zero vertices, and (when a region is given) everything outside
/// the region. Frogs sampled at `awake_vertices` start active, as do the
/// optional special frogs.
struct FrogInitSpec {
    TreeShape shape;
    InitDistribution distribution = InitDistribution::deterministic(0);
    VertexId start_vertex = 0;
    bool place_start_frog = true;
    std::vector<VertexId> zero_vertices;
    std::vector<VertexId> awake_vertices;
    bool all_awake = false;

    struct SpecialFrogs {
        VertexId vertex = 0;
        std::int64_t count = 0;
        bool first_step_away_from_parent = true;
    };
    std::optional<SpecialFrogs> special_frogs;

    /// Sleepers restricted to subtree(root) minus subtree(excluded).
    struct Region {
        VertexId root = 0;
        VertexId excluded = kNoVertex;
    };
    std::optional<Region> region;
};

/// Freeze/halt rules. A frog arriving at a freeze vertex is stopped there;
/// the stop applies after it wakes any sleepers, and the woken frogs freeze
/// in place as well. The gate enforces the self-similar rule: at most one
/// frog may ever enter a non-start vertex from its parent without freezing.
struct StopRules {
    std::vector<VertexId> freeze_at;
    bool freeze_at_leaves = false;
    std::optional<std::int64_t> halt_at_time;
    bool self_similar_gate = false;

    static StopRules none() { return {}; }

    StopRules& freeze_at_vertices(std::vector<VertexId> vs) {
        freeze_at.insert(freeze_at.end(), vs.begin(), vs.end());
        return *this;
    }
    StopRules& freeze_on_move_to(VertexId v) {
        freeze_at.push_back(v);
        return *this;
    }
    StopRules& freeze_leaves() {
        freeze_at_leaves = true;
        return *this;
    }
    StopRules& halt_at(std::int64_t t) {
        halt_at_time = t;
        return *this;
    }
    StopRules& gate() {
        self_similar_gate = true;
        return *this;
    }
};

/// Tag instrumentation: levels relative to L_h, the window [0, 2^j] for the
/// B->C_0 switch, and the strip at 2^{j+1}+1.
struct TaggingConfig {
    bool enabled = false;
    std::int64_t level_h = 0;
    std::int64_t time_j = 0;
};

struct TraceEvent {
    std::int64_t time = 0;
    char kind = '?';  // 'i' init, 'm' move, 'w' wake, 'r' retag, 'f' freeze, 's' strip
    std::int64_t frog = -1;
    VertexId vertex = kNoVertex;
    VertexId from = kNoVertex;  // origin of a move, waker vertex of a wake
    Tag tag{};
    Tag old_tag{};
};

class Simulation;

struct RunConfig {
    WalkKind kind = WalkKind::SimpleRandomWalk;
    StopRules rules;
    TaggingConfig tagging;
    std::int64_t horizon = 0;
    VertexId observe = kNoVertex;
    std::int64_t step_budget = 1'000'000'000;
    bool per_frog_streams = false;
    std::function<void(const TraceEvent&)>* trace = nullptr;
    std::function<void(const Simulation&)>* observer = nullptr;
};

// ---------------------------------------------------------------------------
// Run record
// ---------------------------------------------------------------------------

struct FrozenEvent {
    VertexId vertex = kNoVertex;
    std::int64_t time = 0;
    Tag tag{};
};

struct RunRecord {
    std::int64_t d = 0, n = 0;
    bool has_y = false;
    std::uint64_t seed = 0;
    std::uint64_t config_digest = 0;

    std::vector<std::int64_t> first_visit;  // -1 = never visited
    std::vector<std::int64_t> returns;      // arrival times at the observed vertex
    std::vector<FrozenEvent> frozen;
    std::optional<std::int64_t> cover_time;
    TagTallies tags;

    std::int64_t final_time = 0;
    std::int64_t initial_total = 0;
    std::int64_t steps_taken = 0;
    bool budget_exhausted = false;
    bool halted = false;

    std::int64_t frozen_count_at(VertexId v) const {
        std::int64_t c = 0;
        for (const auto& e : frozen)
            if (e.vertex == v) ++c;
        return c;
    }

    /// Cumulative frozen count at v for t = 0..t_max.
    std::vector<std::int64_t> frozen_curve_at(VertexId v, std::int64_t t_max) const {
        std::vector<std::int64_t> curve(static_cast<std::size_t>(t_max) + 1, 0);
        for (const auto& e : frozen)
            if (e.vertex == v && e.time <= t_max) ++curve[static_cast<std::size_t>(e.time)];
        for (std::size_t t = 1; t < curve.size(); ++t) curve[t] += curve[t - 1];
        return curve;
    }

    std::int64_t returns_by(std::int64_t t) const {
        std::int64_t c = 0;
        for (auto r : returns)
            if (r <= t) ++c;
        return c;
    }

    /// Counters per tag label: {X, N, M}. N and M are defined for B_i and
    /// C_i tags; for A only X is meaningful.
    std::map<std::string, std::array<std::int64_t, 3>> tag_counters() const {
        std::map<std::string, std::array<std::int64_t, 3>> out;
        out["A"] = {tags.x_a, 0, 0};
        auto at = [](const std::vector<std::int64_t>& v, std::size_t i) {
            return i < v.size() ? v[i] : 0;
        };
        const std::size_t nb = std::max({tags.x_b.size(), tags.n_b.size(), tags.m_b.size()});
        for (std::size_t i = 0; i < nb; ++i)
            out["B" + std::to_string(i)] = {at(tags.x_b, i), at(tags.n_b, i), at(tags.m_b, i)};
        const std::size_t nc = std::max({tags.x_c.size(), tags.n_c.size(), tags.m_c.size()});
        for (std::size_t i = 0; i < nc; ++i)
            out["C" + std::to_string(i)] = {at(tags.x_c, i), at(tags.n_c, i), at(tags.m_c, i)};
        return out;
    }

    std::uint64_t digest() const {
        std::uint64_t h = 1469598103934665603ull;
        auto mix = [&h](std::uint64_t x) {
            for (int i = 0; i < 8; ++i) {
                h ^= (x >> (8 * i)) & 0xFFu;
                h *= 1099511628211ull;
            }
        };
        mix(static_cast<std::uint64_t>(d));
        mix(static_cast<std::uint64_t>(n));
        mix(has_y);
        mix(seed);
        mix(config_digest);
        mix(static_cast<std::uint64_t>(final_time));
        mix(static_cast<std::uint64_t>(initial_total));
        mix(static_cast<std::uint64_t>(steps_taken));
        mix(budget_exhausted);
        mix(halted);
        mix(cover_time ? static_cast<std::uint64_t>(*cover_time) : ~0ull);
        for (auto v : first_visit) mix(static_cast<std::uint64_t>(v));
        for (auto r : returns) mix(static_cast<std::uint64_t>(r));
        for (const auto& e : frozen) {
            mix(static_cast<std::uint64_t>(e.vertex));
            mix(static_cast<std::uint64_t>(e.time));
            mix(static_cast<std::uint64_t>(e.tag.kind));
            mix(static_cast<std::uint64_t>(e.tag.index));
        }
        mix(static_cast<std::uint64_t>(tags.x_a));
        for (const auto* vec : {&tags.x_b, &tags.x_c, &tags.n_b, &tags.n_c, &tags.m_b, &tags.m_c})
            for (auto v : *vec) mix(static_cast<std::uint64_t>(v));
        return h;
    }
};

// ---------------------------------------------------------------------------
// Simulation
// ---------------------------------------------------------------------------

/// The discrete-time frog model. One tick: every active frog takes one
/// kernel step synchronously; arrivals are then processed in frog-index
/// order — retag first, then wake (woken frogs inherit the waker's new tag
/// and move starting next tick), then freeze. Simultaneous-wake ties go to
/// the lowest active frog index.
class Simulation {
public:
    struct Frog {
        VertexId cur = 0;
        VertexId prev = kNoVertex;
        Tag tag{};
        bool frozen = false;
        bool forced_child_first_step = false;  // special frogs' conditioned first step
    };

    Simulation(const FrogInitSpec& spec, const RunConfig& cfg, std::uint64_t seed)
        : shape_(spec.shape), cfg_(cfg), seed_(seed) {
        validate(spec);
        record_.d = shape_.degree();
        record_.n = shape_.height();
        record_.has_y = shape_.has_y();
        record_.seed = seed;
        record_.config_digest = digest_config(spec, cfg);
        record_.first_visit.assign(static_cast<std::size_t>(shape_.vertex_count()), -1);
        sleeping_.assign(static_cast<std::size_t>(shape_.vertex_count()), 0);
        if (cfg_.rules.self_similar_gate)
            entered_.assign(static_cast<std::size_t>(shape_.vertex_count()), 0);
        freeze_sorted_ = cfg_.rules.freeze_at;
        std::sort(freeze_sorted_.begin(), freeze_sorted_.end());
        path_rng_ = RandomStream(RandomStream::derive_seed(seed, {7}));
        start_ = spec.start_vertex;
        init_population(spec);
    }

    const TreeShape& shape() const { return shape_; }
    std::int64_t time() const { return time_; }
    std::int64_t active_count() const { return active_count_; }
    std::int64_t sleeping_total() const { return sleeping_total_; }
    std::int64_t frozen_count() const { return frozen_count_; }
    std::int64_t initial_total() const { return initial_total_; }
    const std::vector<Frog>& frogs() const { return frogs_; }
    const std::vector<std::int64_t>& sleeping() const { return sleeping_; }
    const RunRecord& record() const { return record_; }

    bool covered() const { return visited_count_ == shape_.vertex_count(); }

    /// One synchronous step. Returns false from the no-active-frogs fixed point.
    bool tick() {
        if (active_count_ == 0) return false;
        ++time_;
        if (cfg_.tagging.enabled && time_ == strip_time()) {
            for (auto& f : frogs_)
                if (!f.frozen && f.tag.kind != TagKind::None) {
                    emit_trace('s', -1, f.cur, Tag{}, f.tag);
                    f.tag = Tag{};
                }
        }
        const std::size_t n_before = frogs_.size();
        bool any_frozen = false;
        for (std::size_t i = 0; i < n_before; ++i) {
            if (frogs_[i].frozen) continue;
            const VertexId from = frogs_[i].cur;
            VertexId to;
            if (frogs_[i].forced_child_first_step && frogs_[i].prev == kNoVertex) {
                RandomStream& rng = stream_for(i);
                to = shape_.child(from, static_cast<std::int64_t>(rng.below(
                                            static_cast<std::uint64_t>(shape_.degree()))));
            } else {
                const WalkState ws{from, frogs_[i].prev};
                to = step(shape_, cfg_.kind, ws, stream_for(i)).current;
            }
            frogs_[i].prev = from;
            frogs_[i].cur = to;
            ++record_.steps_taken;
            emit_trace('m', static_cast<std::int64_t>(i), to, frogs_[i].tag, frogs_[i].tag,
                       from);
            any_frozen |= process_arrival(i, from, to);
        }
        if (any_frozen) compact();
        check_conservation();
        if (cfg_.observer && *cfg_.observer) (*cfg_.observer)(*this);
        return true;
    }

    /// Step until the horizon, the halt rule, budget exhaustion, or the
    /// no-active-frogs fixed point.
    RunRecord run() {
        const bool immobile = shape_.heap_count() == 1 && !shape_.has_y();
        for (;;) {
            if (active_count_ == 0 || immobile) break;
            if (time_ >= cfg_.horizon) break;
            if (cfg_.rules.halt_at_time && time_ >= *cfg_.rules.halt_at_time) {
                record_.halted = true;
                break;
            }
            if (record_.steps_taken + active_count_ > cfg_.step_budget) {
                record_.budget_exhausted = true;
                break;
            }
            if (!tick()) break;
        }
        record_.final_time = time_;
        std::sort(record_.returns.begin(), record_.returns.end());
        return record_;
    }

private:
    void validate(const FrogInitSpec& spec) {
        shape_.require_valid(spec.start_vertex);
        for (VertexId v : spec.zero_vertices) shape_.require_valid(v);
        for (VertexId v : spec.awake_vertices) shape_.require_valid(v);
        for (VertexId v : cfg_.rules.freeze_at) shape_.require_valid(v);
        if (spec.special_frogs) {
            shape_.require_valid(spec.special_frogs->vertex);
            if (spec.special_frogs->count < 0)
                throw std::invalid_argument("FrogInitSpec: special frog count must be >= 0");
            if (spec.special_frogs->first_step_away_from_parent &&
                (shape_.is_y(spec.special_frogs->vertex) ||
                 shape_.is_leaf(spec.special_frogs->vertex)))
                throw std::invalid_argument(
                    "FrogInitSpec: conditioned special frogs need an internal vertex");
        }
        if (cfg_.horizon < 0) throw std::invalid_argument("RunConfig: horizon must be >= 0");
        if (cfg_.observe != kNoVertex) shape_.require_valid(cfg_.observe);
        if (cfg_.tagging.enabled && (cfg_.tagging.level_h < 1 || cfg_.tagging.time_j < 0))
            throw std::invalid_argument("TaggingConfig: need level_h >= 1 and time_j >= 0");
    }

    // Counts are sampled at v iff v is not y, not a zero vertex, inside the
    // region (when one is set), and not the start vertex — unless v is
    // listed awake, in which case its frogs are sampled and start active
    // (the start-vertex rule only forbids sleepers).
    void init_population(const FrogInitSpec& spec) {
        RandomStream counts_rng(RandomStream::derive_seed(seed_, {9}));
        const std::size_t V = static_cast<std::size_t>(shape_.vertex_count());
        std::vector<char> zero(V, 0);
        for (VertexId v : spec.zero_vertices) zero[static_cast<std::size_t>(v)] = 1;
        std::vector<char> awake_here(V, 0);
        for (VertexId v : spec.awake_vertices) awake_here[static_cast<std::size_t>(v)] = 1;

        if (spec.place_start_frog) {
            Tag t = cfg_.tagging.enabled ? Tag{TagKind::A, 0} : Tag{};
            spawn(spec.start_vertex, t, false, 0, spec.start_vertex, 0);
        }
        if (spec.special_frogs) {
            const auto& sp = *spec.special_frogs;
            for (std::int64_t i = 0; i < sp.count; ++i)
                spawn(sp.vertex, Tag{}, sp.first_step_away_from_parent, 1, sp.vertex, i);
        }

        for (VertexId v = 0; v < shape_.vertex_count(); ++v) {
            if (shape_.is_y(v)) continue;
            if (zero[static_cast<std::size_t>(v)]) continue;
            const bool awake = spec.all_awake || awake_here[static_cast<std::size_t>(v)];
            if (v == spec.start_vertex && !awake) continue;
            if (spec.region) {
                if (!shape_.in_subtree(v, spec.region->root)) continue;
                if (spec.region->excluded != kNoVertex && v != spec.region->root &&
                    shape_.in_subtree(v, spec.region->excluded))
                    continue;
            }
            const std::int64_t count = spec.distribution.sample(counts_rng);
            if (count == 0) continue;
            if (awake) {
                for (std::int64_t s = 0; s < count; ++s) spawn(v, Tag{}, false, 2, v, s);
            } else {
                sleeping_[static_cast<std::size_t>(v)] = count;
                sleeping_total_ += count;
            }
        }
        initial_total_ = active_count_ + sleeping_total_;
        record_.initial_total = initial_total_;
    }

    // identity = (id_kind, vertex, slot) fixes the per-frog stream, so
    // coupled runs sharing a master seed give every frog the same path
    // regardless of when it wakes.
    void spawn(VertexId at, Tag tag, bool forced_child, std::uint64_t id_kind, VertexId id_vertex,
               std::int64_t id_slot) {
        frogs_.push_back(Frog{at, kNoVertex, tag, false, forced_child});
        if (cfg_.per_frog_streams)
            streams_.push_back(RandomStream(RandomStream::derive_seed(
                seed_, {id_kind, static_cast<std::uint64_t>(id_vertex),
                        static_cast<std::uint64_t>(id_slot)})));
        ++active_count_;
        mark_visited(at, time_);
        emit_trace('i', static_cast<std::int64_t>(frogs_.size()) - 1, at, tag, tag);
    }

    RandomStream& stream_for(std::size_t i) {
        return cfg_.per_frog_streams ? streams_[i] : path_rng_;
    }

    void mark_visited(VertexId v, std::int64_t t) {
        auto& fv = record_.first_visit[static_cast<std::size_t>(v)];
        if (fv < 0) {
            fv = t;
            ++visited_count_;
            if (visited_count_ == shape_.vertex_count()) record_.cover_time = t;
        }
    }

    bool is_freeze_vertex(VertexId v) const {
        if (cfg_.rules.freeze_at_leaves && shape_.is_leaf(v)) return true;
        return std::binary_search(freeze_sorted_.begin(), freeze_sorted_.end(), v);
    }

    std::int64_t strip_time() const {
        return (std::int64_t{1} << (cfg_.tagging.time_j + 1)) + 1;
    }

    // Tag transition for a frog arriving at `to` from `from`; updates the
    // N/M tallies. Returns true when the frog received a B/C tag at level h
    // this arrival (its wake inheritors then count toward N as well).
    bool retag(Frog& f, std::int64_t frog_idx, VertexId from, VertexId to) {
        if (!cfg_.tagging.enabled || f.tag.kind == TagKind::None) return false;
        const std::int64_t h = cfg_.tagging.level_h;
        const std::int64_t lf = shape_.level(from);
        const std::int64_t lt = shape_.level(to);
        const std::int64_t tj = std::int64_t{1} << cfg_.tagging.time_j;
        const Tag old = f.tag;
        if (lt == h && lf == h - 1) {
            switch (f.tag.kind) {
                case TagKind::A: f.tag = Tag{TagKind::B, 0}; break;
                case TagKind::B: f.tag = Tag{TagKind::B, f.tag.index + 1}; break;
                case TagKind::C: f.tag = Tag{TagKind::C, f.tag.index + 1}; break;
                default: return false;
            }
            if (f.tag.kind == TagKind::B) TagTallies::bump(record_.tags.n_b, f.tag.index);
            else TagTallies::bump(record_.tags.n_c, f.tag.index);
            emit_trace('r', frog_idx, to, f.tag, old);
            return true;
        }
        if (lf == h && lt == h - 1) {
            if (f.tag.kind == TagKind::B) {
                if (time_ >= tj) {
                    TagTallies::bump(record_.tags.m_c, 0);
                    f.tag = Tag{TagKind::C, 0};
                    emit_trace('r', frog_idx, to, f.tag, old);
                } else {
                    TagTallies::bump(record_.tags.m_b, f.tag.index);
                }
            } else if (f.tag.kind == TagKind::C) {
                TagTallies::bump(record_.tags.m_c, f.tag.index);
            }
        }
        return false;
    }

    // Returns true when any frog froze (the caller then compacts).
    bool process_arrival(std::size_t i, VertexId from, VertexId to) {
        mark_visited(to, time_);
        if (to == cfg_.observe) record_.returns.push_back(time_);
        const bool counts_n = retag(frogs_[i], static_cast<std::int64_t>(i), from, to);

        bool any_frozen = false;
        const std::int64_t sleepers = sleeping_[static_cast<std::size_t>(to)];
        if (sleepers > 0) {
            sleeping_[static_cast<std::size_t>(to)] = 0;
            sleeping_total_ -= sleepers;
            const Tag inherited = frogs_[i].tag;
            const bool freeze_here = is_freeze_vertex(to);
            for (std::int64_t s = 0; s < sleepers; ++s) {
                spawn(to, inherited, false, 2, to, s);
                emit_trace('w', static_cast<std::int64_t>(frogs_.size()) - 1, to, inherited,
                           inherited, to);
                if (counts_n) {
                    if (inherited.kind == TagKind::B)
                        TagTallies::bump(record_.tags.n_b, inherited.index);
                    else if (inherited.kind == TagKind::C)
                        TagTallies::bump(record_.tags.n_c, inherited.index);
                }
                if (freeze_here) {
                    freeze(frogs_.size() - 1);
                    any_frozen = true;
                }
            }
        }

        bool freeze_mover = is_freeze_vertex(to);
        if (cfg_.rules.self_similar_gate && to != start_ && to != 0 && !shape_.is_y(to) &&
            from == shape_.parent(to)) {
            if (entered_[static_cast<std::size_t>(to)]) freeze_mover = true;
            else entered_[static_cast<std::size_t>(to)] = 1;
        }
        if (freeze_mover) {
            freeze(i);
            any_frozen = true;
        }
        return any_frozen;
    }

    void freeze(std::size_t i) {
        Frog& f = frogs_[i];
        f.frozen = true;
        --active_count_;
        ++frozen_count_;
        record_.frozen.push_back(FrozenEvent{f.cur, time_, f.tag});
        if (shape_.has_y() && shape_.is_y(f.cur)) {
            ++record_.tags.frozen_at_y;
            switch (f.tag.kind) {
                case TagKind::A: ++record_.tags.x_a; break;
                case TagKind::B: TagTallies::bump(record_.tags.x_b, f.tag.index); break;
                case TagKind::C: TagTallies::bump(record_.tags.x_c, f.tag.index); break;
                default: break;
            }
        }
        emit_trace('f', static_cast<std::int64_t>(i), f.cur, f.tag, f.tag);
    }

    void compact() {
        std::size_t w = 0;
        for (std::size_t r = 0; r < frogs_.size(); ++r) {
            if (frogs_[r].frozen) continue;
            if (w != r) {
                frogs_[w] = frogs_[r];
                if (cfg_.per_frog_streams) streams_[w] = streams_[r];
            }
            ++w;
        }
        frogs_.resize(w);
        if (cfg_.per_frog_streams) streams_.resize(w);
    }

    void check_conservation() const {
        if (active_count_ + sleeping_total_ + frozen_count_ != initial_total_)
            throw std::logic_error("Simulation: frog conservation violated");
    }

    void emit_trace(char kind, std::int64_t frog, VertexId v, Tag tag, Tag old_tag,
                    VertexId from = kNoVertex) {
        if (cfg_.trace && *cfg_.trace)
            (*cfg_.trace)(TraceEvent{time_, kind, frog, v, from, tag, old_tag});
    }

    static std::uint64_t digest_config(const FrogInitSpec& spec, const RunConfig& cfg) {
        std::uint64_t h = 1469598103934665603ull;
        auto mix = [&h](std::uint64_t x) {
            for (int i = 0; i < 8; ++i) {
                h ^= (x >> (8 * i)) & 0xFFu;
                h *= 1099511628211ull;
            }
        };
        mix(static_cast<std::uint64_t>(spec.shape.degree()));
        mix(static_cast<std::uint64_t>(spec.shape.height()));
        mix(spec.shape.has_y());
        mix(static_cast<std::uint64_t>(spec.distribution.kind()));
        std::uint64_t mu_bits;
        const double mu = spec.distribution.mean();
        static_assert(sizeof(mu_bits) == sizeof(mu));
        __builtin_memcpy(&mu_bits, &mu, sizeof(mu));
        mix(mu_bits);
        mix(static_cast<std::uint64_t>(spec.start_vertex));
        mix(spec.place_start_frog);
        mix(spec.all_awake);
        for (VertexId v : spec.zero_vertices) mix(static_cast<std::uint64_t>(v));
        for (VertexId v : spec.awake_vertices) mix(static_cast<std::uint64_t>(v));
        if (spec.special_frogs) {
            mix(static_cast<std::uint64_t>(spec.special_frogs->vertex));
            mix(static_cast<std::uint64_t>(spec.special_frogs->count));
            mix(spec.special_frogs->first_step_away_from_parent);
        }
        if (spec.region) {
            mix(static_cast<std::uint64_t>(spec.region->root));
            mix(static_cast<std::uint64_t>(spec.region->excluded));
        }
        mix(static_cast<std::uint64_t>(cfg.kind));
        for (VertexId v : cfg.rules.freeze_at) mix(static_cast<std::uint64_t>(v));
        mix(cfg.rules.freeze_at_leaves);
        mix(cfg.rules.self_similar_gate);
        mix(cfg.rules.halt_at_time ? static_cast<std::uint64_t>(*cfg.rules.halt_at_time) : ~0ull);
        mix(cfg.tagging.enabled);
        mix(static_cast<std::uint64_t>(cfg.tagging.level_h));
        mix(static_cast<std::uint64_t>(cfg.tagging.time_j));
        mix(static_cast<std::uint64_t>(cfg.horizon));
        mix(static_cast<std::uint64_t>(cfg.observe));
        mix(static_cast<std::uint64_t>(cfg.step_budget));
        mix(cfg.per_frog_streams);
        return h;
    }

    TreeShape shape_;
    RunConfig cfg_;
    std::uint64_t seed_;
    VertexId start_ = 0;

    std::vector<Frog> frogs_;
    std::vector<RandomStream> streams_;
    std::vector<std::int64_t> sleeping_;
    std::vector<char> entered_;
    std::vector<VertexId> freeze_sorted_;
    RandomStream path_rng_;

    std::int64_t time_ = 0;
    std::int64_t active_count_ = 0;
    std::int64_t sleeping_total_ = 0;
    std::int64_t frozen_count_ = 0;
    std::int64_t initial_total_ = 0;
    std::int64_t visited_count_ = 0;

    RunRecord record_;
};

inline RunRecord run(const FrogInitSpec& spec, const RunConfig& cfg, std::uint64_t seed) {
    Simulation sim(spec, cfg, seed);
    return sim.run();
}

inline std::vector<std::int64_t> return_process(const RunRecord& record) {
    return record.returns;
}

// ---------------------------------------------------------------------------
// Model presets
// ---------------------------------------------------------------------------

/// Named model variants used by the CLI and the harness.
///   srw                      plain frog model, simple random walk paths
///   nonbacktracking          root-biased nonbacktracking paths, no stops
///   self-similar             uniform nonbacktracking + subtree gate + frogs
///                            frozen on arrival at the root
///   self-similar-leaves      same, with frogs frozen at leaves too
///   frozen-y                 simple random walk, frozen on moving to y
inline RunConfig make_variant(const std::string& name, const TreeShape& shape) {
    RunConfig cfg;
    if (name == "srw") {
        cfg.kind = WalkKind::SimpleRandomWalk;
    } else if (name == "nonbacktracking") {
        cfg.kind = WalkKind::RootBiasedNonbacktracking;
    } else if (name == "self-similar" || name == "self-similar-leaves") {
        cfg.kind = WalkKind::UniformNonbacktracking;
        cfg.rules.gate().freeze_on_move_to(shape.root());
        if (name == "self-similar-leaves") cfg.rules.freeze_leaves();
    } else if (name == "frozen-y") {
        if (!shape.has_y()) throw std::invalid_argument("variant frozen-y requires a shape with y");
        cfg.kind = WalkKind::SimpleRandomWalk;
        cfg.rules.freeze_on_move_to(shape.y_index());
    } else {
        throw std::invalid_argument("unknown variant '" + name + "'");
    }
    return cfg;
}

// ---------------------------------------------------------------------------
// FM(v_k, l) and the I_k statistic
// ---------------------------------------------------------------------------

/// FM(v_k, ell): the frog model confined to subtree(v_k) minus
/// subtree(v_{k-1}), root-biased nonbacktracking paths frozen at v_{k-1} and
/// v_{k+1}, Poi(mu) frogs awake at v_k plus ell special frogs whose first
/// steps are conditioned away from the parent. The designated spine runs to
/// the leftmost leaf, so v_{k-1} is child 0 of v_k. All choices of ell share
/// per-frog path streams derived from one master seed, which realizes the
/// infinite-pile coupling.
struct FmInstance {
    TreeShape shape;
    VertexId v_k = 0;
    VertexId v_km1 = 0;
    VertexId v_kp1 = 0;
    std::int64_t k = 0;
    double mu = 0.0;
    std::int64_t horizon = 0;  // d^k
};

inline FmInstance make_fm_instance(const TreeShape& shape, VertexId v_k, double beta) {
    shape.require_valid(v_k);
    if (shape.is_y(v_k)) throw std::invalid_argument("measure_I_k: v_k cannot be y");
    const std::int64_t n = shape.height();
    const std::int64_t k = n - shape.level(v_k);
    const std::int64_t J = j_index(shape.degree(), n, beta);
    if (!(k > J && k < n))
        throw std::invalid_argument("measure_I_k: need J < k < n (J=" + std::to_string(J) +
                                    ", k=" + std::to_string(k) + ", n=" + std::to_string(n) + ")");
    if (k < 1 || shape.is_leaf(v_k))
        throw std::invalid_argument("measure_I_k: v_k must be internal");
    FmInstance fm;
    fm.shape = shape;
    fm.v_k = v_k;
    fm.v_km1 = shape.child(v_k, 0);
    fm.v_kp1 = shape.parent(v_k);
    fm.k = k;
    fm.mu = (3.0 + beta) * static_cast<double>(shape.degree()) *
            static_cast<double>(shape.degree() + 1);
    std::int64_t dk = 1;
    for (std::int64_t i = 0; i < k; ++i) dk *= shape.degree();
    fm.horizon = dk;
    return fm;
}

/// Cumulative count of frogs frozen at v_{k-1} by each time t in FM(v_k, ell).
inline std::vector<std::int64_t> fm_frozen_curve(const FmInstance& fm, std::int64_t ell,
                                                 std::uint64_t master_seed,
                                                 std::int64_t step_budget = 1'000'000'000) {
    FrogInitSpec spec;
    spec.shape = fm.shape;
    spec.distribution = InitDistribution::poisson(fm.mu);
    spec.start_vertex = fm.v_k;
    spec.place_start_frog = false;
    spec.awake_vertices = {fm.v_k};
    spec.special_frogs = FrogInitSpec::SpecialFrogs{fm.v_k, ell, true};
    spec.region = FrogInitSpec::Region{fm.v_k, fm.v_km1};

    RunConfig cfg;
    cfg.kind = WalkKind::RootBiasedNonbacktracking;
    cfg.rules.freeze_at_vertices({fm.v_km1, fm.v_kp1});
    cfg.horizon = fm.horizon;
    cfg.step_budget = step_budget;
    cfg.per_frog_streams = true;

    RunRecord rec = run(spec, cfg, master_seed);
    return rec.frozen_curve_at(fm.v_km1, fm.horizon);
}

/// Definition threshold: at least beta*t/10000 frogs frozen at v_{k-1} for
/// every max(3, ceil(ell/beta)) <= t <= d^k.
inline bool fm_threshold_met(const std::vector<std::int64_t>& curve, double beta,
                             std::int64_t ell, std::int64_t horizon) {
    const std::int64_t t0 =
        std::max<std::int64_t>(3, static_cast<std::int64_t>(
                                      std::ceil(static_cast<double>(ell) / beta)));
    for (std::int64_t t = t0; t <= horizon; ++t) {
        if (static_cast<double>(curve[static_cast<std::size_t>(t)]) < beta * t / 10000.0)
            return false;
    }
    return true;
}

struct IkOutcome {
    std::int64_t value = 0;
    std::int64_t cap = 0;  // floor(beta d^k) + 1: the vacuity bound
    bool capped = false;
};

/// The smallest ell for which FM(v_k, ell) sustains the frozen flow, found by
/// incrementing ell under the shared-stream coupling. Always <= beta d^k + 1.
inline IkOutcome measure_I_k_detailed(const TreeShape& shape, VertexId v_k, double beta,
                                      std::uint64_t master_seed) {
    const FmInstance fm = make_fm_instance(shape, v_k, beta);
    IkOutcome out;
    out.cap = static_cast<std::int64_t>(std::floor(beta * static_cast<double>(fm.horizon))) + 1;
    for (std::int64_t ell = 1;; ++ell) {
        const std::int64_t t0 =
            std::max<std::int64_t>(3, static_cast<std::int64_t>(
                                          std::ceil(static_cast<double>(ell) / beta)));
        if (t0 > fm.horizon) {  // vacuous test
            out.value = ell;
            out.capped = true;
            return out;
        }
        const auto curve = fm_frozen_curve(fm, ell, master_seed);
        if (fm_threshold_met(curve, beta, ell, fm.horizon)) {
            out.value = ell;
            return out;
        }
    }
}

inline std::int64_t measure_I_k(const TreeShape& shape, VertexId v_k, double beta,
                                RandomStream& rng) {
    return measure_I_k_detailed(shape, v_k, beta, rng.next_u64()).value;
}

}  // namespace frogsim
