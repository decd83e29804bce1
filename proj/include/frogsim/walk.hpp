#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "frogsim/rng.hpp"
#include "frogsim/tree.hpp"

namespace frogsim {

enum class WalkKind { SimpleRandomWalk, UniformNonbacktracking, RootBiasedNonbacktracking };

inline const char* walk_kind_name(WalkKind k) {
    switch (k) {
        case WalkKind::SimpleRandomWalk: return "srw";
        case WalkKind::UniformNonbacktracking: return "uniform-nonbacktracking";
        case WalkKind::RootBiasedNonbacktracking: return "root-biased-nonbacktracking";
    }
    return "?";
}

/// Position plus the previously occupied vertex (kNoVertex before the first
/// step), which the nonbacktracking kernels condition on.
struct WalkState {
    VertexId current = 0;
    VertexId previous = kNoVertex;
};

namespace detail {

// Child of v addressed by a slot in [0, d-2], skipping the child `skip`.
inline VertexId child_skipping(const TreeShape& shape, VertexId v, VertexId skip,
                               std::int64_t slot) {
    const VertexId first = shape.degree() * v + 1;
    const std::int64_t sj = skip - first;
    VertexId c = first + slot;
    if (sj >= 0 && sj < shape.degree() && slot >= sj) ++c;
    return c;
}

// Uniform over all neighbors of v; forced moves at degree-1 vertices.
inline VertexId uniform_neighbor(const TreeShape& shape, VertexId v, RandomStream& rng) {
    if (shape.is_y(v)) return shape.root();
    const std::int64_t d = shape.degree();
    if (v == 0) {
        const std::int64_t kids = shape.height() == 0 ? 0 : d;
        const std::int64_t deg = kids + (shape.has_y() ? 1 : 0);
        if (deg == 0) throw std::invalid_argument("step: vertex has no neighbors");
        const std::int64_t r =
            static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(deg)));
        return r < kids ? shape.child(0, r) : shape.y_index();
    }
    if (shape.is_leaf(v)) return shape.parent(v);
    const std::int64_t r = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(d + 1)));
    return r < d ? shape.child(v, r) : shape.parent(v);
}

// Uniform over the d neighbors of an internal non-root vertex excluding prev.
inline VertexId internal_nonbacktracking(const TreeShape& shape, VertexId v, VertexId prev,
                                         RandomStream& rng) {
    const std::int64_t d = shape.degree();
    const std::int64_t r = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(d)));
    if (prev == shape.parent(v)) return shape.child(v, r);
    return (r == 0) ? shape.parent(v) : child_skipping(shape, v, prev, r - 1);
}

}  // namespace detail

/// Sample one transition of the given kernel.
///
/// SimpleRandomWalk: uniform over neighbors.
/// UniformNonbacktracking: first step uniform over all neighbors, then
///   uniform over neighbors excluding the previous one; at degree-1 vertices
///   (leaves, y) the move back is forced.
/// RootBiasedNonbacktracking: at the root arriving from child c, return to c
///   with probability 1/d^2 and go to each other child with probability
///   (d+1)/d^2; at a leaf, move to the parent; otherwise uniform over the d
///   neighbors excluding the previous one. The kernel lives on the plain
///   tree: y is never a destination and arriving from y is rejected.
inline WalkState step(const TreeShape& shape, WalkKind kind, const WalkState& state,
                      RandomStream& rng) {
    const VertexId v = state.current;
    shape.require_valid(v);
    const std::int64_t d = shape.degree();
    VertexId next = kNoVertex;

    switch (kind) {
        case WalkKind::SimpleRandomWalk:
            next = detail::uniform_neighbor(shape, v, rng);
            break;

        case WalkKind::UniformNonbacktracking: {
            const VertexId prev = state.previous;
            if (prev == kNoVertex) {
                next = detail::uniform_neighbor(shape, v, rng);
                break;
            }
            if (shape.is_y(v)) { next = shape.root(); break; }
            if (v == 0) {
                const std::int64_t kids = shape.height() == 0 ? 0 : d;
                if (shape.is_y(prev)) {
                    // Forced back when y is the only neighbor.
                    next = (kids == 0) ? prev
                                       : shape.child(0, static_cast<std::int64_t>(rng.below(
                                                            static_cast<std::uint64_t>(kids))));
                    break;
                }
                const std::int64_t options = kids - 1 + (shape.has_y() ? 1 : 0);
                if (options == 0) { next = prev; break; }
                const std::int64_t r = static_cast<std::int64_t>(
                    rng.below(static_cast<std::uint64_t>(options)));
                next = (r < kids - 1) ? detail::child_skipping(shape, 0, prev, r)
                                      : shape.y_index();
                break;
            }
            if (shape.is_leaf(v)) { next = shape.parent(v); break; }
            next = detail::internal_nonbacktracking(shape, v, prev, rng);
            break;
        }

        case WalkKind::RootBiasedNonbacktracking: {
            if (shape.is_y(v))
                throw std::invalid_argument("step: root-biased walk is not defined at y");
            if (v == 0 && shape.height() == 0)
                throw std::invalid_argument("step: vertex has no neighbors");
            if (shape.is_leaf(v)) { next = shape.parent(v); break; }
            const VertexId prev = state.previous;
            if (prev == kNoVertex) {
                if (v == 0) {
                    next = shape.child(0, static_cast<std::int64_t>(
                                              rng.below(static_cast<std::uint64_t>(d))));
                } else {
                    const std::int64_t r = static_cast<std::int64_t>(
                        rng.below(static_cast<std::uint64_t>(d + 1)));
                    next = r < d ? shape.child(v, r) : shape.parent(v);
                }
                break;
            }
            if (v == 0) {
                if (shape.is_y(prev))
                    throw std::invalid_argument("step: root-biased walk cannot arrive from y");
                // Integer-exact split of d^2 slots: 1 slot returns to prev,
                // each of the d-1 other children gets d+1 slots.
                const std::uint64_t w = rng.below(static_cast<std::uint64_t>(d * d));
                if (w == 0) { next = prev; break; }
                const std::int64_t slot =
                    static_cast<std::int64_t>((w - 1) / static_cast<std::uint64_t>(d + 1));
                next = detail::child_skipping(shape, 0, prev, slot);
                break;
            }
            next = detail::internal_nonbacktracking(shape, v, prev, rng);
            break;
        }
    }
    return WalkState{next, v};
}

/// Exact transition row of the kernel: successors with probabilities.
/// Written as a separate enumeration so Monte Carlo sampling and dynamic
/// programming cross-check each other through independent code paths.
inline std::vector<std::pair<VertexId, double>> kernel_row(const TreeShape& shape, WalkKind kind,
                                                           const WalkState& state) {
    const VertexId v = state.current;
    shape.require_valid(v);
    const std::int64_t d = shape.degree();
    std::vector<std::pair<VertexId, double>> row;

    auto all_neighbors = [&]() {
        std::vector<VertexId> nb;
        if (shape.is_y(v)) { nb.push_back(shape.root()); return nb; }
        if (v != 0) nb.push_back(shape.parent(v));
        if (!shape.is_leaf(v))
            for (std::int64_t i = 0; i < d; ++i) nb.push_back(shape.child(v, i));
        if (v == 0 && shape.has_y()) nb.push_back(shape.y_index());
        return nb;
    };

    switch (kind) {
        case WalkKind::SimpleRandomWalk: {
            auto nb = all_neighbors();
            for (VertexId u : nb) row.emplace_back(u, 1.0 / static_cast<double>(nb.size()));
            return row;
        }
        case WalkKind::UniformNonbacktracking: {
            auto nb = all_neighbors();
            if (state.previous != kNoVertex && nb.size() > 1) {
                std::vector<VertexId> filtered;
                for (VertexId u : nb)
                    if (u != state.previous) filtered.push_back(u);
                nb = std::move(filtered);
            }
            for (VertexId u : nb) row.emplace_back(u, 1.0 / static_cast<double>(nb.size()));
            return row;
        }
        case WalkKind::RootBiasedNonbacktracking: {
            if (shape.is_y(v))
                throw std::invalid_argument("kernel_row: root-biased walk is not defined at y");
            if (shape.is_leaf(v)) {
                row.emplace_back(shape.parent(v), 1.0);
                return row;
            }
            if (state.previous == kNoVertex) {
                if (v == 0) {
                    for (std::int64_t i = 0; i < d; ++i)
                        row.emplace_back(shape.child(0, i), 1.0 / static_cast<double>(d));
                } else {
                    row.emplace_back(shape.parent(v), 1.0 / static_cast<double>(d + 1));
                    for (std::int64_t i = 0; i < d; ++i)
                        row.emplace_back(shape.child(v, i), 1.0 / static_cast<double>(d + 1));
                }
                return row;
            }
            const VertexId prev = state.previous;
            if (v == 0) {
                if (shape.is_y(prev))
                    throw std::invalid_argument("kernel_row: root-biased walk cannot arrive from y");
                const double dd = static_cast<double>(d) * static_cast<double>(d);
                row.emplace_back(prev, 1.0 / dd);
                for (std::int64_t i = 0; i < d; ++i) {
                    VertexId c = shape.child(0, i);
                    if (c != prev) row.emplace_back(c, static_cast<double>(d + 1) / dd);
                }
                return row;
            }
            if (prev != shape.parent(v))
                row.emplace_back(shape.parent(v), 1.0 / static_cast<double>(d));
            for (std::int64_t i = 0; i < d; ++i) {
                VertexId c = shape.child(v, i);
                if (c != prev) row.emplace_back(c, 1.0 / static_cast<double>(d));
            }
            return row;
        }
    }
    throw std::logic_error("kernel_row: unknown walk kind");
}

}  // namespace frogsim
