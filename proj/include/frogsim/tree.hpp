#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace frogsim {

using VertexId = std::int64_t;

/// Sentinel meaning "no vertex" (e.g. the previous vertex of a walk that has
/// not moved yet).
inline constexpr VertexId kNoVertex = -1;

/// Geometry of the full d-ary tree of height n, optionally augmented with an
/// extra vertex y attached to the root.
///
/// Vertices are laid out as an implicit heap: root = 0, the children of v are
/// d*v+1 .. d*v+d. Level-k vertices occupy the contiguous index range
/// [level_start(k), level_start(k+1)). The extra vertex y, when present, is
/// the sentinel index just past the heap (`y_index() == heap_count()`), so
/// per-vertex arrays of size vertex_count() cover it too. y sits at level -1
/// and its single neighbor is the root.
class TreeShape {
public:
    TreeShape() = default;

    TreeShape(std::int64_t degree, std::int64_t height, bool with_y)
        : degree_(degree), height_(height), has_y_(with_y) {
        if (degree < 2) throw std::invalid_argument("TreeShape: degree must be >= 2");
        if (height < 0) throw std::invalid_argument("TreeShape: height must be >= 0");
        level_start_.resize(static_cast<std::size_t>(height) + 2);
        std::int64_t start = 0;
        std::int64_t width = 1;
        for (std::int64_t k = 0; k <= height; ++k) {
            level_start_[static_cast<std::size_t>(k)] = start;
            if (start > kMaxVertices || width > kMaxVertices - start)
                throw std::invalid_argument("TreeShape: tree too large for explicit representation");
            start += width;
            width *= degree;
        }
        level_start_[static_cast<std::size_t>(height) + 1] = start;
        heap_count_ = start;
    }

    std::int64_t degree() const { return degree_; }
    std::int64_t height() const { return height_; }
    bool has_y() const { return has_y_; }

    /// Number of heap vertices, (d^(n+1)-1)/(d-1).
    std::int64_t heap_count() const { return heap_count_; }

    /// Total vertices including y when present.
    std::int64_t vertex_count() const { return heap_count_ + (has_y_ ? 1 : 0); }

    VertexId root() const { return 0; }

    VertexId y_index() const {
        if (!has_y_) throw std::invalid_argument("TreeShape: no y vertex in this shape");
        return heap_count_;
    }

    bool is_y(VertexId v) const { return has_y_ && v == heap_count_; }

    bool valid(VertexId v) const {
        return (v >= 0 && v < heap_count_) || is_y(v);
    }

    void require_valid(VertexId v) const {
        if (!valid(v)) throw std::invalid_argument("TreeShape: invalid vertex index " + std::to_string(v));
    }

    /// Distance from the root; y maps to -1.
    std::int64_t level(VertexId v) const {
        require_valid(v);
        if (is_y(v)) return -1;
        // Binary search over the level boundaries.
        std::int64_t lo = 0, hi = height_;
        while (lo < hi) {
            std::int64_t mid = (lo + hi + 1) / 2;
            if (level_start_[static_cast<std::size_t>(mid)] <= v) lo = mid; else hi = mid - 1;
        }
        return lo;
    }

    std::int64_t level_start(std::int64_t k) const {
        if (k < 0 || k > height_ + 1) throw std::invalid_argument("TreeShape: level out of range");
        return level_start_[static_cast<std::size_t>(k)];
    }

    std::int64_t level_width(std::int64_t k) const {
        return level_start(k + 1) - level_start(k);
    }

    bool is_leaf(VertexId v) const {
        require_valid(v);
        return !is_y(v) && v >= level_start_[static_cast<std::size_t>(height_)];
    }

    bool is_root(VertexId v) const { return v == 0; }

    /// Parent in the tree; the parent of y and of the root is undefined.
    VertexId parent(VertexId v) const {
        require_valid(v);
        if (v == 0 || is_y(v)) throw std::invalid_argument("TreeShape: vertex has no parent");
        return (v - 1) / degree_;
    }

    VertexId child(VertexId v, std::int64_t i) const {
        require_valid(v);
        if (is_y(v) || is_leaf(v)) throw std::invalid_argument("TreeShape: vertex has no children");
        if (i < 0 || i >= degree_) throw std::invalid_argument("TreeShape: child index out of range");
        return degree_ * v + 1 + i;
    }

    /// Degree of v in the graph (root: d children plus y when present).
    std::int64_t neighbor_count(VertexId v) const {
        require_valid(v);
        if (is_y(v)) return 1;
        if (v == 0) return (height_ == 0 ? 0 : degree_) + (has_y_ ? 1 : 0);
        if (is_leaf(v)) return 1;
        return degree_ + 1;
    }

    /// True when u is adjacent to v.
    bool adjacent(VertexId u, VertexId v) const {
        if (!valid(u) || !valid(v)) return false;
        if (is_y(u)) return v == 0;
        if (is_y(v)) return u == 0;
        if (u == v) return false;
        if (u != 0 && parent(u) == v) return true;
        if (v != 0 && parent(v) == u) return true;
        return false;
    }

    /// True when `descendant` lies in the subtree rooted at `ancestor`
    /// (a vertex is a descendant of itself).
    bool in_subtree(VertexId descendant, VertexId ancestor) const {
        require_valid(descendant);
        require_valid(ancestor);
        if (is_y(ancestor)) return is_y(descendant);
        if (is_y(descendant)) return false;
        VertexId v = descendant;
        while (v > ancestor) v = (v - 1) / degree_;
        return v == ancestor;
    }

    /// Path [v_0, v_1, ..., v_n] from a leaf up to the root.
    std::vector<VertexId> spine(VertexId leaf) const {
        require_valid(leaf);
        if (!is_leaf(leaf)) throw std::invalid_argument("TreeShape: spine requires a leaf");
        std::vector<VertexId> path;
        path.reserve(static_cast<std::size_t>(height_) + 1);
        VertexId v = leaf;
        path.push_back(v);
        while (v != 0) {
            v = (v - 1) / degree_;
            path.push_back(v);
        }
        return path;
    }

    /// The leftmost leaf below v (v itself if v is a leaf).
    VertexId leftmost_leaf(VertexId v) const {
        require_valid(v);
        if (is_y(v)) throw std::invalid_argument("TreeShape: y has no descendant leaf");
        while (!is_leaf(v)) v = degree_ * v + 1;
        return v;
    }

    bool operator==(const TreeShape& o) const {
        return degree_ == o.degree_ && height_ == o.height_ && has_y_ == o.has_y_;
    }

private:
    static constexpr std::int64_t kMaxVertices = std::int64_t{1} << 27;

    std::int64_t degree_ = 2;
    std::int64_t height_ = 0;
    bool has_y_ = false;
    std::int64_t heap_count_ = 1;
    std::vector<std::int64_t> level_start_{0, 1};
};

inline TreeShape build_tree(std::int64_t d, std::int64_t n, bool with_y) {
    return TreeShape(d, n, with_y);
}

}  // namespace frogsim
