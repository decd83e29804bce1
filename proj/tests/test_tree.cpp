#include <catch2/catch_amalgamated.hpp>

#include "frogsim/tree.hpp"

using namespace frogsim;

TEST_CASE("build_tree vertex counts match the geometric series") {
    CHECK(build_tree(2, 2, false).vertex_count() == 7);
    CHECK(build_tree(2, 0, false).vertex_count() == 1);
    CHECK(build_tree(3, 2, true).vertex_count() == 14);
    CHECK(build_tree(3, 2, true).heap_count() == 13);
    CHECK(build_tree(5, 3, false).vertex_count() == 1 + 5 + 25 + 125);
}

TEST_CASE("build_tree rejects bad parameters") {
    CHECK_THROWS_AS(build_tree(1, 3, false), std::invalid_argument);
    CHECK_THROWS_AS(build_tree(0, 3, false), std::invalid_argument);
    CHECK_THROWS_AS(build_tree(2, -1, false), std::invalid_argument);
}

TEST_CASE("level arithmetic") {
    const TreeShape t = build_tree(2, 2, true);
    CHECK(t.level(t.root()) == 0);
    CHECK(t.level(t.y_index()) == -1);
    CHECK(t.level(3) == 2);  // first leaf in the d=2, n=2 heap layout
    CHECK(t.level(1) == 1);
    CHECK(t.level(6) == 2);
    CHECK_THROWS_AS(t.level(99), std::invalid_argument);
    CHECK_THROWS_AS(t.level(-3), std::invalid_argument);
}

TEST_CASE("parent/child round trip") {
    const TreeShape t = build_tree(3, 3, false);
    for (VertexId v = 0; v < t.heap_count(); ++v) {
        if (t.is_leaf(v)) continue;
        for (std::int64_t i = 0; i < 3; ++i) {
            const VertexId c = t.child(v, i);
            CHECK(t.parent(c) == v);
            CHECK(t.level(c) == t.level(v) + 1);
        }
    }
}

TEST_CASE("spine runs from leaf to root") {
    const TreeShape t22 = build_tree(2, 2, false);
    CHECK(t22.spine(3) == std::vector<VertexId>{3, 1, 0});

    const TreeShape t20 = build_tree(2, 0, false);
    CHECK(t20.spine(0) == std::vector<VertexId>{0});

    const TreeShape t31 = build_tree(3, 1, false);
    CHECK(t31.spine(2) == std::vector<VertexId>{2, 0});

    CHECK_THROWS_AS(t22.spine(1), std::invalid_argument);
}

TEST_CASE("spine consistency across shapes") {
    for (std::int64_t d : {2, 3, 4}) {
        for (std::int64_t n : {1, 2, 3}) {
            const TreeShape t = build_tree(d, n, false);
            const VertexId leaf = t.level_start(n) + (t.level_width(n) / 2);
            const auto path = t.spine(leaf);
            REQUIRE(static_cast<std::int64_t>(path.size()) == n + 1);
            CHECK(path.front() == leaf);
            CHECK(path.back() == t.root());
            for (std::size_t i = 0; i + 1 < path.size(); ++i) {
                CHECK(t.adjacent(path[i], path[i + 1]));
                CHECK(t.level(path[i]) == t.level(path[i + 1]) + 1);
            }
        }
    }
}

TEST_CASE("subtree membership") {
    const TreeShape t = build_tree(2, 3, false);
    CHECK(t.in_subtree(3, 1));
    CHECK(t.in_subtree(7, 1));
    CHECK(t.in_subtree(1, 1));
    CHECK_FALSE(t.in_subtree(1, 3));
    CHECK_FALSE(t.in_subtree(5, 1));
    CHECK(t.in_subtree(5, 0));
}

TEST_CASE("y has the root as single neighbor") {
    const TreeShape t = build_tree(2, 2, true);
    CHECK(t.neighbor_count(t.y_index()) == 1);
    CHECK(t.adjacent(t.y_index(), t.root()));
    CHECK_FALSE(t.adjacent(t.y_index(), 1));
    CHECK(t.neighbor_count(t.root()) == 3);
    const TreeShape plain = build_tree(2, 2, false);
    CHECK(plain.neighbor_count(plain.root()) == 2);
    CHECK_THROWS_AS(plain.y_index(), std::invalid_argument);
}
