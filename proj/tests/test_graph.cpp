#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "regenn/errors.hpp"
#include "regenn/graph.hpp"
#include "test_util.hpp"

using namespace regenn;

namespace {

/// Brute-force oracle: per pair, walk every (sample, timestamp) in order and
/// sum T[i,j,u] + T[i,j,v] where both are non-zero.
Tensor cooccurrence_oracle(const Tensor& t) {
    const std::size_t s = t.shape.extent(0);
    const std::size_t w = t.shape.extent(1);
    const std::size_t v = t.shape.extent(2);
    Tensor a(Shape{v, v});
    for (std::size_t u = 0; u < v; ++u) {
        for (std::size_t q = 0; q < v; ++q) {
            double acc = 0.0;
            for (std::size_t i = 0; i < s; ++i) {
                for (std::size_t j = 0; j < w; ++j) {
                    const double xu = t.at(i, j, u);
                    const double xq = t.at(i, j, q);
                    if (xu != 0.0 && xq != 0.0) acc += xu + xq;
                }
            }
            a.at(u, q) = acc;
        }
    }
    return a;
}

Tensor random_sparse(std::size_t s, std::size_t w, std::size_t v, RngStream& rng) {
    Tensor t(Shape{s, w, v});
    for (auto& e : t.v) {
        e = rng.next_uniform() < 0.3 ? 0.0 : rng.next_uniform(0.1, 5.0);
    }
    return t;
}

} // namespace

TEST_CASE("all-zero tensor has no co-occurrences") {
    CoOccurrenceGraph g = build_cooccurrence(Tensor(Shape{2, 3, 2}));
    for (double x : g.adjacency.v) CHECK(x == 0.0);
    CHECK(g.source_timestamps == 3);
}

TEST_CASE("hand-checked single sample") {
    // rows (t×v): [[1,2],[0,3],[4,0]]
    Tensor t(Shape{1, 3, 2}, {1, 2, 0, 3, 4, 0});
    CoOccurrenceGraph g = build_cooccurrence(t);
    CHECK(g.adjacency.at(0, 0) == 10.0); // 2·(1+4)
    CHECK(g.adjacency.at(1, 1) == 10.0); // 2·(2+3)
    CHECK(g.adjacency.at(0, 1) == 3.0);  // co-occur only at t=0: 1+2
    CHECK(g.adjacency.at(1, 0) == 3.0);

    CHECK(edge_weight(t, 0, 1) == 3.0);
    CHECK(edge_weight(t, 0, 0) == 10.0);

    // a never-co-occurring pair has no edge
    Tensor apart(Shape{1, 2, 2}, {1, 0, 0, 2});
    CHECK(edge_weight(apart, 0, 1) == 0.0);

    CHECK_THROWS_AS(edge_weight(t, 0, 2), UsageError);
    CHECK_THROWS_AS(build_cooccurrence(Tensor(Shape{0, 3, 2})), DataError);
}

TEST_CASE("matches the brute-force oracle exactly on 1000 random tensors") {
    RngStream rng(2024);
    for (int rep = 0; rep < 1000; ++rep) {
        const std::size_t s = 1 + rng.bits_at(rng.reserve(1)) % 3;
        const std::size_t w = 1 + rng.bits_at(rng.reserve(1)) % 5;
        const std::size_t v = 1 + rng.bits_at(rng.reserve(1)) % 4;
        const Tensor t = random_sparse(s, w, v, rng);
        const CoOccurrenceGraph g = build_cooccurrence(t);
        const Tensor oracle = cooccurrence_oracle(t);
        CHECK(g.adjacency.same_values(oracle)); // bitwise equality
    }
}

TEST_CASE("adjacency equals its transpose exactly") {
    RngStream rng(5);
    for (int rep = 0; rep < 100; ++rep) {
        const Tensor t = random_sparse(2, 4, 3, rng);
        const CoOccurrenceGraph g = build_cooccurrence(t);
        for (std::size_t i = 0; i < 3; ++i) {
            for (std::size_t j = 0; j < 3; ++j) {
                CHECK(g.adjacency.at(i, j) == g.adjacency.at(j, i));
            }
        }
    }
}

TEST_CASE("permuting samples leaves the graph unchanged") {
    RngStream rng(6);
    Tensor t = random_sparse(3, 4, 3, rng);
    Tensor swapped = t;
    // swap samples 0 and 2
    for (std::size_t j = 0; j < 4; ++j) {
        for (std::size_t k = 0; k < 3; ++k) {
            std::swap(swapped.at(0, j, k), swapped.at(2, j, k));
        }
    }
    const Tensor a = build_cooccurrence(t).adjacency;
    const Tensor b = build_cooccurrence(swapped).adjacency;
    // same multiset of events in a different order: equal up to rounding
    CHECK(a.max_abs_diff(b) < 1e-12);
}

TEST_CASE("permuting variables permutes rows and columns identically") {
    RngStream rng(7);
    Tensor t = random_sparse(2, 5, 3, rng);
    const std::size_t perm[3] = {2, 0, 1};
    Tensor permuted(t.shape);
    for (std::size_t i = 0; i < 2; ++i) {
        for (std::size_t j = 0; j < 5; ++j) {
            for (std::size_t k = 0; k < 3; ++k) {
                permuted.at(i, j, k) = t.at(i, j, perm[k]);
            }
        }
    }
    const Tensor a = build_cooccurrence(t).adjacency;
    const Tensor b = build_cooccurrence(permuted).adjacency;
    for (std::size_t u = 0; u < 3; ++u) {
        for (std::size_t q = 0; q < 3; ++q) {
            CHECK(b.at(u, q) == a.at(perm[u], perm[q]));
        }
    }
}

TEST_CASE("edge weights scale linearly with the data") {
    RngStream rng(8);
    Tensor t = random_sparse(2, 4, 3, rng);
    Tensor scaled = t;
    for (auto& e : scaled.v) e *= 2.5;
    const Tensor a = build_cooccurrence(t).adjacency;
    const Tensor b = build_cooccurrence(scaled).adjacency;
    for (std::size_t i = 0; i < a.numel(); ++i) {
        CHECK(b.v[i] == doctest::Approx(2.5 * a.v[i]).epsilon(1e-12));
    }
}

TEST_CASE("adjacency csv export") {
    testutil::TempDir dir("regenn_graph_test");
    Tensor t(Shape{1, 3, 2}, {1, 2, 0, 3, 4, 0});
    CoOccurrenceGraph g = build_cooccurrence(t, {"cases", "deaths"});
    const std::string path = dir.file("graph.csv");
    write_adjacency_csv(path, g);
    const std::string text = testutil::read_file(path);
    CHECK(text.find("variable,cases,deaths") == 0);
    CHECK(text.find("cases,10,3") != std::string::npos);
    CHECK(text.find("deaths,3,10") != std::string::npos);
}
