#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "simtsc/graph.hpp"
#include "simtsc/rng.hpp"
#include "testutil.hpp"

using namespace simtsc;

namespace {

// Random symmetric distance matrix with zero diagonal and positive
// off-diagonal entries.
std::vector<double> random_distances(Rng& rng, size_t n, double lo = 0.05, double hi = 4.0) {
    std::vector<double> d(n * n, 0.0);
    for (size_t i = 0; i < n; ++i)
        for (size_t j = i + 1; j < n; ++j) {
            const double v = rng.next_uniform(lo, hi);
            d[i * n + j] = v;
            d[j * n + i] = v;
        }
    return d;
}

bool row_contains(const SparseGraph& g, size_t row, int col) {
    for (const auto& e : g.rows[row])
        if (e.col == col) return true;
    return false;
}

double row_weight(const SparseGraph& g, size_t row, int col) {
    for (const auto& e : g.rows[row])
        if (e.col == col) return e.weight;
    return 0.0;
}

}  // namespace

TEST_CASE("adjacency weighting basics") {
    const std::vector<double> d = {0.0, 1.0, 1.0, 0.0};
    const auto a = adjacency_from_distances(d, 2, 0.3);
    CHECK(a[0] == 1.0);                                         // exp(0)
    CHECK(a[3] == 1.0);
    CHECK(a[1] == doctest::Approx(0.740818220681718).epsilon(1e-12));  // exp(-0.3)

    const auto flat = adjacency_from_distances(d, 2, 0.0);
    for (double v : flat) CHECK(v == 1.0);

    CHECK_THROWS_AS(adjacency_from_distances(d, 2, -0.1), std::invalid_argument);
    CHECK_THROWS_AS(adjacency_from_distances(d, 2, std::nan("")), std::invalid_argument);
}

TEST_CASE("top-k keeps the diagonal when off-diagonal distances are positive") {
    Rng rng(31);
    const size_t n = 8;
    const auto a = adjacency_from_distances(random_distances(rng, n), n, 0.7);
    const SparseGraph g = topk_sparsify(a, n, 1);
    for (size_t i = 0; i < n; ++i) {
        REQUIRE(g.rows[i].size() == 1);
        CHECK(g.rows[i][0].col == static_cast<int>(i));
        CHECK(g.rows[i][0].weight == 1.0);
    }
}

TEST_CASE("top-k with K >= n keeps every entry") {
    Rng rng(32);
    const size_t n = 5;
    const auto a = adjacency_from_distances(random_distances(rng, n), n, 0.3);
    const SparseGraph g = topk_sparsify(a, n, 9);
    for (size_t i = 0; i < n; ++i) CHECK(g.rows[i].size() == n);
}

TEST_CASE("top-k tie broken by lower column index") {
    // Row weights [1.0, 0.5, 0.5, 0.2]; K=2 keeps columns 0 and 1.
    const std::vector<double> a = {
        1.0, 0.5, 0.5, 0.2,
        0.5, 1.0, 0.3, 0.3,
        0.5, 0.3, 1.0, 0.3,
        0.2, 0.3, 0.3, 1.0,
    };
    const SparseGraph g = topk_sparsify(a, 4, 2);
    REQUIRE(g.rows[0].size() == 2);
    CHECK(g.rows[0][0].col == 0);
    CHECK(g.rows[0][1].col == 1);

    CHECK_THROWS_AS(topk_sparsify(a, 4, 0), std::invalid_argument);
}

TEST_CASE("row normalization examples") {
    SparseGraph g;
    g.n = 2;
    g.rows = {{{0, 1.0}}, {{0, 1.0}, {1, 0.7408}}};
    const SparseGraph norm = row_normalize(g);
    CHECK(norm.rows[0][0].weight == 1.0);
    CHECK(norm.rows[1][0].weight == doctest::Approx(1.0 / 1.7408).epsilon(1e-9));
    CHECK(norm.rows[1][1].weight == doctest::Approx(0.7408 / 1.7408).epsilon(1e-9));

    SparseGraph equal;
    equal.n = 1;
    equal.rows = {{{0, 1.0}, {1, 1.0}}};
    const SparseGraph half = row_normalize(equal);
    CHECK(half.rows[0][0].weight == 0.5);
    CHECK(half.rows[0][1].weight == 0.5);
}

TEST_CASE("randomized graphs are row-stochastic, self-inclusive and within K") {
    Rng rng(33);
    for (int trial = 0; trial < 500; ++trial) {
        const size_t n = 1 + rng.next_below(24);
        const double alpha = rng.next_uniform(0.0, 4.0);
        const size_t k = 1 + rng.next_below(n + 3);
        const SparseGraph g = build_batch_graph(random_distances(rng, n), n, alpha, k);
        for (size_t i = 0; i < n; ++i) {
            CHECK(g.rows[i].size() >= 1);
            CHECK(g.rows[i].size() <= k);
            CHECK(row_contains(g, i, static_cast<int>(i)));
            double total = 0.0;
            for (const auto& e : g.rows[i]) {
                CHECK(e.weight > 0.0);
                total += e.weight;
            }
            CHECK(std::abs(total - 1.0) < 1e-9);
        }
    }
}

TEST_CASE("large alpha concentrates all weight on the self loop") {
    Rng rng(34);
    const size_t n = 10;
    const auto d = random_distances(rng, n, 0.5, 3.0);
    // alpha * min off-diagonal distance > 40
    const SparseGraph g = build_batch_graph(d, n, 100.0, 3);
    for (size_t i = 0; i < n; ++i)
        CHECK(row_weight(g, i, static_cast<int>(i)) >= 1.0 - 1e-12);
}

TEST_CASE("alpha zero with K >= n gives identical uniform rows") {
    Rng rng(35);
    const size_t n = 7;
    const SparseGraph g = build_batch_graph(random_distances(rng, n), n, 0.0, n);
    for (size_t i = 0; i < n; ++i) {
        REQUIRE(g.rows[i].size() == n);
        for (const auto& e : g.rows[i])
            CHECK(e.weight == doctest::Approx(1.0 / static_cast<double>(n)).epsilon(1e-12));
    }
}
