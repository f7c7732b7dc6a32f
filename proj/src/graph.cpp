#include "simtsc/graph.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace simtsc {

std::vector<double> adjacency_from_distances(const std::vector<double>& distances, size_t n,
                                             double alpha) {
    if (!(alpha >= 0.0) || !std::isfinite(alpha))
        throw std::invalid_argument("adjacency_from_distances: alpha must be finite and >= 0");
    if (distances.size() != n * n)
        throw std::invalid_argument("adjacency_from_distances: bad matrix size");
    std::vector<double> a(n * n);
    for (size_t i = 0; i < n * n; ++i) a[i] = std::exp(-alpha * distances[i]);
    return a;
}

SparseGraph topk_sparsify(const std::vector<double>& adjacency, size_t n, size_t k) {
    if (k < 1) throw std::invalid_argument("topk_sparsify: K must be >= 1");
    if (adjacency.size() != n * n) throw std::invalid_argument("topk_sparsify: bad matrix size");
    SparseGraph g;
    g.n = n;
    g.rows.resize(n);
    std::vector<int> order(n);
    for (size_t i = 0; i < n; ++i) {
        const double* row = adjacency.data() + i * n;
        for (size_t j = 0; j < n; ++j) order[j] = static_cast<int>(j);
        std::sort(order.begin(), order.end(), [row](int x, int y) {
            if (row[x] != row[y]) return row[x] > row[y];
            return x < y;
        });
        const size_t keep = std::min(k, n);
        auto& entries = g.rows[i];
        entries.reserve(keep);
        for (size_t r = 0; r < keep; ++r) {
            const int col = order[r];
            if (row[col] > 0.0) entries.push_back({col, row[col]});
        }
        std::sort(entries.begin(), entries.end(),
                  [](const SparseGraph::Entry& x, const SparseGraph::Entry& y) {
                      return x.col < y.col;
                  });
    }
    return g;
}

SparseGraph row_normalize(SparseGraph graph) {
    for (auto& row : graph.rows) {
        double total = 0.0;
        for (const auto& e : row) total += e.weight;
        if (!(total > 0.0)) throw std::invalid_argument("row_normalize: row with no weight");
        for (auto& e : row) e.weight /= total;
    }
    return graph;
}

SparseGraph build_batch_graph(const std::vector<double>& distances, size_t n, double alpha,
                              size_t k) {
    return row_normalize(topk_sparsify(adjacency_from_distances(distances, n, alpha), n, k));
}

}  // namespace simtsc
