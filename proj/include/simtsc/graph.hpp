#pragma once

// Batch graph construction from a distance submatrix: exponential weighting
// A_ij = exp(-alpha * D_ij), per-row top-K sparsification (ties broken by
// lower column index), then row-stochastic normalization.

#include <cstddef>
#include <vector>

namespace simtsc {

struct SparseGraph {
    struct Entry {
        int col;
        double weight;
    };
    size_t n = 0;
    std::vector<std::vector<Entry>> rows;  // per row, sorted by column index
};

// Dense adjacency from distances, row-major [n][n].
std::vector<double> adjacency_from_distances(const std::vector<double>& distances, size_t n,
                                             double alpha);

// Keeps the K largest weights per row (all of them when n < K); zero weights
// are dropped so stored entries are strictly positive.
SparseGraph topk_sparsify(const std::vector<double>& adjacency, size_t n, size_t k);

// Scales each row to sum to 1; the sparsity pattern is unchanged.
SparseGraph row_normalize(SparseGraph graph);

// adjacency -> top-K -> row-normalize in one call.
SparseGraph build_batch_graph(const std::vector<double>& distances, size_t n, double alpha,
                              size_t k);

}  // namespace simtsc
