#pragma once

// Banded DTW distances and full pairwise distance matrices.
//
// Cost model: squared pointwise differences with a final square root, the
// usual choice for UCR-style benchmarking. The band is a plain Sakoe-Chiba
// constraint |i-j| <= w on raw indices. The effective window is
// min(window, min(|a|,|b|)), widened to |len(a)-len(b)| when the two lengths
// differ by more than the window so the end cell stays reachable.

#include <cstddef>
#include <string>
#include <vector>

#include "simtsc/dataset.hpp"

namespace simtsc {

struct DistanceMatrix {
    size_t n = 0;
    std::vector<double> values;  // [n][n]

    DistanceMatrix() = default;
    explicit DistanceMatrix(size_t n_) : n(n_), values(n_ * n_, 0.0) {}
    double at(size_t i, size_t j) const { return values[i * n + j]; }
    double& at(size_t i, size_t j) { return values[i * n + j]; }
};

double dtw_distance(const double* a, size_t len_a, const double* b, size_t len_b, size_t window);

inline double dtw_distance(const std::vector<double>& a, const std::vector<double>& b,
                           size_t window) {
    return dtw_distance(a.data(), a.size(), b.data(), b.size(), window);
}

// Independent DTW per dimension, summed. Rows of a/b are strided by
// stride_a/stride_b (the padded length in a Dataset).
double dtw_multivariate(const double* a, size_t len_a, size_t stride_a, const double* b,
                        size_t len_b, size_t stride_b, size_t dims, size_t window);

// All-pairs DTW over true lengths; the upper triangle is computed once and
// mirrored. The result is identical for any worker count.
DistanceMatrix pairwise_matrix(const Dataset& dataset, size_t window, size_t jobs = 1);

// Matrix file ("STSM"): magic, u32 version, u64 n, row-major f64.
void save_matrix(const DistanceMatrix& m, const std::string& path);
DistanceMatrix load_matrix(const std::string& path);

}  // namespace simtsc
