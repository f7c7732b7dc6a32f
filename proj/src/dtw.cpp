#include "simtsc/dtw.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <thread>

#include "simtsc/binio.hpp"
#include "simtsc/kernels.hpp"

namespace simtsc {

namespace {

constexpr uint32_t kMatrixVersion = 1;
constexpr char kMatrixMagic[4] = {'S', 'T', 'S', 'M'};

size_t effective_window(size_t len_a, size_t len_b, size_t window) {
    const size_t shortest = std::min(len_a, len_b);
    const size_t gap = len_a > len_b ? len_a - len_b : len_b - len_a;
    return std::max(std::min(window, shortest), gap);
}

double dtw_with_workspace(const double* a, size_t len_a, const double* b, size_t len_b,
                          size_t window, std::vector<double>& work) {
    const size_t w = effective_window(len_a, len_b, window);
    const size_t need = kernels::dtw_workspace_size(len_a, len_b);
    if (work.size() < need) work.resize(need);
    return std::sqrt(kernels::dtw_banded_sq(a, len_a, b, len_b, w, work.data()));
}

}  // namespace

double dtw_distance(const double* a, size_t len_a, const double* b, size_t len_b, size_t window) {
    if (len_a == 0 || len_b == 0) throw std::invalid_argument("dtw_distance: empty input");
    thread_local std::vector<double> work;
    return dtw_with_workspace(a, len_a, b, len_b, window, work);
}

double dtw_multivariate(const double* a, size_t len_a, size_t stride_a, const double* b,
                        size_t len_b, size_t stride_b, size_t dims, size_t window) {
    if (dims == 0) throw std::invalid_argument("dtw_multivariate: zero dimensions");
    double total = 0.0;
    for (size_t m = 0; m < dims; ++m)
        total += dtw_distance(a + m * stride_a, len_a, b + m * stride_b, len_b, window);
    return total;
}

DistanceMatrix pairwise_matrix(const Dataset& dataset, size_t window, size_t jobs) {
    if (!dataset.normalized)
        throw std::invalid_argument("pairwise_matrix: dataset must be normalized first");
    const size_t n = dataset.n;
    DistanceMatrix m(n);
    if (n < 2) return m;
    if (jobs < 1) jobs = 1;
    jobs = std::min(jobs, n);

    auto worker = [&](size_t worker_id) {
        std::vector<double> work;
        for (size_t i = worker_id; i < n; i += jobs) {
            for (size_t j = i + 1; j < n; ++j) {
                double d = 0.0;
                for (size_t dim = 0; dim < dataset.dims; ++dim) {
                    d += dtw_with_workspace(dataset.series_at(i, dim), dataset.lengths[i],
                                            dataset.series_at(j, dim), dataset.lengths[j], window,
                                            work);
                }
                m.at(i, j) = d;
                m.at(j, i) = d;
            }
        }
    };

    if (jobs == 1) {
        worker(0);
    } else {
        std::vector<std::thread> threads;
        threads.reserve(jobs);
        for (size_t t = 0; t < jobs; ++t) threads.emplace_back(worker, t);
        for (auto& t : threads) t.join();
    }
    return m;
}

void save_matrix(const DistanceMatrix& m, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write matrix file: " + path);
    write_magic(out, kMatrixMagic);
    write_le<uint32_t>(out, kMatrixVersion);
    write_le<uint64_t>(out, m.n);
    write_f64_array(out, m.values.data(), m.values.size());
    if (!out) throw std::runtime_error("write failed: " + path);
}

DistanceMatrix load_matrix(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open matrix file: " + path);
    expect_magic(in, kMatrixMagic, path);
    const uint32_t version = read_le<uint32_t>(in);
    if (version != kMatrixVersion)
        throw std::runtime_error(path + ": unsupported matrix version " + std::to_string(version));
    const uint64_t n = read_le<uint64_t>(in);
    DistanceMatrix m(static_cast<size_t>(n));
    read_f64_array(in, m.values.data(), m.values.size());
    return m;
}

}  // namespace simtsc
