#include "simtsc/kernels.hpp"

#include <algorithm>
#include <limits>

namespace simtsc::kernels::scalar {

double dot(const double* a, const double* b, size_t n) {
    double acc0 = 0.0, acc1 = 0.0, acc2 = 0.0, acc3 = 0.0;
    size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        acc0 += a[i] * b[i];
        acc1 += a[i + 1] * b[i + 1];
        acc2 += a[i + 2] * b[i + 2];
        acc3 += a[i + 3] * b[i + 3];
    }
    double acc = (acc0 + acc2) + (acc1 + acc3);
    for (; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

double sum(const double* a, size_t n) {
    double acc0 = 0.0, acc1 = 0.0, acc2 = 0.0, acc3 = 0.0;
    size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        acc0 += a[i];
        acc1 += a[i + 1];
        acc2 += a[i + 2];
        acc3 += a[i + 3];
    }
    double acc = (acc0 + acc2) + (acc1 + acc3);
    for (; i < n; ++i) acc += a[i];
    return acc;
}

double sum_sq_diff(const double* a, double mu, size_t n) {
    double acc0 = 0.0, acc1 = 0.0, acc2 = 0.0, acc3 = 0.0;
    size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const double d0 = a[i] - mu;
        const double d1 = a[i + 1] - mu;
        const double d2 = a[i + 2] - mu;
        const double d3 = a[i + 3] - mu;
        acc0 += d0 * d0;
        acc1 += d1 * d1;
        acc2 += d2 * d2;
        acc3 += d3 * d3;
    }
    double acc = (acc0 + acc2) + (acc1 + acc3);
    for (; i < n; ++i) {
        const double d = a[i] - mu;
        acc += d * d;
    }
    return acc;
}

void axpy(double* y, const double* x, double a, size_t n) {
    for (size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void conv_taps(double* y, const double* x, const double* w, size_t k, size_t n) {
    for (size_t i = 0; i < n; ++i) {
        double acc = y[i];
        for (size_t s = 0; s < k; ++s) acc += w[s] * x[i + s];
        y[i] = acc;
    }
}

// Per tap s this follows the same 4-lane blocking and combine as dot().
void dot_taps(const double* a, const double* x, size_t k, size_t n, double* out) {
    double acc[kMaxTaps][4] = {};
    size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        for (size_t s = 0; s < k; ++s) {
            acc[s][0] += a[i] * x[i + s];
            acc[s][1] += a[i + 1] * x[i + 1 + s];
            acc[s][2] += a[i + 2] * x[i + 2 + s];
            acc[s][3] += a[i + 3] * x[i + 3 + s];
        }
    }
    for (size_t s = 0; s < k; ++s) {
        double r = (acc[s][0] + acc[s][2]) + (acc[s][1] + acc[s][3]);
        for (size_t j = i; j < n; ++j) r += a[j] * x[j + s];
        out[s] += r;
    }
}

// Banded DTW on squared pointwise costs, two rolling rows. Cells outside the
// band |i-j| <= w read as +inf; the caller takes the square root. Returns
// +inf when no monotone path reaches (n-1, m-1) inside the band.
double dtw_banded_sq(const double* a, size_t n, const double* b, size_t m, size_t w,
                     double* work) {
    const double inf = std::numeric_limits<double>::infinity();
    const size_t big = n > m ? n - m : m - n;
    if (big > w) return inf;

    double* prev = work;
    double* cur = work + (m + 2);
    std::fill(prev, prev + m, inf);
    std::fill(cur, cur + m, inf);

    for (size_t i = 0; i < n; ++i) {
        const size_t jlo = i > w ? i - w : 0;
        const size_t jhi = std::min(m - 1, i + w);
        if (jlo > 0) cur[jlo - 1] = inf;
        for (size_t j = jlo; j <= jhi; ++j) {
            const double diff = a[i] - b[j];
            const double c = diff * diff;
            double best;
            if (i == 0) {
                best = j == 0 ? 0.0 : cur[j - 1];
            } else {
                const double up = prev[j];
                const double diag = j > 0 ? prev[j - 1] : inf;
                const double left = j > 0 ? cur[j - 1] : inf;
                best = std::min(std::min(up, left), diag);
            }
            cur[j] = c + best;
        }
        if (jhi + 1 < m) cur[jhi + 1] = inf;
        std::swap(prev, cur);
    }
    return prev[m - 1];
}

}  // namespace simtsc::kernels::scalar
