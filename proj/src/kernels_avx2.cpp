// AVX2 variants of the vector kernels. Compiled with -mavx2 (no FMA: the
// contract is bit-identical results against the scalar reference, and the
// reference uses separate multiply and add). Only reachable through the
// dispatch table after a CPUID check.

#include "simtsc/kernels.hpp"

#ifdef SIMTSC_WITH_AVX2

#include <immintrin.h>

#include <algorithm>
#include <limits>

namespace simtsc::kernels::avx2 {

namespace {

// (lane0+lane2)+(lane1+lane3), the same combine used by the scalar reference.
inline double hsum(__m256d acc) {
    const __m128d lo = _mm256_castpd256_pd128(acc);
    const __m128d hi = _mm256_extractf128_pd(acc, 1);
    const __m128d s = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(s) + _mm_cvtsd_f64(_mm_unpackhi_pd(s, s));
}

}  // namespace

double dot(const double* a, const double* b, size_t n) {
    __m256d acc = _mm256_setzero_pd();
    size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d av = _mm256_loadu_pd(a + i);
        const __m256d bv = _mm256_loadu_pd(b + i);
        acc = _mm256_add_pd(acc, _mm256_mul_pd(av, bv));
    }
    double r = hsum(acc);
    for (; i < n; ++i) r += a[i] * b[i];
    return r;
}

double sum(const double* a, size_t n) {
    __m256d acc = _mm256_setzero_pd();
    size_t i = 0;
    for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(a + i));
    double r = hsum(acc);
    for (; i < n; ++i) r += a[i];
    return r;
}

double sum_sq_diff(const double* a, double mu, size_t n) {
    const __m256d muv = _mm256_set1_pd(mu);
    __m256d acc = _mm256_setzero_pd();
    size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), muv);
        acc = _mm256_add_pd(acc, _mm256_mul_pd(d, d));
    }
    double r = hsum(acc);
    for (; i < n; ++i) {
        const double d = a[i] - mu;
        r += d * d;
    }
    return r;
}

void axpy(double* y, const double* x, double a, size_t n) {
    const __m256d av = _mm256_set1_pd(a);
    size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d xv = _mm256_loadu_pd(x + i);
        const __m256d yv = _mm256_loadu_pd(y + i);
        _mm256_storeu_pd(y + i, _mm256_add_pd(yv, _mm256_mul_pd(av, xv)));
    }
    for (; i < n; ++i) y[i] += a * x[i];
}

void conv_taps(double* y, const double* x, const double* w, size_t k, size_t n) {
    __m256d wv[kMaxTaps];
    for (size_t s = 0; s < k; ++s) wv[s] = _mm256_set1_pd(w[s]);
    size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d acc = _mm256_loadu_pd(y + i);
        for (size_t s = 0; s < k; ++s)
            acc = _mm256_add_pd(acc, _mm256_mul_pd(wv[s], _mm256_loadu_pd(x + i + s)));
        _mm256_storeu_pd(y + i, acc);
    }
    for (; i < n; ++i) {
        double acc = y[i];
        for (size_t s = 0; s < k; ++s) acc += w[s] * x[i + s];
        y[i] = acc;
    }
}

void dot_taps(const double* a, const double* x, size_t k, size_t n, double* out) {
    __m256d acc[kMaxTaps];
    for (size_t s = 0; s < k; ++s) acc[s] = _mm256_setzero_pd();
    size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d av = _mm256_loadu_pd(a + i);
        for (size_t s = 0; s < k; ++s)
            acc[s] = _mm256_add_pd(acc[s], _mm256_mul_pd(av, _mm256_loadu_pd(x + i + s)));
    }
    for (size_t s = 0; s < k; ++s) {
        double r = hsum(acc[s]);
        for (size_t j = i; j < n; ++j) r += a[j] * x[j + s];
        out[s] += r;
    }
}

// Anti-diagonal banded DTW: cells on one anti-diagonal have no mutual
// dependencies, so the recurrence vectorizes across the diagonal. Three
// rotating buffers hold diagonals d-2, d-1 and d, indexed by the row i with
// a +1 offset so that i-1 reads hit an +inf sentinel at position 0.
double dtw_banded_sq(const double* a, size_t n, const double* b, size_t m, size_t w,
                     double* work) {
    const double inf = std::numeric_limits<double>::infinity();
    const int64_t N = static_cast<int64_t>(n);
    const int64_t M = static_cast<int64_t>(m);
    const int64_t W = static_cast<int64_t>(w);
    if ((N > M ? N - M : M - N) > W) return inf;

    const int64_t len = N + 2;
    double* d2 = work;
    double* d1 = work + len;
    double* d0 = work + 2 * len;
    std::fill(work, work + 3 * len, inf);

    for (int64_t d = 0; d <= N + M - 2; ++d) {
        const int64_t ilo =
            std::max({int64_t{0}, d - (M - 1), d > W ? (d - W + 1) / 2 : int64_t{0}});
        const int64_t ihi = std::min({N - 1, d, (d + W) / 2});

        if (d == 0) {
            const double diff = a[0] - b[0];
            d0[1] = diff * diff;
        } else {
            int64_t i = ilo;
            const int64_t vmax = ihi - 3;  // ihi <= d, so b loads stay in range
            for (; i <= vmax; i += 4) {
                const __m256d av = _mm256_loadu_pd(a + i);
                const __m256d braw = _mm256_loadu_pd(b + (d - i - 3));
                const __m256d bv = _mm256_permute4x64_pd(braw, 0x1B);
                const __m256d diff = _mm256_sub_pd(av, bv);
                const __m256d cost = _mm256_mul_pd(diff, diff);
                const __m256d up = _mm256_loadu_pd(d1 + i);
                const __m256d left = _mm256_loadu_pd(d1 + i + 1);
                const __m256d diag = _mm256_loadu_pd(d2 + i);
                const __m256d best = _mm256_min_pd(_mm256_min_pd(up, left), diag);
                _mm256_storeu_pd(d0 + i + 1, _mm256_add_pd(cost, best));
            }
            for (; i <= ihi; ++i) {
                const double diff = a[i] - b[d - i];
                const double cost = diff * diff;
                const double up = d1[i];
                const double left = d1[i + 1];
                const double diag = d2[i];
                d0[i + 1] = cost + std::min(std::min(up, left), diag);
            }
        }

        d0[ilo] = inf;
        d0[ihi + 2] = inf;
        double* tmp = d2;
        d2 = d1;
        d1 = d0;
        d0 = tmp;
    }
    return d1[N];
}

}  // namespace simtsc::kernels::avx2

#endif  // SIMTSC_WITH_AVX2
