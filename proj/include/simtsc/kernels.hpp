#pragma once

// Vector kernels behind the numeric hot loops: dot products and tap
// accumulation for the convolution layers, reductions for normalization,
// and the banded DTW dynamic program.
//
// Each kernel has a scalar reference implementation and, on x86-64, an AVX2
// variant. The variant used at runtime is picked once per process from CPUID
// (override with STSC_KERNELS=scalar|avx2). Every variant is required to
// produce bit-identical results to the scalar reference: reductions use a
// fixed 4-lane blocking in both paths and no variant may use FMA, so results
// do not depend on which path was dispatched.

#include <cstddef>
#include <cstdint>

namespace simtsc::kernels {

// Scalar reference kernels. The 4-accumulator blocking in dot/sum mirrors a
// 4-lane vector register plus the (lane0+lane2)+(lane1+lane3) horizontal
// combine, which is what makes the AVX2 variants bit-identical.
// Maximum tap count accepted by the fused convolution kernels.
inline constexpr size_t kMaxTaps = 16;

namespace scalar {
double dot(const double* a, const double* b, size_t n);
double sum(const double* a, size_t n);
double sum_sq_diff(const double* a, double mu, size_t n);
void axpy(double* y, const double* x, double a, size_t n);
// y[i] += sum_s w[s] * x[i+s] for i in [0, n); x must have n+k-1 entries.
void conv_taps(double* y, const double* x, const double* w, size_t k, size_t n);
// out[s] += sum_i a[i] * x[i+s]; the correlation side of conv_taps.
void dot_taps(const double* a, const double* x, size_t k, size_t n, double* out);
double dtw_banded_sq(const double* a, size_t n, const double* b, size_t m, size_t w,
                     double* work);
}  // namespace scalar

#ifdef SIMTSC_WITH_AVX2
namespace avx2 {
double dot(const double* a, const double* b, size_t n);
double sum(const double* a, size_t n);
double sum_sq_diff(const double* a, double mu, size_t n);
void axpy(double* y, const double* x, double a, size_t n);
void conv_taps(double* y, const double* x, const double* w, size_t k, size_t n);
void dot_taps(const double* a, const double* x, size_t k, size_t n, double* out);
double dtw_banded_sq(const double* a, size_t n, const double* b, size_t m, size_t w,
                     double* work);
}  // namespace avx2
#endif

struct KernelTable {
    const char* name;
    double (*dot)(const double*, const double*, size_t);
    double (*sum)(const double*, size_t);
    double (*sum_sq_diff)(const double*, double, size_t);
    void (*axpy)(double*, const double*, double, size_t);
    void (*conv_taps)(double*, const double*, const double*, size_t, size_t);
    void (*dot_taps)(const double*, const double*, size_t, size_t, double*);
    double (*dtw_banded_sq)(const double*, size_t, const double*, size_t, size_t, double*);
};

// Table for the variant selected at process start.
const KernelTable& active();

// True when the AVX2 variant was compiled in and the CPU reports support.
bool avx2_usable();

// Scratch doubles needed by dtw_banded_sq for an n-by-m problem, independent
// of the dispatched variant.
inline size_t dtw_workspace_size(size_t n, size_t m) {
    const size_t rows = 2 * (m + 2);
    const size_t diags = 3 * (n + 2);
    return rows > diags ? rows : diags;
}

// Dispatched entry points.
inline double dot(const double* a, const double* b, size_t n) { return active().dot(a, b, n); }
inline double sum(const double* a, size_t n) { return active().sum(a, n); }
inline double sum_sq_diff(const double* a, double mu, size_t n) {
    return active().sum_sq_diff(a, mu, n);
}
inline void axpy(double* y, const double* x, double a, size_t n) { active().axpy(y, x, a, n); }
inline void conv_taps(double* y, const double* x, const double* w, size_t k, size_t n) {
    active().conv_taps(y, x, w, k, n);
}
inline void dot_taps(const double* a, const double* x, size_t k, size_t n, double* out) {
    active().dot_taps(a, x, k, n, out);
}
inline double dtw_banded_sq(const double* a, size_t n, const double* b, size_t m, size_t w,
                            double* work) {
    return active().dtw_banded_sq(a, n, b, m, w, work);
}

}  // namespace simtsc::kernels
