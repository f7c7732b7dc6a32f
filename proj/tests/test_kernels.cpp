#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <limits>

#include "simtsc/kernels.hpp"
#include "simtsc/rng.hpp"
#include "testutil.hpp"

using namespace simtsc;

namespace {

double scalar_dtw(const std::vector<double>& a, const std::vector<double>& b, size_t w) {
    std::vector<double> work(kernels::dtw_workspace_size(a.size(), b.size()));
    return kernels::scalar::dtw_banded_sq(a.data(), a.size(), b.data(), b.size(), w,
                                          work.data());
}

}  // namespace

TEST_CASE("scalar reductions match plain accumulation closely") {
    Rng rng(1);
    for (int trial = 0; trial < 50; ++trial) {
        const size_t n = 1 + rng.next_below(300);
        const auto a = testutil::random_vector(rng, n);
        const auto b = testutil::random_vector(rng, n);
        double plain_dot = 0.0, plain_sum = 0.0;
        for (size_t i = 0; i < n; ++i) {
            plain_dot += a[i] * b[i];
            plain_sum += a[i];
        }
        CHECK(kernels::scalar::dot(a.data(), b.data(), n) == doctest::Approx(plain_dot));
        CHECK(kernels::scalar::sum(a.data(), n) == doctest::Approx(plain_sum));
    }
}

TEST_CASE("scalar axpy") {
    Rng rng(2);
    const auto x = testutil::random_vector(rng, 37);
    std::vector<double> y(37, 0.5);
    kernels::scalar::axpy(y.data(), x.data(), 2.0, x.size());
    for (size_t i = 0; i < y.size(); ++i) CHECK(y[i] == 0.5 + 2.0 * x[i]);
}

TEST_CASE("fused tap kernels agree with per-tap evaluation") {
    Rng rng(12);
    for (int trial = 0; trial < 30; ++trial) {
        const size_t n = 1 + rng.next_below(60);
        const size_t k = 1 + rng.next_below(kernels::kMaxTaps);
        const auto x = testutil::random_vector(rng, n + k - 1);
        const auto w = testutil::random_vector(rng, k);
        const auto a = testutil::random_vector(rng, n);

        std::vector<double> y(n, 0.1);
        kernels::scalar::conv_taps(y.data(), x.data(), w.data(), k, n);
        for (size_t i = 0; i < n; ++i) {
            double want = 0.1;
            for (size_t s = 0; s < k; ++s) want += w[s] * x[i + s];
            CHECK(y[i] == doctest::Approx(want).epsilon(1e-14));
        }

        std::vector<double> out(k, 0.0);
        kernels::scalar::dot_taps(a.data(), x.data(), k, n, out.data());
        for (size_t s = 0; s < k; ++s)
            CHECK(out[s] ==
                  doctest::Approx(kernels::scalar::dot(a.data(), x.data() + s, n)).epsilon(1e-14));
    }
}

TEST_CASE("banded dtw kernel basics") {
    CHECK(scalar_dtw({0.0}, {3.0}, 100) == 9.0);
    CHECK(scalar_dtw({1, 2, 3}, {1, 2, 3}, 100) == 0.0);
    CHECK(scalar_dtw({1, 2, 3}, {1, 2, 2, 3}, 100) == 0.0);
    // Band too narrow for the length gap: unreachable end cell.
    CHECK(std::isinf(scalar_dtw({1, 2}, {1, 2, 3, 4, 5, 6}, 1)));
}

#ifdef SIMTSC_WITH_AVX2

TEST_CASE("avx2 variants are bit-identical to the scalar reference") {
    if (!kernels::avx2_usable()) {
        MESSAGE("AVX2 not available on this CPU; skipping");
        return;
    }
    Rng rng(3);
    for (int trial = 0; trial < 200; ++trial) {
        const size_t n = 1 + rng.next_below(257);
        const auto a = testutil::random_vector(rng, n, -3.0, 3.0);
        const auto b = testutil::random_vector(rng, n, -3.0, 3.0);

        const double ds = kernels::scalar::dot(a.data(), b.data(), n);
        const double dv = kernels::avx2::dot(a.data(), b.data(), n);
        CHECK(std::memcmp(&ds, &dv, sizeof(double)) == 0);

        const double ss = kernels::scalar::sum(a.data(), n);
        const double sv = kernels::avx2::sum(a.data(), n);
        CHECK(std::memcmp(&ss, &sv, sizeof(double)) == 0);

        const double mu = a[0];
        const double qs = kernels::scalar::sum_sq_diff(a.data(), mu, n);
        const double qv = kernels::avx2::sum_sq_diff(a.data(), mu, n);
        CHECK(std::memcmp(&qs, &qv, sizeof(double)) == 0);

        std::vector<double> ys = b, yv = b;
        kernels::scalar::axpy(ys.data(), a.data(), 1.37, n);
        kernels::avx2::axpy(yv.data(), a.data(), 1.37, n);
        CHECK(std::memcmp(ys.data(), yv.data(), n * sizeof(double)) == 0);

        const size_t k = 1 + rng.next_below(kernels::kMaxTaps);
        const auto x = testutil::random_vector(rng, n + k - 1, -3.0, 3.0);
        const auto w = testutil::random_vector(rng, k, -2.0, 2.0);
        std::vector<double> cs = b, cv = b;
        kernels::scalar::conv_taps(cs.data(), x.data(), w.data(), k, n);
        kernels::avx2::conv_taps(cv.data(), x.data(), w.data(), k, n);
        CHECK(std::memcmp(cs.data(), cv.data(), n * sizeof(double)) == 0);

        std::vector<double> os(k, 0.25), ov(k, 0.25);
        kernels::scalar::dot_taps(a.data(), x.data(), k, n, os.data());
        kernels::avx2::dot_taps(a.data(), x.data(), k, n, ov.data());
        CHECK(std::memcmp(os.data(), ov.data(), k * sizeof(double)) == 0);
    }
}

TEST_CASE("avx2 dtw kernel is bit-identical to the scalar rolling-row kernel") {
    if (!kernels::avx2_usable()) {
        MESSAGE("AVX2 not available on this CPU; skipping");
        return;
    }
    Rng rng(4);
    for (int trial = 0; trial < 400; ++trial) {
        const size_t n = 1 + rng.next_below(40);
        const size_t m = 1 + rng.next_below(40);
        const size_t w = rng.next_below(45);
        const auto a = testutil::random_vector(rng, n, -2.0, 2.0);
        const auto b = testutil::random_vector(rng, m, -2.0, 2.0);
        std::vector<double> work(kernels::dtw_workspace_size(n, m));

        const double s =
            kernels::scalar::dtw_banded_sq(a.data(), n, b.data(), m, w, work.data());
        const double v = kernels::avx2::dtw_banded_sq(a.data(), n, b.data(), m, w, work.data());
        CHECK(std::memcmp(&s, &v, sizeof(double)) == 0);
    }
}

#endif  // SIMTSC_WITH_AVX2

TEST_CASE("dispatch table points at a real variant") {
    const auto& table = kernels::active();
    CHECK((std::strcmp(table.name, "scalar") == 0 || std::strcmp(table.name, "avx2") == 0));
    const double a[4] = {1, 2, 3, 4};
    CHECK(kernels::dot(a, a, 4) == doctest::Approx(30.0));
}
