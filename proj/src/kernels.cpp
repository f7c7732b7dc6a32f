#include "simtsc/kernels.hpp"

#include <cstdlib>
#include <cstring>

namespace simtsc::kernels {

namespace {

constexpr KernelTable kScalarTable{
    "scalar",     scalar::dot,       scalar::sum,      scalar::sum_sq_diff,
    scalar::axpy, scalar::conv_taps, scalar::dot_taps, scalar::dtw_banded_sq,
};

#ifdef SIMTSC_WITH_AVX2
constexpr KernelTable kAvx2Table{
    "avx2",     avx2::dot,       avx2::sum,      avx2::sum_sq_diff,
    avx2::axpy, avx2::conv_taps, avx2::dot_taps, avx2::dtw_banded_sq,
};
#endif

const KernelTable& select() {
    const char* forced = std::getenv("STSC_KERNELS");
    if (forced && std::strcmp(forced, "scalar") == 0) return kScalarTable;
#ifdef SIMTSC_WITH_AVX2
    if (avx2_usable()) return kAvx2Table;
#endif
    return kScalarTable;
}

}  // namespace

bool avx2_usable() {
#ifdef SIMTSC_WITH_AVX2
    return __builtin_cpu_supports("avx2");
#else
    return false;
#endif
}

const KernelTable& active() {
    static const KernelTable& table = select();
    return table;
}

}  // namespace simtsc::kernels
