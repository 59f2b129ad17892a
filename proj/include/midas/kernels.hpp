#pragma once

#include <cstddef>
#include <cstdint>

#ifdef _OPENMP
#include <omp.h>
#endif

#if defined(__GNUC__) || defined(__clang__)
#define MIDAS_RESTRICT __restrict__
#else
#define MIDAS_RESTRICT
#endif

// Dense kernels used by the recurrent network. All loops run in a fixed
// summation order (k ascending for every output element), so results are
// identical for any thread count and bitwise-equal to the plain reference
// implementations in ref_kernels.hpp.
namespace midas::kern {

// Thread count frozen at first use; OMP_NUM_THREADS is set before launch and
// the per-call libgomp query would cost as much as a small row product.
inline int pool_threads() {
#ifdef _OPENMP
    static const int n = omp_get_max_threads();
    return n;
#else
    return 1;
#endif
}

template <typename Real>
inline void gemm_acc_row(const Real* MIDAS_RESTRICT a, const Real* MIDAS_RESTRICT b,
                         Real* MIDAS_RESTRICT c, int64_t i, int64_t k, int64_t n) {
    const Real* ar = a + i * k;
    Real* cr = c + i * n;
    for (int64_t p = 0; p < k; ++p) {
        const Real av = ar[p];
        const Real* br = b + p * n;
        for (int64_t j = 0; j < n; ++j) cr[j] += av * br[j];
    }
}

// C[m x n] += A[m x k] * B[k x n], all row-major.
// Broadcast-FMA form: the inner loop streams one row of C, which keeps it
// contiguous and lets the compiler vectorize. The OpenMP pragma sits directly
// on the raw loop rather than going through parallel_for: a closure whose
// address escapes into the outlined region defeats alias analysis, and the
// single-thread case skips the region entirely (entry costs a microsecond,
// more than a whole per-timestep product).
template <typename Real>
inline void gemm_acc(const Real* MIDAS_RESTRICT a, const Real* MIDAS_RESTRICT b,
                     Real* MIDAS_RESTRICT c, int64_t m, int64_t k, int64_t n) {
#ifdef _OPENMP
    if (pool_threads() > 1 && m > 1) {
#pragma omp parallel for schedule(static)
        for (int64_t i = 0; i < m; ++i) gemm_acc_row(a, b, c, i, k, n);
        return;
    }
#endif
    for (int64_t i = 0; i < m; ++i) gemm_acc_row(a, b, c, i, k, n);
}

// C[m x n] += A[k x m]^T * B[k x n], all row-major.
// k stays in the outer loop so C remains resident while A and B stream once;
// the fixed k order keeps the reduction deterministic.
template <typename Real>
inline void gemm_atb(const Real* MIDAS_RESTRICT a, const Real* MIDAS_RESTRICT b,
                     Real* MIDAS_RESTRICT c, int64_t m, int64_t k, int64_t n) {
    for (int64_t p = 0; p < k; ++p) {
        const Real* ar = a + p * m;
        const Real* br = b + p * n;
        for (int64_t i = 0; i < m; ++i) {
            const Real av = ar[i];
            Real* cr = c + i * n;
            for (int64_t j = 0; j < n; ++j) cr[j] += av * br[j];
        }
    }
}

// BT[c x r] = B[r x c]^T. Sized transposes are cheap and let every product
// above run in the broadcast-FMA form.
template <typename Real>
inline void transpose(const Real* MIDAS_RESTRICT b, Real* MIDAS_RESTRICT bt,
                      int64_t r, int64_t c) {
    for (int64_t i = 0; i < r; ++i)
        for (int64_t j = 0; j < c; ++j) bt[j * r + i] = b[i * c + j];
}

}  // namespace midas::kern
