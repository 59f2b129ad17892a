#pragma once

#include <cstdint>
#include <vector>

// Plain reference implementations of the dense kernels and of one recurrent
// step. They use the same summation order as the tuned versions in
// kernels.hpp, so parity tests can demand exact equality; what they drop is
// the restrict qualifiers, the thread parallelism, and any layout tricks.
namespace midas::ref {

template <typename Real>
void gemm_acc(const Real* a, const Real* b, Real* c, int64_t m, int64_t k,
              int64_t n) {
    for (int64_t i = 0; i < m; ++i)
        for (int64_t p = 0; p < k; ++p)
            for (int64_t j = 0; j < n; ++j)
                c[i * n + j] += a[i * k + p] * b[p * n + j];
}

template <typename Real>
void gemm_atb(const Real* a, const Real* b, Real* c, int64_t m, int64_t k,
              int64_t n) {
    for (int64_t p = 0; p < k; ++p)
        for (int64_t i = 0; i < m; ++i)
            for (int64_t j = 0; j < n; ++j)
                c[i * n + j] += a[p * m + i] * b[p * n + j];
}

// One LSTM cell step for a single sample, double precision, scalar loops.
// Gate layout in wx/wh/b is [input | forget | cell | output], each block of
// size hidden. Inputs x (len in_dim), h_prev/c_prev (len hidden); writes
// h/c (len hidden).
void lstm_cell(const std::vector<double>& x, const std::vector<double>& h_prev,
               const std::vector<double>& c_prev, const std::vector<double>& wx,
               const std::vector<double>& wh, const std::vector<double>& b,
               int in_dim, int hidden, std::vector<double>& h,
               std::vector<double>& c);

// Masked softmax over the full vector; masked-out entries get weight zero.
// At least one entry must be unmasked.
std::vector<double> masked_softmax(const std::vector<double>& scores,
                                   const std::vector<uint8_t>& mask);

}  // namespace midas::ref
