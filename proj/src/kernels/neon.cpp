#include "strudel/kernels.hpp"

#if defined(__aarch64__) && defined(__ARM_NEON)
#include <arm_neon.h>

namespace strudel::kernels {
namespace {

inline double dot_neon_inline(const double* x, const double* y, std::size_t n) {
    float64x2_t acc0 = vdupq_n_f64(0.0);
    float64x2_t acc1 = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        acc0 = vfmaq_f64(acc0, vld1q_f64(x + i), vld1q_f64(y + i));
        acc1 = vfmaq_f64(acc1, vld1q_f64(x + i + 2), vld1q_f64(y + i + 2));
    }
    double acc = vaddvq_f64(vaddq_f64(acc0, acc1));
    for (; i < n; ++i) acc += x[i] * y[i];
    return acc;
}

inline void axpy_neon_inline(double a, const double* x, double* y, std::size_t n) {
    const float64x2_t va = vdupq_n_f64(a);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), va, vld1q_f64(x + i)));
    for (; i < n; ++i) y[i] += a * x[i];
}

double dot_neon(const double* x, const double* y, std::size_t n) { return dot_neon_inline(x, y, n); }

void axpy_neon(double a, const double* x, double* y, std::size_t n) { axpy_neon_inline(a, x, y, n); }

void gemm_nn_neon(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                  std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) axpy_neon_inline(a[i * k + p], b + p * n, c + i * n, n);
    }
}

void gemm_tn_neon(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                  std::size_t n) {
    for (std::size_t p = 0; p < k; ++p) {
        for (std::size_t i = 0; i < m; ++i) axpy_neon_inline(a[p * m + i], b + p * n, c + i * n, n);
    }
}

void gemm_nt_neon(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                  std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) c[i * n + j] += dot_neon_inline(a + i * k, b + j * k, k);
    }
}

}  // namespace

// NEON is mandatory on aarch64, no runtime probe needed.
const KernelTable* neon_table() {
    static const KernelTable table{Isa::Neon, dot_neon, axpy_neon, gemm_nn_neon, gemm_tn_neon,
                                   gemm_nt_neon};
    return &table;
}

}  // namespace strudel::kernels

#else

namespace strudel::kernels {
const KernelTable* neon_table() { return nullptr; }
}  // namespace strudel::kernels

#endif
