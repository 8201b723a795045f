#pragma once

// Dense double-precision inner loops used by the autograd layer.
//
// Every kernel exists as a portable scalar reference and as SIMD variants
// (AVX2+FMA on x86-64, NEON on aarch64). The variant is picked once per
// process from the CPU feature bits; STRUDEL_ISA=scalar|avx2|neon in the
// environment overrides the choice. Results across variants agree to
// rounding (FMA contraction differs), not bitwise.

#include <cstddef>
#include <string_view>

namespace strudel::kernels {

enum class Isa { Scalar, Avx2, Neon };

std::string_view isa_name(Isa isa);

struct KernelTable {
    Isa isa;
    // sum_i x[i] * y[i]
    double (*dot)(const double* x, const double* y, std::size_t n);
    // y[i] += a * x[i]
    void (*axpy)(double a, const double* x, double* y, std::size_t n);
    // C[m x n] += A[m x k] * B[k x n], all row-major and contiguous.
    void (*gemm_nn)(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                    std::size_t n);
    // C[m x n] += A[k x m]^T * B[k x n]
    void (*gemm_tn)(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                    std::size_t n);
    // C[m x n] += A[m x k] * B[n x k]^T
    void (*gemm_nt)(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                    std::size_t n);
};

const KernelTable& scalar_table();
// nullptr when the variant was not compiled in or the CPU lacks the feature.
const KernelTable* avx2_table();
const KernelTable* neon_table();

// Table selected for this process: the best supported ISA, or STRUDEL_ISA
// (scalar, avx2, neon) when set. force_isa() replaces it.
const KernelTable& active();

// Override for tests and benchmarks; returns false if the ISA is unavailable.
bool force_isa(Isa isa);

}  // namespace strudel::kernels
