#include <doctest.h>

#include <cmath>
#include <vector>

#include "strudel/kernels.hpp"
#include "strudel/rng.hpp"

using namespace strudel;
using namespace strudel::kernels;

namespace {

std::vector<double> random_vec(Rng& rng, std::size_t n) {
    std::vector<double> v(n);
    for (double& x : v) x = rng.uniform(-1.0, 1.0);
    return v;
}

void require_close(const std::vector<double>& a, const std::vector<double>& b) {
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-12));
}

std::vector<const KernelTable*> simd_tables() {
    std::vector<const KernelTable*> out;
    if (const KernelTable* t = avx2_table()) out.push_back(t);
    if (const KernelTable* t = neon_table()) out.push_back(t);
    return out;
}

}  // namespace

TEST_SUITE("kernels") {
    TEST_CASE("simd variants match the scalar reference") {
        const KernelTable& ref = scalar_table();
        const auto tables = simd_tables();
        if (tables.empty()) MESSAGE("no SIMD variant on this machine; scalar only");
        Rng rng(11);
        for (const KernelTable* t : tables) {
            CAPTURE(isa_name(t->isa));
            for (std::size_t n = 0; n < 38; ++n) {
                const auto x = random_vec(rng, n), y = random_vec(rng, n);
                CHECK(t->dot(x.data(), y.data(), n) == doctest::Approx(ref.dot(x.data(), y.data(), n)).epsilon(1e-12));
                auto y1 = y, y2 = y;
                ref.axpy(0.7, x.data(), y1.data(), n);
                t->axpy(0.7, x.data(), y2.data(), n);
                require_close(y1, y2);
            }
            for (std::size_t m : {1u, 3u, 8u}) {
                for (std::size_t k : {1u, 5u, 16u}) {
                    for (std::size_t n : {1u, 4u, 7u, 13u}) {
                        const auto a = random_vec(rng, m * k), b = random_vec(rng, k * n);
                        const auto at = random_vec(rng, k * m), bt = random_vec(rng, n * k);
                        const auto c0 = random_vec(rng, m * n);
                        auto c1 = c0, c2 = c0;
                        ref.gemm_nn(a.data(), b.data(), c1.data(), m, k, n);
                        t->gemm_nn(a.data(), b.data(), c2.data(), m, k, n);
                        require_close(c1, c2);
                        c1 = c0, c2 = c0;
                        ref.gemm_tn(at.data(), b.data(), c1.data(), m, k, n);
                        t->gemm_tn(at.data(), b.data(), c2.data(), m, k, n);
                        require_close(c1, c2);
                        c1 = c0, c2 = c0;
                        ref.gemm_nt(a.data(), bt.data(), c1.data(), m, k, n);
                        t->gemm_nt(a.data(), bt.data(), c2.data(), m, k, n);
                        require_close(c1, c2);
                    }
                }
            }
        }
    }

    TEST_CASE("scalar gemm against a naive triple loop") {
        Rng rng(3);
        const std::size_t m = 3, k = 4, n = 5;
        const auto a = random_vec(rng, m * k), b = random_vec(rng, k * n);
        std::vector<double> c(m * n, 0.0), expect(m * n, 0.0);
        scalar_table().gemm_nn(a.data(), b.data(), c.data(), m, k, n);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j)
                for (std::size_t p = 0; p < k; ++p) expect[i * n + j] += a[i * k + p] * b[p * n + j];
        require_close(c, expect);
    }

    TEST_CASE("force_isa switches the active table") {
        const Isa before = active().isa;
        REQUIRE(force_isa(Isa::Scalar));
        CHECK(active().isa == Isa::Scalar);
        CHECK(force_isa(before));
        CHECK(active().isa == before);
    }
}
