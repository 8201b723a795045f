#include <doctest.h>

#include <cmath>
#include <vector>

#include "strudel/autograd.hpp"
#include "strudel/error.hpp"
#include "strudel/rng.hpp"
#include "support.hpp"

using namespace strudel;
using strudel::testing::check_gradients;

namespace {

Var random_param(Rng& rng, std::size_t r, std::size_t c) {
    Matrix m(r, c);
    for (double& v : m.data()) v = rng.uniform(-1.0, 1.0);
    return Var::parameter(std::move(m));
}

}  // namespace

TEST_SUITE("autograd") {
    TEST_CASE("matmul values") {
        const Var a = Var::constant(Matrix(2, 2, {1, 2, 3, 4}));
        const Var b = Var::constant(Matrix(2, 2, {5, 6, 7, 8}));
        CHECK(matmul(a, b).value() == Matrix(2, 2, {19, 22, 43, 50}));
        CHECK(matmul_bt(a, b).value() == Matrix(2, 2, {17, 23, 39, 53}));
        CHECK_THROWS_AS(matmul(a, Var::constant(Matrix(3, 1))), Error);
    }

    TEST_CASE("constants leave no tape") {
        const Var a = Var::constant(Matrix(1, 3, 1.0));
        const Var y = sum(tanh(a));
        CHECK_FALSE(y.requires_grad());
        CHECK(y.node()->parents.empty());
    }

    TEST_CASE("elementwise and reduction ops match finite differences") {
        Rng rng(5);
        Var a = random_param(rng, 3, 4), b = random_param(rng, 3, 4), r = random_param(rng, 1, 4);
        // Row softmaxes sum to one, so weight them before reducing.
        const Var w = Var::constant(random_param(rng, 1, 4).value());
        const auto loss = [&] {
            Var x = add_row(hadamard(tanh(a), sub(b, scale(a, 0.5))), r);
            Var y = leaky_relu(x, 0.2);
            return sum(hadamard(mean_rows(softmax_rows(add(y, layer_norm_rows(a)))), w));
        };
        const auto res = check_gradients(loss, {{"a", a}, {"b", b}, {"r", r}}, 12);
        INFO("worst at " << res.worst_at);
        CHECK(res.worst < 1e-6);
    }

    TEST_CASE("matrix products, gathers and concatenation") {
        Rng rng(6);
        Var t = random_param(rng, 6, 3), w = random_param(rng, 3, 2), u = random_param(rng, 4, 3);
        const std::vector<std::size_t> ids{0, 5, 2, 5};
        const auto loss = [&] {
            Var g = gather_rows(t, ids);                 // 4 x 3
            Var p = matmul(g, w);                        // 4 x 2
            Var q = matmul_bt(g, u);                     // 4 x 4
            const Var parts[] = {p, q};
            Var c = concat_cols(parts);                  // 4 x 6
            const Var rows[] = {slice_row(c, 1), slice_row(c, 3)};
            return sum(tanh(stack_rows(rows)));
        };
        const auto res = check_gradients(loss, {{"t", t}, {"w", w}, {"u", u}}, 18);
        CHECK(res.worst < 1e-6);
    }

    TEST_CASE("cosine and softmax_nll") {
        Rng rng(7);
        Var a = random_param(rng, 1, 5), b = random_param(rng, 1, 5), s = random_param(rng, 1, 4);
        CHECK(cosine(a, a).scalar() == doctest::Approx(1.0));
        CHECK(cosine(a, scale(a, -2.0)).scalar() == doctest::Approx(-1.0));
        CHECK_THROWS_AS(cosine(a, Var::constant(Matrix(1, 5))), Error);
        const auto res = check_gradients([&] { return add(cosine(a, b), softmax_nll(s, 2)); },
                                         {{"a", a}, {"b", b}, {"s", s}}, 5);
        CHECK(res.worst < 1e-6);
        // Uniform scores give ln n.
        CHECK(softmax_nll(Var::constant(Matrix(1, 4, 0.3)), 1).scalar() == doctest::Approx(std::log(4.0)));
    }

    TEST_CASE("layer_norm_rows normalizes each row") {
        const Var x = Var::constant(Matrix(2, 4, {1, 2, 3, 4, -5, 0, 5, 10}));
        const Var out = layer_norm_rows(x);
        const Matrix& y = out.value();
        for (std::size_t r = 0; r < 2; ++r) {
            double mu = 0.0, var = 0.0;
            for (double v : y.row(r)) mu += v;
            for (double v : y.row(r)) var += v * v;
            CHECK(mu == doctest::Approx(0.0).epsilon(1e-12));
            CHECK(var / 4.0 == doctest::Approx(1.0).epsilon(1e-4));
        }
    }

    TEST_CASE("shared subexpressions accumulate gradients") {
        Var a = Var::parameter(Matrix(1, 1, 3.0));
        const Var y = hadamard(a, a);  // a^2
        y.backward();
        CHECK(a.grad()[0] == doctest::Approx(6.0));
        a.zero_grad();
        CHECK(a.grad()[0] == 0.0);
    }
}
