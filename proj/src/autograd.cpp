#include "strudel/autograd.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <unordered_set>

#include "strudel/error.hpp"
#include "strudel/kernels.hpp"

namespace strudel {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows * cols) {
        throw Error(ErrorCode::DimMismatch, "matrix data length " + std::to_string(data_.size()) +
                                                " != " + std::to_string(rows) + "x" +
                                                std::to_string(cols));
    }
}

Matrix Matrix::row_vector(std::span<const double> values) {
    return Matrix(1, values.size(), std::vector<double>(values.begin(), values.end()));
}

void Matrix::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

Var Var::constant(Matrix value) {
    auto node = std::make_shared<Node>();
    node->value = std::move(value);
    return Var(std::move(node));
}

Var Var::parameter(Matrix value) {
    auto node = std::make_shared<Node>();
    node->value = std::move(value);
    node->requires_grad = true;
    node->grad = Matrix(node->value.rows(), node->value.cols());
    return Var(std::move(node));
}

double Var::scalar() const {
    if (value().size() != 1) throw Error(ErrorCode::DimMismatch, "scalar() on a non 1x1 value");
    return value()[0];
}

void Var::zero_grad() {
    if (!node_->requires_grad) return;
    if (!node_->grad.same_shape(node_->value)) {
        node_->grad = Matrix(node_->value.rows(), node_->value.cols());
    } else {
        node_->grad.fill(0.0);
    }
}

namespace {

void ensure_grad(Node& n) {
    if (!n.grad.same_shape(n.value)) n.grad = Matrix(n.value.rows(), n.value.cols());
}

void require(bool ok, const char* what) {
    if (!ok) throw Error(ErrorCode::DimMismatch, what);
}

}  // namespace

void Var::backward() const {
    if (value().size() != 1) throw Error(ErrorCode::DimMismatch, "backward() needs a 1x1 root");
    if (!node_->requires_grad) return;

    // Post-order DFS gives a topological order with the root last.
    std::vector<Node*> order;
    std::unordered_set<Node*> seen;
    std::vector<std::pair<Node*, std::size_t>> stack{{node_.get(), 0}};
    seen.insert(node_.get());
    while (!stack.empty()) {
        auto& [n, next] = stack.back();
        if (next < n->parents.size()) {
            Node* p = n->parents[next++].get();
            if (p->requires_grad && seen.insert(p).second) stack.emplace_back(p, 0);
        } else {
            order.push_back(n);
            stack.pop_back();
        }
    }

    for (Node* n : order) {
        if (n->backward) {
            n->grad = Matrix(n->value.rows(), n->value.cols());
        } else {
            ensure_grad(*n);
        }
    }
    node_->grad[0] += 1.0;

    std::vector<Matrix*> parent_grads;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* n = *it;
        if (!n->backward) continue;
        parent_grads.clear();
        for (const auto& p : n->parents) parent_grads.push_back(p->requires_grad ? &p->grad : nullptr);
        n->backward(n->value, n->grad, parent_grads);
    }
    // Interior gradients are only needed during the sweep.
    for (Node* n : order) {
        if (n->backward) n->grad = Matrix();
    }
}

Var make_op(Matrix value, std::vector<Var> parents, BackwardFn fn) {
    auto node = std::make_shared<Node>();
    node->value = std::move(value);
    const bool any = std::any_of(parents.begin(), parents.end(),
                                 [](const Var& p) { return p.requires_grad(); });
    if (any) {
        node->requires_grad = true;
        node->backward = std::move(fn);
        node->parents.reserve(parents.size());
        for (auto& p : parents) node->parents.push_back(p.node());
    }
    return Var(std::move(node));
}

Var matmul(const Var& a, const Var& b) {
    const Matrix& A = a.value();
    const Matrix& B = b.value();
    require(A.cols() == B.rows(), "matmul inner dimension mismatch");
    const std::size_t m = A.rows(), k = A.cols(), n = B.cols();
    Matrix out(m, n);
    kernels::active().gemm_nn(A.data().data(), B.data().data(), out.data().data(), m, k, n);
    return make_op(std::move(out), {a, b},
                   [a, b, m, k, n](const Matrix&, const Matrix& g, std::span<Matrix* const> pg) {
                       const auto& K = kernels::active();
                       if (pg[0]) K.gemm_nt(g.data().data(), b.value().data().data(),
                                            pg[0]->data().data(), m, n, k);
                       if (pg[1]) K.gemm_tn(a.value().data().data(), g.data().data(),
                                            pg[1]->data().data(), k, m, n);
                   });
}

Var matmul_bt(const Var& a, const Var& b) {
    const Matrix& A = a.value();
    const Matrix& B = b.value();
    require(A.cols() == B.cols(), "matmul_bt inner dimension mismatch");
    const std::size_t m = A.rows(), k = A.cols(), n = B.rows();
    Matrix out(m, n);
    kernels::active().gemm_nt(A.data().data(), B.data().data(), out.data().data(), m, k, n);
    return make_op(std::move(out), {a, b},
                   [a, b, m, k, n](const Matrix&, const Matrix& g, std::span<Matrix* const> pg) {
                       const auto& K = kernels::active();
                       if (pg[0]) K.gemm_nn(g.data().data(), b.value().data().data(),
                                            pg[0]->data().data(), m, n, k);
                       if (pg[1]) K.gemm_tn(g.data().data(), a.value().data().data(),
                                            pg[1]->data().data(), n, m, k);
                   });
}

Var add(const Var& a, const Var& b) {
    require(a.value().same_shape(b.value()), "add shape mismatch");
    Matrix out = a.value();
    kernels::active().axpy(1.0, b.value().data().data(), out.data().data(), out.size());
    return make_op(std::move(out), {a, b},
                   [](const Matrix&, const Matrix& g, std::span<Matrix* const> pg) {
                       for (Matrix* p : pg) {
                           if (p) kernels::active().axpy(1.0, g.data().data(), p->data().data(), g.size());
                       }
                   });
}

Var sub(const Var& a, const Var& b) {
    require(a.value().same_shape(b.value()), "sub shape mismatch");
    Matrix out = a.value();
    kernels::active().axpy(-1.0, b.value().data().data(), out.data().data(), out.size());
    return make_op(std::move(out), {a, b},
                   [](const Matrix&, const Matrix& g, std::span<Matrix* const> pg) {
                       const auto& K = kernels::active();
                       if (pg[0]) K.axpy(1.0, g.data().data(), pg[0]->data().data(), g.size());
                       if (pg[1]) K.axpy(-1.0, g.data().data(), pg[1]->data().data(), g.size());
                   });
}

Var add_row(const Var& a, const Var& row) {
    const Matrix& A = a.value();
    const Matrix& R = row.value();
    require(R.rows() == 1 && R.cols() == A.cols(), "add_row shape mismatch");
    Matrix out = A;
    const auto& K = kernels::active();
    for (std::size_t r = 0; r < A.rows(); ++r) K.axpy(1.0, R.data().data(), out.row(r).data(), A.cols());
    return make_op(std::move(out), {a, row},
                   [](const Matrix&, const Matrix& g, std::span<Matrix* const> pg) {
                       const auto& K = kernels::active();
                       if (pg[0]) K.axpy(1.0, g.data().data(), pg[0]->data().data(), g.size());
                       if (pg[1]) {
                           for (std::size_t r = 0; r < g.rows(); ++r)
                               K.axpy(1.0, g.row(r).data(), pg[1]->data().data(), g.cols());
                       }
                   });
}

Var hadamard(const Var& a, const Var& b) {
    require(a.value().same_shape(b.value()), "hadamard shape mismatch");
    Matrix out = a.value();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b.value()[i];
    return make_op(std::move(out), {a, b},
                   [a, b](const Matrix&, const Matrix& g, std::span<Matrix* const> pg) {
                       for (std::size_t i = 0; i < g.size(); ++i) {
                           if (pg[0]) (*pg[0])[i] += g[i] * b.value()[i];
                           if (pg[1]) (*pg[1])[i] += g[i] * a.value()[i];
                       }
                   });
}

Var scale(const Var& a, double factor) {
    Matrix out = a.value();
    for (double& v : out.data()) v *= factor;
    return make_op(std::move(out), {a},
                   [factor](const Matrix&, const Matrix& g, std::span<Matrix* const> pg) {
                       kernels::active().axpy(factor, g.data().data(), pg[0]->data().data(), g.size());
                   });
}

Var tanh(const Var& a) {
    Matrix out = a.value();
    for (double& v : out.data()) v = std::tanh(v);
    return make_op(std::move(out), {a},
                   [](const Matrix& y, const Matrix& g, std::span<Matrix* const> pg) {
                       for (std::size_t i = 0; i < g.size(); ++i) (*pg[0])[i] += g[i] * (1.0 - y[i] * y[i]);
                   });
}

Var layer_norm_rows(const Var& a, double eps) {
    const std::size_t n = a.rows(), d = a.cols();
    Matrix out(n, d);
    std::vector<double> inv_sigma(n);
    for (std::size_t r = 0; r < n; ++r) {
        const auto x = a.value().row(r);
        double mu = 0.0;
        for (double v : x) mu += v;
        mu /= static_cast<double>(d);
        double var = 0.0;
        for (double v : x) var += (v - mu) * (v - mu);
        var /= static_cast<double>(d);
        inv_sigma[r] = 1.0 / std::sqrt(var + eps);
        auto y = out.row(r);
        for (std::size_t c = 0; c < d; ++c) y[c] = (x[c] - mu) * inv_sigma[r];
    }
    return make_op(std::move(out), {a},
                   [inv_sigma = std::move(inv_sigma), d](const Matrix& y, const Matrix& g, std::span<Matrix* const> pg) {
                       // dx = (g - mean(g) - y * mean(g * y)) / sigma
                       for (std::size_t r = 0; r < y.rows(); ++r) {
                           const auto yr = y.row(r);
                           const auto gr = g.row(r);
                           double mg = 0.0, mgy = 0.0;
                           for (std::size_t c = 0; c < d; ++c) {
                               mg += gr[c];
                               mgy += gr[c] * yr[c];
                           }
                           mg /= static_cast<double>(d);
                           mgy /= static_cast<double>(d);
                           auto dx = pg[0]->row(r);
                           for (std::size_t c = 0; c < d; ++c) dx[c] += (gr[c] - mg - yr[c] * mgy) * inv_sigma[r];
                       }
                   });
}

Var leaky_relu(const Var& a, double slope) {
    Matrix out = a.value();
    for (double& v : out.data()) v = v > 0.0 ? v : slope * v;
    return make_op(std::move(out), {a},
                   [a, slope](const Matrix&, const Matrix& g, std::span<Matrix* const> pg) {
                       for (std::size_t i = 0; i < g.size(); ++i)
                           (*pg[0])[i] += g[i] * (a.value()[i] > 0.0 ? 1.0 : slope);
                   });
}

Var softmax_rows(const Var& a) {
    Matrix out = a.value();
    for (std::size_t r = 0; r < out.rows(); ++r) {
        auto row = out.row(r);
        const double mx = *std::max_element(row.begin(), row.end());
        double total = 0.0;
        for (double& v : row) total += (v = std::exp(v - mx));
        for (double& v : row) v /= total;
    }
    return make_op(std::move(out), {a},
                   [](const Matrix& y, const Matrix& g, std::span<Matrix* const> pg) {
                       const auto& K = kernels::active();
                       for (std::size_t r = 0; r < y.rows(); ++r) {
                           const double inner = K.dot(y.row(r).data(), g.row(r).data(), y.cols());
                           auto dst = pg[0]->row(r);
                           for (std::size_t c = 0; c < y.cols(); ++c) dst[c] += y(r, c) * (g(r, c) - inner);
                       }
                   });
}

Var gather_rows(const Var& table, std::span<const std::size_t> ids) {
    const Matrix& T = table.value();
    Matrix out(ids.size(), T.cols());
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (ids[i] >= T.rows()) throw Error(ErrorCode::IndexOutOfRange, "gather_rows id out of range");
        std::copy(T.row(ids[i]).begin(), T.row(ids[i]).end(), out.row(i).begin());
    }
    std::vector<std::size_t> idx(ids.begin(), ids.end());
    return make_op(std::move(out), {table},
                   [idx = std::move(idx)](const Matrix&, const Matrix& g, std::span<Matrix* const> pg) {
                       const auto& K = kernels::active();
                       for (std::size_t i = 0; i < idx.size(); ++i)
                           K.axpy(1.0, g.row(i).data(), pg[0]->row(idx[i]).data(), g.cols());
                   });
}

Var slice_row(const Var& a, std::size_t r) {
    if (r >= a.rows()) throw Error(ErrorCode::IndexOutOfRange, "slice_row out of range");
    Matrix out = Matrix::row_vector(a.value().row(r));
    return make_op(std::move(out), {a},
                   [r](const Matrix&, const Matrix& g, std::span<Matrix* const> pg) {
                       kernels::active().axpy(1.0, g.data().data(), pg[0]->row(r).data(), g.cols());
                   });
}

Var concat_cols(std::span<const Var> parts) {
    require(!parts.empty(), "concat_cols of nothing");
    const std::size_t rows = parts[0].rows();
    std::size_t cols = 0;
    for (const Var& p : parts) {
        require(p.rows() == rows, "concat_cols row mismatch");
        cols += p.cols();
    }
    Matrix out(rows, cols);
    std::vector<std::size_t> offsets;
    std::size_t off = 0;
    for (const Var& p : parts) {
        offsets.push_back(off);
        for (std::size_t r = 0; r < rows; ++r)
            std::copy(p.value().row(r).begin(), p.value().row(r).end(), out.row(r).begin() + off);
        off += p.cols();
    }
    return make_op(std::move(out), std::vector<Var>(parts.begin(), parts.end()),
                   [offsets](const Matrix&, const Matrix& g, std::span<Matrix* const> pg) {
                       for (std::size_t i = 0; i < pg.size(); ++i) {
                           if (!pg[i]) continue;
                           for (std::size_t r = 0; r < g.rows(); ++r) {
                               auto dst = pg[i]->row(r);
                               for (std::size_t c = 0; c < dst.size(); ++c) dst[c] += g(r, offsets[i] + c);
                           }
                       }
                   });
}

Var stack_rows(std::span<const Var> rows) {
    require(!rows.empty(), "stack_rows of nothing");
    const std::size_t cols = rows[0].cols();
    std::size_t total = 0;
    for (const Var& r : rows) {
        require(r.cols() == cols, "stack_rows column mismatch");
        total += r.rows();
    }
    Matrix out(total, cols);
    std::vector<std::size_t> offsets;
    std::size_t off = 0;
    for (const Var& r : rows) {
        offsets.push_back(off);
        std::copy(r.value().data().begin(), r.value().data().end(), out.data().begin() + off * cols);
        off += r.rows();
    }
    return make_op(std::move(out), std::vector<Var>(rows.begin(), rows.end()),
                   [offsets](const Matrix&, const Matrix& g, std::span<Matrix* const> pg) {
                       for (std::size_t i = 0; i < pg.size(); ++i) {
                           if (!pg[i]) continue;
                           kernels::active().axpy(1.0, g.row(offsets[i]).data(), pg[i]->data().data(),
                                                  pg[i]->size());
                       }
                   });
}

Var mean_rows(const Var& a) {
    const Matrix& A = a.value();
    require(A.rows() > 0, "mean_rows of an empty matrix");
    Matrix out(1, A.cols());
    const double inv = 1.0 / static_cast<double>(A.rows());
    for (std::size_t r = 0; r < A.rows(); ++r) kernels::active().axpy(inv, A.row(r).data(), out.data().data(), A.cols());
    return make_op(std::move(out), {a},
                   [inv](const Matrix&, const Matrix& g, std::span<Matrix* const> pg) {
                       for (std::size_t r = 0; r < pg[0]->rows(); ++r)
                           kernels::active().axpy(inv, g.data().data(), pg[0]->row(r).data(), g.cols());
                   });
}

Var sum(const Var& a) {
    double total = 0.0;
    for (double v : a.value().data()) total += v;
    return make_op(Matrix(1, 1, total), {a},
                   [](const Matrix&, const Matrix& g, std::span<Matrix* const> pg) {
                       for (double& v : pg[0]->data()) v += g[0];
                   });
}

Var cosine(const Var& a, const Var& b) {
    const Matrix& A = a.value();
    const Matrix& B = b.value();
    require(A.rows() == 1 && B.rows() == 1 && A.cols() == B.cols(), "cosine expects two 1xn vectors");
    const auto& K = kernels::active();
    const std::size_t n = A.cols();
    const double ab = K.dot(A.data().data(), B.data().data(), n);
    const double na = std::sqrt(K.dot(A.data().data(), A.data().data(), n));
    const double nb = std::sqrt(K.dot(B.data().data(), B.data().data(), n));
    if (na == 0.0 || nb == 0.0) throw Error(ErrorCode::ZeroVector, "cosine of a zero-norm vector");
    const double c = ab / (na * nb);
    return make_op(Matrix(1, 1, c), {a, b},
                   [a, b, na, nb, c, n](const Matrix&, const Matrix& g, std::span<Matrix* const> pg) {
                       const auto& K = kernels::active();
                       const double s = g[0];
                       if (pg[0]) {
                           K.axpy(s / (na * nb), b.value().data().data(), pg[0]->data().data(), n);
                           K.axpy(-s * c / (na * na), a.value().data().data(), pg[0]->data().data(), n);
                       }
                       if (pg[1]) {
                           K.axpy(s / (na * nb), a.value().data().data(), pg[1]->data().data(), n);
                           K.axpy(-s * c / (nb * nb), b.value().data().data(), pg[1]->data().data(), n);
                       }
                   });
}

Var softmax_nll(const Var& scores, std::size_t gold) {
    const Matrix& S = scores.value();
    require(S.rows() == 1, "softmax_nll expects a 1xn row");
    if (gold >= S.cols()) throw Error(ErrorCode::IndexOutOfRange, "gold index out of range");
    const double mx = *std::max_element(S.data().begin(), S.data().end());
    double total = 0.0;
    for (double v : S.data()) total += std::exp(v - mx);
    const double log_z = mx + std::log(total);
    return make_op(Matrix(1, 1, log_z - S[gold]), {scores},
                   [scores, gold, log_z](const Matrix&, const Matrix& g, std::span<Matrix* const> pg) {
                       const Matrix& S = scores.value();
                       for (std::size_t i = 0; i < S.cols(); ++i) {
                           const double p = std::exp(S[i] - log_z);
                           (*pg[0])[i] += g[0] * (p - (i == gold ? 1.0 : 0.0));
                       }
                   });
}

}  // namespace strudel
