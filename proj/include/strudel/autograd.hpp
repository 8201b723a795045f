#pragma once

// Reverse-mode automatic differentiation over small dense row-major matrices.
//
// A Var is a shared handle to a node in the computation graph. Nodes built
// only from constants record nothing, so inference through frozen weights
// leaves no tape behind. Calling backward() on a 1x1 result accumulates into
// the grad() of every reachable leaf that requires gradients.

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <vector>

namespace strudel {

class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

    static Matrix row_vector(std::span<const double> values);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    std::span<double> data() noexcept { return data_; }
    std::span<const double> data() const noexcept { return data_; }
    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    bool same_shape(const Matrix& other) const noexcept {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }
    void fill(double v);

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

struct Node;

// parent_grads[i] is null when parent i does not require gradients.
using BackwardFn = std::function<void(const Matrix& out_value, const Matrix& out_grad,
                                      std::span<Matrix* const> parent_grads)>;

struct Node {
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    std::vector<std::shared_ptr<Node>> parents;
    BackwardFn backward;
};

class Var {
public:
    Var() = default;

    static Var constant(Matrix value);
    static Var parameter(Matrix value);

    bool defined() const noexcept { return node_ != nullptr; }
    const Matrix& value() const { return node_->value; }
    // Leaf-only mutation, used by optimizers and checkpoint loading.
    Matrix& mutable_value() { return node_->value; }
    const Matrix& grad() const { return node_->grad; }
    bool requires_grad() const noexcept { return node_ && node_->requires_grad; }
    std::size_t rows() const { return node_->value.rows(); }
    std::size_t cols() const { return node_->value.cols(); }
    double scalar() const;

    void zero_grad();
    // Requires a 1x1 value.
    void backward() const;

    const std::shared_ptr<Node>& node() const noexcept { return node_; }

private:
    explicit Var(std::shared_ptr<Node> node) : node_(std::move(node)) {}
    friend Var make_op(Matrix value, std::vector<Var> parents, BackwardFn fn);

    std::shared_ptr<Node> node_;
};

// Builds an interior node. The backward closure runs only if some parent
// requires gradients.
Var make_op(Matrix value, std::vector<Var> parents, BackwardFn fn);

Var matmul(const Var& a, const Var& b);
// a * b^T
Var matmul_bt(const Var& a, const Var& b);
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
// Adds a 1 x cols row to every row of a.
Var add_row(const Var& a, const Var& row);
Var hadamard(const Var& a, const Var& b);
Var scale(const Var& a, double factor);
Var tanh(const Var& a);
// Per-row zero mean, unit variance; no gain or bias.
Var layer_norm_rows(const Var& a, double eps = 1e-5);
Var leaky_relu(const Var& a, double slope);
Var softmax_rows(const Var& a);
Var gather_rows(const Var& table, std::span<const std::size_t> ids);
Var slice_row(const Var& a, std::size_t r);
Var concat_cols(std::span<const Var> parts);
Var stack_rows(std::span<const Var> rows);
Var mean_rows(const Var& a);
Var sum(const Var& a);
// Cosine similarity of two 1 x n vectors; throws ZeroVector on a zero norm.
Var cosine(const Var& a, const Var& b);
// -log softmax(scores)[gold] for a 1 x n row of scores.
Var softmax_nll(const Var& scores, std::size_t gold);

}  // namespace strudel
