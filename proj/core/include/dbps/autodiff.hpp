#pragma once

// Minimal reverse-mode differentiation over 2-D arrays of doubles.
//
// A Var is a cheap handle onto a graph node holding a value array, its
// accumulated gradient, and a closure that pushes the node's gradient into its
// parents. Calling backward() on a 1x1 Var sorts the reachable graph and runs
// those closures in reverse topological order. Gradients accumulate, so
// fan-out needs no special handling; parameters must be zeroed between steps.
//
// Complex sequences are carried as n x 2 arrays (column 0 real, column 1
// imaginary).

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <vector>

namespace dbps::ad {

struct Node {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> value;
    std::vector<double> grad;
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(Node&)> backward_fn;
    bool requires_grad = false;

    std::size_t size() const noexcept { return value.size(); }
    /// Allocates the gradient buffer on first use.
    std::vector<double>& grad_buffer();
};

class Var {
public:
    Var() = default;

    /// Leaf that never receives a gradient.
    static Var constant(std::size_t rows, std::size_t cols, std::vector<double> values);
    /// Leaf whose gradient is accumulated by backward().
    static Var parameter(std::size_t rows, std::size_t cols, std::vector<double> values);
    static Var scalar(double v);

    /// Interior node. requires_grad is inherited from the parents; the
    /// backward closure is dropped when no parent needs a gradient.
    static Var make(std::size_t rows, std::size_t cols, std::vector<double> values,
                    std::vector<std::shared_ptr<Node>> parents, std::function<void(Node&)> backward_fn);

    std::size_t rows() const { return node_->rows; }
    std::size_t cols() const { return node_->cols; }
    std::size_t size() const { return node_->value.size(); }

    std::span<const double> value() const { return node_->value; }
    std::span<double> mutable_value() const { return node_->value; }
    double value(std::size_t r, std::size_t c) const { return node_->value[r * node_->cols + c]; }
    double item() const;

    /// Empty span until a gradient has been accumulated.
    std::span<const double> grad() const { return node_->grad; }
    bool requires_grad() const { return node_ && node_->requires_grad; }

    void backward() const;
    void zero_grad() const;

    const std::shared_ptr<Node>& node() const { return node_; }
    explicit operator bool() const { return static_cast<bool>(node_); }

private:
    explicit Var(std::shared_ptr<Node> n) : node_(std::move(n)) {}
    std::shared_ptr<Node> node_;
};

// Elementwise binary ops broadcast any operand dimension of size 1.
Var operator+(const Var& a, const Var& b);
Var operator-(const Var& a, const Var& b);
Var operator*(const Var& a, const Var& b);
Var operator/(const Var& a, const Var& b);
Var operator-(const Var& a);

Var scale(const Var& a, double factor);
Var add_constant(const Var& a, double c);

Var exp(const Var& a);
Var log(const Var& a);
Var sqrt(const Var& a);
Var relu(const Var& a);
Var logistic(const Var& a);

/// Sum / mean of all entries -> 1x1.
Var sum(const Var& a);
Var mean(const Var& a);
/// Column sums -> 1 x cols.
Var sum_rows(const Var& a);
/// Row sums -> rows x 1.
Var sum_cols(const Var& a);
/// Row minima -> rows x 1. The gradient goes to the first minimizing entry.
Var min_cols(const Var& a);

/// out.row(i) = a.row(indices[i]); gradient scatter-adds.
Var gather_rows(const Var& a, std::span<const std::uint32_t> indices);

/// (r x n) * (n x c).
Var matmul(const Var& a, const Var& b);

/// Complex rotation of an n x 2 array by an n x 1 angle array:
/// out[k] = z[k] * exp(j phi[k]).
Var rotate(const Var& z, const Var& phi);

} // namespace dbps::ad
