#include "dbps/autodiff.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <string>
#include <unordered_set>

#include "dbps/error.hpp"

namespace dbps::ad {

namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMajor>;
using MutMap = Eigen::Map<RowMajor>;

std::string shape_str(const Var& v) { return std::to_string(v.rows()) + "x" + std::to_string(v.cols()); }

std::size_t broadcast_dim(std::size_t a, std::size_t b, const Var& va, const Var& vb, const char* op) {
    if (a == b || b == 1) return a;
    if (a == 1) return b;
    throw ShapeError(std::string(op) + ": cannot broadcast " + shape_str(va) + " with " + shape_str(vb));
}

// Elementwise op with broadcasting. `da`/`db` return the partial derivative
// of the output with respect to each operand given (x, y, out).
template <class F, class DA, class DB>
Var binary(const Var& a, const Var& b, const char* name, F f, DA da, DB db) {
    const std::size_t rows = broadcast_dim(a.rows(), b.rows(), a, b, name);
    const std::size_t cols = broadcast_dim(a.cols(), b.cols(), a, b, name);
    const auto& an = a.node();
    const auto& bn = b.node();
    const bool same = an->rows == rows && an->cols == cols && bn->rows == rows && bn->cols == cols;

    std::vector<double> out(rows * cols);
    if (same) {
        for (std::size_t i = 0; i < out.size(); ++i) {
            out[i] = f(an->value[i], bn->value[i]);
        }
    } else {
        for (std::size_t r = 0; r < rows; ++r) {
            const double* x = an->value.data() + (an->rows == 1 ? 0 : r * an->cols);
            const double* y = bn->value.data() + (bn->rows == 1 ? 0 : r * bn->cols);
            const std::size_t xs = an->cols == 1 ? 0 : 1;
            const std::size_t ys = bn->cols == 1 ? 0 : 1;
            double* o = out.data() + r * cols;
            for (std::size_t c = 0; c < cols; ++c) {
                o[c] = f(x[c * xs], y[c * ys]);
            }
        }
    }

    return Var::make(rows, cols, std::move(out), {an, bn}, [an, bn, same, da, db](Node& self) {
        const auto& g = self.grad;
        double* ga = an->requires_grad ? an->grad_buffer().data() : nullptr;
        double* gb = bn->requires_grad ? bn->grad_buffer().data() : nullptr;
        if (same) {
            if (ga) {
                for (std::size_t i = 0; i < g.size(); ++i) {
                    ga[i] += g[i] * da(an->value[i], bn->value[i], self.value[i]);
                }
            }
            if (gb) {
                for (std::size_t i = 0; i < g.size(); ++i) {
                    gb[i] += g[i] * db(an->value[i], bn->value[i], self.value[i]);
                }
            }
            return;
        }
        const std::size_t xs = an->cols == 1 ? 0 : 1;
        const std::size_t ys = bn->cols == 1 ? 0 : 1;
        for (std::size_t r = 0; r < self.rows; ++r) {
            const std::size_t xo = an->rows == 1 ? 0 : r * an->cols;
            const std::size_t yo = bn->rows == 1 ? 0 : r * bn->cols;
            const double* x = an->value.data() + xo;
            const double* y = bn->value.data() + yo;
            const double* gr = g.data() + r * self.cols;
            const double* o = self.value.data() + r * self.cols;
            if (ga) {
                for (std::size_t c = 0; c < self.cols; ++c) {
                    ga[xo + c * xs] += gr[c] * da(x[c * xs], y[c * ys], o[c]);
                }
            }
            if (gb) {
                for (std::size_t c = 0; c < self.cols; ++c) {
                    gb[yo + c * ys] += gr[c] * db(x[c * xs], y[c * ys], o[c]);
                }
            }
        }
    });
}

// Elementwise unary op; `df` returns d out / d x given (x, out).
template <class F, class DF>
Var unary(const Var& a, F f, DF df) {
    const auto& an = a.node();
    std::vector<double> out(an->value.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = f(an->value[i]);
    }
    return Var::make(an->rows, an->cols, std::move(out), {an}, [an, df](Node& self) {
        double* ga = an->grad_buffer().data();
        const double* g = self.grad.data();
        const double* x = an->value.data();
        const double* o = self.value.data();
        for (std::size_t i = 0; i < self.grad.size(); ++i) {
            ga[i] += g[i] * df(x[i], o[i]);
        }
    });
}

} // namespace

std::vector<double>& Node::grad_buffer() {
    if (grad.empty()) {
        grad.assign(value.size(), 0.0);
    }
    return grad;
}

Var Var::constant(std::size_t rows, std::size_t cols, std::vector<double> values) {
    if (values.size() != rows * cols) {
        throw ShapeError("constant: " + std::to_string(values.size()) + " values for shape " + std::to_string(rows) +
                         "x" + std::to_string(cols));
    }
    auto n = std::make_shared<Node>();
    n->rows = rows;
    n->cols = cols;
    n->value = std::move(values);
    return Var(std::move(n));
}

Var Var::parameter(std::size_t rows, std::size_t cols, std::vector<double> values) {
    Var v = constant(rows, cols, std::move(values));
    v.node_->requires_grad = true;
    return v;
}

Var Var::scalar(double v) { return constant(1, 1, {v}); }

Var Var::make(std::size_t rows, std::size_t cols, std::vector<double> values,
              std::vector<std::shared_ptr<Node>> parents, std::function<void(Node&)> backward_fn) {
    Var v = constant(rows, cols, std::move(values));
    const bool needs = std::any_of(parents.begin(), parents.end(), [](const auto& p) { return p->requires_grad; });
    if (needs) {
        v.node_->requires_grad = true;
        v.node_->parents = std::move(parents);
        v.node_->backward_fn = std::move(backward_fn);
    }
    return v;
}

double Var::item() const {
    if (size() != 1) {
        throw ShapeError("item() on a " + shape_str(*this) + " value");
    }
    return node_->value[0];
}

void Var::zero_grad() const {
    std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
}

void Var::backward() const {
    if (size() != 1) {
        throw ShapeError("backward() needs a scalar, got " + shape_str(*this));
    }
    if (!node_->requires_grad) {
        return;
    }
    // Iterative post-order DFS gives a topological order (parents first).
    std::vector<Node*> order;
    std::unordered_set<Node*> visited;
    std::vector<std::pair<Node*, std::size_t>> stack{{node_.get(), 0}};
    visited.insert(node_.get());
    while (!stack.empty()) {
        auto& [n, next] = stack.back();
        if (next < n->parents.size()) {
            Node* p = n->parents[next++].get();
            if (p->requires_grad && visited.insert(p).second) {
                stack.emplace_back(p, 0);
            }
        } else {
            order.push_back(n);
            stack.pop_back();
        }
    }
    node_->grad_buffer()[0] += 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* n = *it;
        if (n->backward_fn && !n->grad.empty()) {
            n->backward_fn(*n);
        }
    }
}

Var operator+(const Var& a, const Var& b) {
    return binary(
        a, b, "add", [](double x, double y) { return x + y; }, [](double, double, double) { return 1.0; },
        [](double, double, double) { return 1.0; });
}

Var operator-(const Var& a, const Var& b) {
    return binary(
        a, b, "sub", [](double x, double y) { return x - y; }, [](double, double, double) { return 1.0; },
        [](double, double, double) { return -1.0; });
}

Var operator*(const Var& a, const Var& b) {
    return binary(
        a, b, "mul", [](double x, double y) { return x * y; }, [](double, double y, double) { return y; },
        [](double x, double, double) { return x; });
}

Var operator/(const Var& a, const Var& b) {
    return binary(
        a, b, "div", [](double x, double y) { return x / y; }, [](double, double y, double) { return 1.0 / y; },
        [](double, double y, double o) { return -o / y; });
}

Var operator-(const Var& a) {
    return unary(a, [](double x) { return -x; }, [](double, double) { return -1.0; });
}

Var scale(const Var& a, double factor) {
    return unary(a, [factor](double x) { return factor * x; }, [factor](double, double) { return factor; });
}

Var add_constant(const Var& a, double c) {
    return unary(a, [c](double x) { return x + c; }, [](double, double) { return 1.0; });
}

Var exp(const Var& a) {
    return unary(a, [](double x) { return std::exp(x); }, [](double, double o) { return o; });
}

Var log(const Var& a) {
    return unary(a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Var sqrt(const Var& a) {
    return unary(a, [](double x) { return std::sqrt(x); }, [](double, double o) { return 0.5 / o; });
}

Var relu(const Var& a) {
    return unary(a, [](double x) { return x > 0.0 ? x : 0.0; }, [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var logistic(const Var& a) {
    return unary(
        a,
        [](double x) {
            if (x >= 0.0) {
                return 1.0 / (1.0 + std::exp(-x));
            }
            const double e = std::exp(x);
            return e / (1.0 + e);
        },
        [](double, double o) { return o * (1.0 - o); });
}

Var sum(const Var& a) {
    const auto& an = a.node();
    double acc = 0.0;
    for (double v : an->value) {
        acc += v;
    }
    return Var::make(1, 1, {acc}, {an}, [an](Node& self) {
        auto& ga = an->grad_buffer();
        const double g = self.grad[0];
        for (auto& x : ga) {
            x += g;
        }
    });
}

Var mean(const Var& a) {
    if (a.size() == 0) {
        throw ShapeError("mean of an empty array");
    }
    return scale(sum(a), 1.0 / static_cast<double>(a.size()));
}

Var sum_rows(const Var& a) {
    const auto& an = a.node();
    std::vector<double> out(an->cols, 0.0);
    for (std::size_t r = 0; r < an->rows; ++r) {
        for (std::size_t c = 0; c < an->cols; ++c) {
            out[c] += an->value[r * an->cols + c];
        }
    }
    return Var::make(1, an->cols, std::move(out), {an}, [an](Node& self) {
        auto& ga = an->grad_buffer();
        for (std::size_t r = 0; r < an->rows; ++r) {
            for (std::size_t c = 0; c < an->cols; ++c) {
                ga[r * an->cols + c] += self.grad[c];
            }
        }
    });
}

Var sum_cols(const Var& a) {
    const auto& an = a.node();
    std::vector<double> out(an->rows, 0.0);
    for (std::size_t r = 0; r < an->rows; ++r) {
        for (std::size_t c = 0; c < an->cols; ++c) {
            out[r] += an->value[r * an->cols + c];
        }
    }
    return Var::make(an->rows, 1, std::move(out), {an}, [an](Node& self) {
        auto& ga = an->grad_buffer();
        for (std::size_t r = 0; r < an->rows; ++r) {
            for (std::size_t c = 0; c < an->cols; ++c) {
                ga[r * an->cols + c] += self.grad[r];
            }
        }
    });
}

Var min_cols(const Var& a) {
    const auto& an = a.node();
    if (an->cols == 0) {
        throw ShapeError("min_cols over zero columns");
    }
    std::vector<double> out(an->rows);
    std::vector<std::size_t> arg(an->rows);
    for (std::size_t r = 0; r < an->rows; ++r) {
        const double* row = an->value.data() + r * an->cols;
        std::size_t best = 0;
        for (std::size_t c = 1; c < an->cols; ++c) {
            if (row[c] < row[best]) {
                best = c;
            }
        }
        arg[r] = best;
        out[r] = row[best];
    }
    return Var::make(an->rows, 1, std::move(out), {an}, [an, arg = std::move(arg)](Node& self) {
        auto& ga = an->grad_buffer();
        for (std::size_t r = 0; r < an->rows; ++r) {
            ga[r * an->cols + arg[r]] += self.grad[r];
        }
    });
}

Var gather_rows(const Var& a, std::span<const std::uint32_t> indices) {
    const auto& an = a.node();
    const std::size_t cols = an->cols;
    std::vector<double> out(indices.size() * cols);
    for (std::size_t i = 0; i < indices.size(); ++i) {
        if (indices[i] >= an->rows) {
            throw ShapeError("gather_rows: index " + std::to_string(indices[i]) + " out of range");
        }
        std::copy_n(an->value.data() + indices[i] * cols, cols, out.data() + i * cols);
    }
    std::vector<std::uint32_t> idx(indices.begin(), indices.end());
    return Var::make(indices.size(), cols, std::move(out), {an}, [an, idx = std::move(idx)](Node& self) {
        auto& ga = an->grad_buffer();
        const std::size_t cols = an->cols;
        for (std::size_t i = 0; i < idx.size(); ++i) {
            for (std::size_t c = 0; c < cols; ++c) {
                ga[idx[i] * cols + c] += self.grad[i * cols + c];
            }
        }
    });
}

Var matmul(const Var& a, const Var& b) {
    if (a.cols() != b.rows()) {
        throw ShapeError("matmul: " + shape_str(a) + " times " + shape_str(b));
    }
    const auto& an = a.node();
    const auto& bn = b.node();
    std::vector<double> out(an->rows * bn->cols);
    MutMap(out.data(), an->rows, bn->cols).noalias() =
        ConstMap(an->value.data(), an->rows, an->cols) * ConstMap(bn->value.data(), bn->rows, bn->cols);
    return Var::make(an->rows, bn->cols, std::move(out), {an, bn}, [an, bn](Node& self) {
        ConstMap g(self.grad.data(), self.rows, self.cols);
        if (an->requires_grad) {
            MutMap(an->grad_buffer().data(), an->rows, an->cols).noalias() +=
                g * ConstMap(bn->value.data(), bn->rows, bn->cols).transpose();
        }
        if (bn->requires_grad) {
            MutMap(bn->grad_buffer().data(), bn->rows, bn->cols).noalias() +=
                ConstMap(an->value.data(), an->rows, an->cols).transpose() * g;
        }
    });
}

Var rotate(const Var& z, const Var& phi) {
    if (z.cols() != 2 || phi.cols() != 1 || z.rows() != phi.rows()) {
        throw ShapeError("rotate: expected n x 2 symbols and n x 1 angles, got " + shape_str(z) + " and " +
                         shape_str(phi));
    }
    const auto& zn = z.node();
    const auto& pn = phi.node();
    const std::size_t n = zn->rows;
    std::vector<double> out(2 * n);
    std::vector<double> cs(2 * n);
    for (std::size_t k = 0; k < n; ++k) {
        const double c = std::cos(pn->value[k]);
        const double s = std::sin(pn->value[k]);
        const double re = zn->value[2 * k];
        const double im = zn->value[2 * k + 1];
        out[2 * k] = re * c - im * s;
        out[2 * k + 1] = re * s + im * c;
        cs[2 * k] = c;
        cs[2 * k + 1] = s;
    }
    return Var::make(n, 2, std::move(out), {zn, pn}, [zn, pn, cs = std::move(cs)](Node& self) {
        const std::size_t n = zn->rows;
        const auto& g = self.grad;
        if (zn->requires_grad) {
            auto& gz = zn->grad_buffer();
            for (std::size_t k = 0; k < n; ++k) {
                const double c = cs[2 * k];
                const double s = cs[2 * k + 1];
                // conj(e^{j phi}) applied to the incoming gradient
                gz[2 * k] += g[2 * k] * c + g[2 * k + 1] * s;
                gz[2 * k + 1] += -g[2 * k] * s + g[2 * k + 1] * c;
            }
        }
        if (pn->requires_grad) {
            auto& gp = pn->grad_buffer();
            for (std::size_t k = 0; k < n; ++k) {
                gp[k] += -g[2 * k] * self.value[2 * k + 1] + g[2 * k + 1] * self.value[2 * k];
            }
        }
    });
}

} // namespace dbps::ad
