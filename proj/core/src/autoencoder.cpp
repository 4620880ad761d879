#include "dbps/autoencoder.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <string>

#include "dbps/error.hpp"

namespace dbps::learn {

namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMajor>;

DenseLayer make_layer(std::size_t in, std::size_t out, channel::RngStream* rng) {
    std::vector<double> w(in * out, 0.0);
    std::vector<double> b(out, 0.0);
    if (rng) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(in));
        for (auto& v : w) v = bound * (2.0 * rng->uniform() - 1.0);
        for (auto& v : b) v = bound * (2.0 * rng->uniform() - 1.0);
    }
    return {ad::Var::parameter(in, out, std::move(w)), ad::Var::parameter(1, out, std::move(b))};
}

double stable_logistic(double x) {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

} // namespace

TxParams TxParams::random(int m, channel::RngStream& rng) {
    if (m < 1 || m > 8) {
        throw ConfigError("modulation order m must be in 1..8, got " + std::to_string(m));
    }
    const std::size_t M = std::size_t{1} << m;
    std::vector<cplx> pts(M);
    for (auto& p : pts) {
        const double re = rng.normal();
        const double im = rng.normal();
        p = {re, im};
    }
    pts = normalize(pts);
    std::vector<double> w(2 * M);
    for (std::size_t i = 0; i < M; ++i) {
        w[2 * i] = pts[i].real();
        w[2 * i + 1] = pts[i].imag();
    }
    return {ad::Var::parameter(M, 2, std::move(w)), m};
}

TxParams TxParams::from_constellation(const Constellation& c) {
    if (c.order() > 8) {
        throw ConfigError("modulation order above 8 is not supported");
    }
    const std::size_t M = c.size();
    std::vector<double> w(2 * M);
    for (std::uint32_t label = 0; label < M; ++label) {
        const cplx p = c.point(c.index_of_label(label));
        w[2 * label] = p.real();
        w[2 * label + 1] = p.imag();
    }
    return {ad::Var::parameter(M, 2, std::move(w)), c.order()};
}

ad::Var TxParams::normalized() const {
    // x / sqrt(mean |x|^2), mean over the M points
    auto power = ad::scale(ad::sum(weights * weights), 1.0 / static_cast<double>(size()));
    return weights / ad::sqrt(power);
}

Constellation TxParams::crystallize() const {
    const auto w = normalized();
    std::vector<cplx> pts(size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
        pts[i] = {w.value(i, 0), w.value(i, 1)};
    }
    return Constellation::with_identity_labels(std::move(pts));
}

RxParams::RxParams(std::array<DenseLayer, 3> layers) : layers_(std::move(layers)) {
    if (layers_[0].inputs() != 2) {
        throw ShapeError("Rx input layer must take 2 features (re, im)");
    }
    for (std::size_t i = 0; i < 3; ++i) {
        const auto& l = layers_[i];
        if (l.bias.rows() != 1 || l.bias.cols() != l.outputs()) {
            throw ShapeError("Rx layer " + std::to_string(i) + " bias has the wrong shape");
        }
        if (i > 0 && l.inputs() != layers_[i - 1].outputs()) {
            throw ShapeError("Rx layer " + std::to_string(i) + " input width does not match the previous layer");
        }
    }
}

RxParams RxParams::init(int bits, channel::RngStream& rng, std::size_t hidden) {
    return RxParams({make_layer(2, hidden, &rng), make_layer(hidden, hidden, &rng),
                     make_layer(hidden, static_cast<std::size_t>(bits), &rng)});
}

RxParams RxParams::zeros(int bits, std::size_t hidden) {
    return RxParams({make_layer(2, hidden, nullptr), make_layer(hidden, hidden, nullptr),
                     make_layer(hidden, static_cast<std::size_t>(bits), nullptr)});
}

std::vector<ad::Var> RxParams::parameters() const {
    std::vector<ad::Var> out;
    for (const auto& l : layers_) {
        out.push_back(l.weight);
        out.push_back(l.bias);
    }
    return out;
}

RxParams RxParams::clone() const {
    std::array<DenseLayer, 3> copy;
    for (std::size_t i = 0; i < 3; ++i) {
        const auto& l = layers_[i];
        copy[i].weight = ad::Var::parameter(l.weight.rows(), l.weight.cols(),
                                            std::vector<double>(l.weight.value().begin(), l.weight.value().end()));
        copy[i].bias = ad::Var::parameter(l.bias.rows(), l.bias.cols(),
                                          std::vector<double>(l.bias.value().begin(), l.bias.value().end()));
    }
    return RxParams(std::move(copy));
}

RealMatrix RxParams::posteriors(std::span<const cplx> symbols) const {
    const std::size_t n = symbols.size();
    const std::size_t m = static_cast<std::size_t>(bits());
    RealMatrix out(n, m);
    constexpr std::size_t chunk = 2048;

    auto weight = [this](std::size_t i) {
        const auto& l = layers_[i];
        return ConstMap(l.weight.value().data(), static_cast<Eigen::Index>(l.inputs()),
                        static_cast<Eigen::Index>(l.outputs()));
    };
    auto bias = [this](std::size_t i) {
        const auto& l = layers_[i];
        return Eigen::Map<const Eigen::RowVectorXd>(l.bias.value().data(), static_cast<Eigen::Index>(l.outputs()));
    };

    RowMajor x, h1, h2, o;
    for (std::size_t start = 0; start < n; start += chunk) {
        const std::size_t len = std::min(chunk, n - start);
        x.resize(static_cast<Eigen::Index>(len), 2);
        for (std::size_t k = 0; k < len; ++k) {
            x(static_cast<Eigen::Index>(k), 0) = symbols[start + k].real();
            x(static_cast<Eigen::Index>(k), 1) = symbols[start + k].imag();
        }
        h1.noalias() = x * weight(0);
        h1.rowwise() += bias(0);
        h1 = h1.cwiseMax(0.0);
        h2.noalias() = h1 * weight(1);
        h2.rowwise() += bias(1);
        h2 = h2.cwiseMax(0.0);
        o.noalias() = h2 * weight(2);
        o.rowwise() += bias(2);
        for (std::size_t k = 0; k < len; ++k) {
            for (std::size_t j = 0; j < m; ++j) {
                out(start + k, j) = stable_logistic(o(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)));
            }
        }
    }
    return out;
}

ad::Var complex_constant(std::span<const cplx> z) {
    std::vector<double> v(2 * z.size());
    for (std::size_t k = 0; k < z.size(); ++k) {
        v[2 * k] = z[k].real();
        v[2 * k + 1] = z[k].imag();
    }
    return ad::Var::constant(z.size(), 2, std::move(v));
}

ComplexSequence to_complex(const ad::Var& z) {
    if (z.cols() != 2) {
        throw ShapeError("expected an n x 2 array of (re, im) rows");
    }
    ComplexSequence out(z.rows());
    for (std::size_t k = 0; k < out.size(); ++k) {
        out[k] = {z.value(k, 0), z.value(k, 1)};
    }
    return out;
}

ad::Var tx_forward(std::span<const std::uint32_t> labels, const TxParams& tx) {
    return ad::gather_rows(tx.normalized(), labels);
}

ad::Var tx_forward(const RealMatrix& bits, const TxParams& tx) {
    if (bits.cols != static_cast<std::size_t>(tx.order)) {
        throw ShapeError("tx_forward: bit matrix has " + std::to_string(bits.cols) + " columns, expected " +
                         std::to_string(tx.order));
    }
    const auto labels = bits_to_labels(bits);
    return tx_forward(labels, tx);
}

ad::Var rx_forward(const ad::Var& symbols, const RxParams& rx) {
    const auto& l = rx.layers();
    auto h = ad::relu(ad::matmul(symbols, l[0].weight) + l[0].bias);
    h = ad::relu(ad::matmul(h, l[1].weight) + l[1].bias);
    return ad::logistic(ad::matmul(h, l[2].weight) + l[2].bias);
}

ad::Var bce_loss(const ad::Var& probs, const RealMatrix& bits, const Mask& mask) {
    if (probs.rows() != bits.rows || probs.cols() != bits.cols) {
        throw ShapeError("bce_loss: probabilities and bits differ in shape");
    }
    if (mask.size() != bits.rows) {
        throw ShapeError("bce_loss: mask length does not match the number of rows");
    }
    const std::size_t m = bits.cols;
    std::size_t used = 0;
    double total = 0.0;
    const auto p = probs.value();
    for (std::size_t k = 0; k < bits.rows; ++k) {
        if (!mask[k]) continue;
        ++used;
        for (std::size_t j = 0; j < m; ++j) {
            const double q = std::clamp(p[k * m + j], probability_floor, 1.0 - probability_floor);
            total -= bits(k, j) != 0.0 ? std::log(q) : std::log1p(-q);
        }
    }
    if (used == 0) {
        throw NumericalError("bce_loss: mask selects no symbols");
    }
    const double count = static_cast<double>(used * m);
    if (!std::isfinite(total)) {
        throw NumericalError("bce_loss: non-finite loss");
    }
    const auto& pn = probs.node();
    return ad::Var::make(1, 1, {total / count}, {pn}, [pn, bits, mask, count](ad::Node& self) {
        auto& gp = pn->grad_buffer();
        const double g = self.grad[0] / count;
        const std::size_t m = bits.cols;
        for (std::size_t k = 0; k < bits.rows; ++k) {
            if (!mask[k]) continue;
            for (std::size_t j = 0; j < m; ++j) {
                const double q = pn->value[k * m + j];
                if (q < probability_floor || q > 1.0 - probability_floor) continue;
                gp[k * m + j] += bits(k, j) != 0.0 ? -g / q : g / (1.0 - q);
            }
        }
    });
}

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state, const AdamOptions& options) {
    if (params.size() != grads.size()) {
        throw ShapeError("adam_step: parameter and gradient sizes differ");
    }
    if (state.first_moment.empty()) {
        state.first_moment.assign(params.size(), 0.0);
        state.second_moment.assign(params.size(), 0.0);
    }
    for (double g : grads) {
        if (!std::isfinite(g)) {
            throw NumericalError("adam_step: non-finite gradient at update " + std::to_string(state.steps + 1));
        }
    }
    ++state.steps;
    const double b1 = options.beta1;
    const double b2 = options.beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.steps));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.steps));
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto& m = state.first_moment[i];
        auto& v = state.second_moment[i];
        m = b1 * m + (1.0 - b1) * grads[i];
        v = b2 * v + (1.0 - b2) * grads[i] * grads[i];
        const double m_hat = m / c1;
        const double v_hat = v / c2;
        params[i] -= options.learning_rate * m_hat / (std::sqrt(v_hat) + options.epsilon);
    }
}

Adam::Adam(std::vector<ad::Var> params, AdamOptions options)
    : params_(std::move(params)), states_(params_.size()), options_(options) {}

void Adam::step() {
    std::vector<double> zeros;
    for (std::size_t i = 0; i < params_.size(); ++i) {
        auto g = params_[i].grad();
        if (g.empty()) {
            zeros.assign(params_[i].size(), 0.0);
            g = zeros;
        }
        adam_step(params_[i].mutable_value(), g, states_[i], options_);
    }
}

void Adam::zero_grad() {
    for (auto& p : params_) {
        p.zero_grad();
    }
}

} // namespace dbps::learn
