#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "dbps/autodiff.hpp"
#include "dbps/channel.hpp"
#include "dbps/constellation.hpp"
#include "dbps/types.hpp"

namespace dbps::learn {

/// Transmitter mapping: one weight row (re, im) per label. Row i is the
/// symbol sent for the bit vector whose MSB-first integer value is i.
struct TxParams {
    ad::Var weights; ///< M x 2 parameter
    int order = 0;

    /// Rows drawn from a circular Gaussian, then normalized.
    static TxParams random(int m, channel::RngStream& rng);
    /// Row i = point carrying label i.
    static TxParams from_constellation(const Constellation& c);

    std::size_t size() const { return std::size_t{1} << order; }

    /// Weight matrix scaled to unit mean power, as a graph node.
    ad::Var normalized() const;
    /// Current normalized rows with their labels.
    Constellation crystallize() const;
};

struct DenseLayer {
    ad::Var weight; ///< in x out
    ad::Var bias;   ///< 1 x out

    std::size_t inputs() const { return weight.rows(); }
    std::size_t outputs() const { return weight.cols(); }
};

/// Receiver network: (re, im) -> hidden -> hidden -> per-bit probabilities,
/// ReLU on the hidden layers and a logistic output.
class RxParams {
public:
    RxParams() = default;
    explicit RxParams(std::array<DenseLayer, 3> layers);

    /// PyTorch-style uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) initialization.
    static RxParams init(int bits, channel::RngStream& rng, std::size_t hidden = 128);
    /// All weights and biases zero (every output is 0.5).
    static RxParams zeros(int bits, std::size_t hidden = 128);

    int bits() const { return static_cast<int>(layers_[2].outputs()); }
    std::size_t hidden() const { return layers_[0].outputs(); }
    const std::array<DenseLayer, 3>& layers() const { return layers_; }

    std::vector<ad::Var> parameters() const;

    /// Deep copy; the copy shares no graph nodes with *this.
    RxParams clone() const;

    /// Graph-free inference, n x bits posteriors P(b_i = 1 | y).
    RealMatrix posteriors(std::span<const cplx> symbols) const;

private:
    std::array<DenseLayer, 3> layers_;
};

/// Interleaved (re, im) rows of a complex sequence as an n x 2 constant.
ad::Var complex_constant(std::span<const cplx> z);
ComplexSequence to_complex(const ad::Var& z);

/// bits: B x m 0/1 matrix. Returns B x 2 transmit symbols drawn from the
/// normalized weight rows.
ad::Var tx_forward(const RealMatrix& bits, const TxParams& tx);
ad::Var tx_forward(std::span<const std::uint32_t> labels, const TxParams& tx);

/// symbols: B x 2. Returns B x m probabilities.
ad::Var rx_forward(const ad::Var& symbols, const RxParams& rx);

/// Clamp applied to probabilities before taking logs.
inline constexpr double probability_floor = 1e-12;

/// Mean binary cross-entropy in nats over rows with mask[k] != 0. Throws
/// NumericalError when the mask selects nothing.
ad::Var bce_loss(const ad::Var& probs, const RealMatrix& bits, const Mask& mask);

struct AdamOptions {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct AdamState {
    std::vector<double> first_moment;
    std::vector<double> second_moment;
    std::size_t steps = 0;
};

/// One bias-corrected Adam update of `params` in place. Throws
/// NumericalError on a non-finite gradient.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state, const AdamOptions& options);

/// Adam over a fixed set of graph parameters.
class Adam {
public:
    Adam(std::vector<ad::Var> params, AdamOptions options);

    /// Applies the accumulated gradients; parameters without a gradient
    /// are treated as having a zero gradient.
    void step();
    void zero_grad();

private:
    std::vector<ad::Var> params_;
    std::vector<AdamState> states_;
    AdamOptions options_;
};

} // namespace dbps::learn
