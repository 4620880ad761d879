#pragma once

#include <cstdint>
#include <functional>
#include <string_view>
#include <vector>

#include "dbps/autoencoder.hpp"
#include "dbps/channel.hpp"
#include "dbps/constellation.hpp"
#include "dbps/cpe.hpp"

namespace dbps::learn {

/// What sits between the Tx and the Rx during training.
///  - diff_bps: AWGN, Wiener phase noise, soft BPS (gradients flow through it)
///  - hard_bps: AWGN, Wiener phase noise, hard BPS (estimates are constants)
///  - rpn:      AWGN and memoryless Gaussian phase rotation, no BPS
///  - awgn:     AWGN only
enum class TrainMode { diff_bps, hard_bps, rpn, awgn };

std::string_view to_string(TrainMode mode);
TrainMode parse_train_mode(std::string_view name);

enum class TxInit { random, gray_qam };
std::string_view to_string(TxInit init);
TxInit parse_tx_init(std::string_view name);

enum class Optimizer { adam };

struct TrainConfig {
    int order = 6;
    std::size_t batch_sequences = 32;
    std::size_t sequence_length = 256;
    std::size_t steps = 2000;
    double learning_rate = 1e-3;
    Optimizer optimizer = Optimizer::adam;
    std::uint64_t seed = 1;
    channel::ChannelConfig channel;
    /// L and N; the mode is taken from `mode` and the temperature from the schedule.
    cpe::BpsConfig bps;
    double temperature_start = 1.0;
    double temperature_end = 1e-3;
    TrainMode mode = TrainMode::diff_bps;
    TxInit tx_init = TxInit::random;
    /// Keep the Tx fixed and train only the Rx.
    bool freeze_tx = false;
    std::size_t rx_hidden = 128;
    /// hard_bps only: remove one global rotation per sequence, estimated by
    /// correlating the BPS output with the transmitted symbols.
    bool align_rotation = false;

    void validate() const;
};

struct LossRecord {
    std::size_t step = 0;
    double loss = 0.0;
    double temperature = 0.0;
};

struct TrainResult {
    Constellation constellation;
    RxParams rx;
    std::vector<LossRecord> history;
};

using ProgressCallback = std::function<void(const LossRecord&)>;

/// Fixed randomness for one training batch.
struct BatchSample {
    std::vector<std::uint32_t> labels; ///< batch_sequences * sequence_length
    ComplexSequence noise;
    std::vector<double> phase; ///< Wiener or RPN angles, zeros for awgn
};

BatchSample draw_batch(const TrainConfig& cfg, std::size_t step);

/// Loss graph for one batch: Tx, channel, CPE, Rx, masked BCE.
ad::Var batch_loss(const TrainConfig& cfg, const TxParams& tx, const RxParams& rx, const BatchSample& batch,
                   double temperature);

/// Initial Tx/Rx parameters for cfg (deterministic in cfg.seed).
TxParams initial_tx(const TrainConfig& cfg);
RxParams initial_rx(const TrainConfig& cfg);

/// Joint Adam training of Tx and Rx. Deterministic given cfg.
TrainResult train(const TrainConfig& cfg, const ProgressCallback& progress = {});

/// Continue training from given parameters (used for Rx-only baselines).
TrainResult train_from(const TrainConfig& cfg, TxParams tx, RxParams rx, const ProgressCallback& progress = {});

/// Reference model trained on AWGN plus surrogate residual phase noise
/// (cfg.channel.rpn_sigma), no BPS in the loop.
TrainResult train_rpn_reference(TrainConfig cfg, const ProgressCallback& progress = {});

/// Moving average of the loss over `window` records ending at `end` (exclusive).
double moving_average_loss(const std::vector<LossRecord>& history, std::size_t end, std::size_t window);

} // namespace dbps::learn
