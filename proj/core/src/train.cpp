#include "dbps/train.hpp"

#include <cmath>
#include <complex>
#include <string>

#include "dbps/cpe_graph.hpp"
#include "dbps/error.hpp"

namespace dbps::learn {

namespace {

enum Purpose : std::uint64_t { bits_stream = 1, noise_stream = 2, phase_stream = 3, tx_init_stream = 10, rx_init_stream = 11 };

// Per-sequence rotation that best aligns `y` with `x` over valid positions.
std::vector<double> alignment_angles(const ComplexSequence& x, const ComplexSequence& y, const Mask& mask,
                                     std::size_t seq_len) {
    const std::size_t blocks = x.size() / seq_len;
    std::vector<double> angles(x.size(), 0.0);
    for (std::size_t blk = 0; blk < blocks; ++blk) {
        cplx acc{0.0, 0.0};
        for (std::size_t k = blk * seq_len; k < (blk + 1) * seq_len; ++k) {
            if (mask[k]) acc += x[k] * std::conj(y[k]);
        }
        const double a = std::arg(acc);
        std::fill(angles.begin() + static_cast<std::ptrdiff_t>(blk * seq_len),
                  angles.begin() + static_cast<std::ptrdiff_t>((blk + 1) * seq_len), a);
    }
    return angles;
}

} // namespace

std::string_view to_string(TrainMode mode) {
    switch (mode) {
    case TrainMode::diff_bps: return "diff-bps";
    case TrainMode::hard_bps: return "hard-bps";
    case TrainMode::rpn: return "rpn";
    case TrainMode::awgn: return "awgn";
    }
    return "unknown";
}

TrainMode parse_train_mode(std::string_view name) {
    if (name == "diff-bps") return TrainMode::diff_bps;
    if (name == "hard-bps") return TrainMode::hard_bps;
    if (name == "rpn") return TrainMode::rpn;
    if (name == "awgn") return TrainMode::awgn;
    throw ConfigError("unknown training mode '" + std::string(name) + "' (expected diff-bps, hard-bps, rpn or awgn)");
}

std::string_view to_string(TxInit init) { return init == TxInit::random ? "random" : "gray_qam"; }

TxInit parse_tx_init(std::string_view name) {
    if (name == "random") return TxInit::random;
    if (name == "gray_qam") return TxInit::gray_qam;
    throw ConfigError("unknown Tx initialization '" + std::string(name) + "' (expected random or gray_qam)");
}

void TrainConfig::validate() const {
    if (order < 1 || order > 8) {
        throw ConfigError("train.order must be in 1..8");
    }
    if (tx_init == TxInit::gray_qam && order % 2 != 0) {
        throw ConfigError("train.tx_init = gray_qam needs an even order");
    }
    if (batch_sequences == 0) {
        throw ConfigError("train.batch_sequences must be >= 1");
    }
    if (sequence_length == 0) {
        throw ConfigError("train.sequence_length must be >= 1");
    }
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
        throw ConfigError("train.learning_rate must be finite and > 0");
    }
    if (!(temperature_end > 0.0) || !(temperature_start >= temperature_end) || !std::isfinite(temperature_start)) {
        throw ConfigError("train temperatures need temperature_start >= temperature_end > 0");
    }
    if (rx_hidden == 0) {
        throw ConfigError("train.rx_hidden must be >= 1");
    }
    channel.validate();
    if (mode == TrainMode::diff_bps || mode == TrainMode::hard_bps) {
        bps.validate();
        if (sequence_length <= 2 * static_cast<std::size_t>(bps.half_window)) {
            throw ConfigError("train.sequence_length must exceed 2 * bps.half_window");
        }
    }
}

BatchSample draw_batch(const TrainConfig& cfg, std::size_t step) {
    const std::size_t n = cfg.batch_sequences * cfg.sequence_length;
    const std::uint32_t M = 1u << cfg.order;
    BatchSample b;
    channel::RngStream bits_rng(cfg.seed, channel::stream_id(step, bits_stream));
    b.labels.resize(n);
    for (auto& l : b.labels) {
        l = bits_rng.uniform_index(M);
    }
    channel::RngStream noise_rng(cfg.seed, channel::stream_id(step, noise_stream));
    b.noise = channel::complex_noise(n, cfg.channel.snr_db, noise_rng);

    channel::RngStream phase_rng(cfg.seed, channel::stream_id(step, phase_stream));
    b.phase.assign(n, 0.0);
    switch (cfg.mode) {
    case TrainMode::diff_bps:
    case TrainMode::hard_bps: {
        const double var = cfg.channel.phase_variance();
        for (std::size_t s = 0; s < cfg.batch_sequences; ++s) {
            const auto phi = channel::wiener_phase(cfg.sequence_length, var, phase_rng);
            std::copy(phi.begin(), phi.end(), b.phase.begin() + static_cast<std::ptrdiff_t>(s * cfg.sequence_length));
        }
        break;
    }
    case TrainMode::rpn:
        b.phase = channel::rpn_phase(n, cfg.channel.rpn_sigma, phase_rng);
        break;
    case TrainMode::awgn:
        break;
    }
    return b;
}

ad::Var batch_loss(const TrainConfig& cfg, const TxParams& tx, const RxParams& rx, const BatchSample& batch,
                   double temperature) {
    const std::size_t n = batch.labels.size();
    const auto points = tx.normalized();
    const auto x = ad::gather_rows(points, batch.labels);
    auto z = x + complex_constant(batch.noise);
    if (cfg.mode != TrainMode::awgn) {
        z = ad::rotate(z, ad::Var::constant(n, 1, batch.phase));
    }

    ad::Var rx_in = z;
    Mask mask(n, 1);
    if (cfg.mode == TrainMode::diff_bps || cfg.mode == TrainMode::hard_bps) {
        cpe::BpsConfig bcfg = cfg.bps;
        bcfg.mode = cfg.mode == TrainMode::diff_bps ? cpe::BpsMode::soft : cpe::BpsMode::hard;
        bcfg.temperature = temperature;
        auto out = cpe::bps(z, points, cfg.sequence_length, bcfg);
        rx_in = out.corrected;
        mask = std::move(out.valid_mask);
        if (cfg.mode == TrainMode::hard_bps && cfg.align_rotation) {
            const auto angles = alignment_angles(to_complex(x), to_complex(rx_in), mask, cfg.sequence_length);
            rx_in = ad::rotate(rx_in, ad::Var::constant(n, 1, angles));
        }
    }
    const auto probs = rx_forward(rx_in, rx);
    return bce_loss(probs, labels_to_bits(batch.labels, cfg.order), mask);
}

TxParams initial_tx(const TrainConfig& cfg) {
    if (cfg.tx_init == TxInit::gray_qam) {
        return TxParams::from_constellation(gray_qam(cfg.order));
    }
    channel::RngStream rng(cfg.seed, channel::stream_id(0, tx_init_stream));
    return TxParams::random(cfg.order, rng);
}

RxParams initial_rx(const TrainConfig& cfg) {
    channel::RngStream rng(cfg.seed, channel::stream_id(0, rx_init_stream));
    return RxParams::init(cfg.order, rng, cfg.rx_hidden);
}

TrainResult train_from(const TrainConfig& cfg, TxParams tx, RxParams rx, const ProgressCallback& progress) {
    cfg.validate();
    std::vector<ad::Var> params = rx.parameters();
    if (!cfg.freeze_tx) {
        params.push_back(tx.weights);
    }
    Adam optimizer(params, AdamOptions{.learning_rate = cfg.learning_rate});

    TrainResult result{tx.crystallize(), rx, {}};
    result.history.reserve(cfg.steps);
    const std::size_t last = cfg.steps > 0 ? cfg.steps - 1 : 0;
    for (std::size_t step = 0; step < cfg.steps; ++step) {
        const double t = cpe::temperature_schedule(step, last, cfg.temperature_start, cfg.temperature_end);
        const auto batch = draw_batch(cfg, step);
        optimizer.zero_grad();
        const auto loss = batch_loss(cfg, tx, rx, batch, t);
        if (!std::isfinite(loss.item())) {
            throw NumericalError("training diverged: loss is not finite at step " + std::to_string(step));
        }
        loss.backward();
        try {
            optimizer.step();
        } catch (const NumericalError& e) {
            throw NumericalError("training diverged at step " + std::to_string(step) + ": " + e.what());
        }
        LossRecord rec{step, loss.item(), t};
        result.history.push_back(rec);
        if (progress) {
            progress(rec);
        }
    }
    result.constellation = tx.crystallize();
    result.rx = rx;
    return result;
}

TrainResult train(const TrainConfig& cfg, const ProgressCallback& progress) {
    cfg.validate();
    return train_from(cfg, initial_tx(cfg), initial_rx(cfg), progress);
}

TrainResult train_rpn_reference(TrainConfig cfg, const ProgressCallback& progress) {
    cfg.mode = TrainMode::rpn;
    cfg.channel.kind = channel::ChannelKind::rpn_surrogate;
    return train(cfg, progress);
}

double moving_average_loss(const std::vector<LossRecord>& history, std::size_t end, std::size_t window) {
    if (end > history.size() || window == 0 || window > end) {
        throw ConfigError("moving_average_loss: window out of range");
    }
    double acc = 0.0;
    for (std::size_t i = end - window; i < end; ++i) {
        acc += history[i].loss;
    }
    return acc / static_cast<double>(window);
}

} // namespace dbps::learn
