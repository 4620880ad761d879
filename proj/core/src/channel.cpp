#include "dbps/channel.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "dbps/error.hpp"

namespace dbps::channel {

std::string_view to_string(ChannelKind kind) {
    switch (kind) {
    case ChannelKind::awgn_only: return "awgn_only";
    case ChannelKind::wiener: return "wiener";
    case ChannelKind::rpn_surrogate: return "rpn_surrogate";
    }
    return "unknown";
}

ChannelKind parse_channel_kind(std::string_view name) {
    if (name == "awgn_only") return ChannelKind::awgn_only;
    if (name == "wiener") return ChannelKind::wiener;
    if (name == "rpn_surrogate") return ChannelKind::rpn_surrogate;
    throw ConfigError("unknown channel kind '" + std::string(name) + "' (expected awgn_only, wiener or rpn_surrogate)");
}

double ChannelConfig::noise_variance() const { return channel::noise_variance(snr_db); }

double ChannelConfig::phase_variance() const { return wiener_variance(linewidth_hz, symbol_rate_baud); }

void ChannelConfig::validate() const {
    if (std::isnan(snr_db) || snr_db == -std::numeric_limits<double>::infinity()) {
        throw ConfigError("channel.snr_db must be a number or +inf");
    }
    if (!(linewidth_hz >= 0.0) || !std::isfinite(linewidth_hz)) {
        throw ConfigError("channel.linewidth_hz must be finite and >= 0");
    }
    if (!(symbol_rate_baud > 0.0) || !std::isfinite(symbol_rate_baud)) {
        throw ConfigError("channel.symbol_rate_baud must be finite and > 0");
    }
    if (!(rpn_sigma >= 0.0) || !std::isfinite(rpn_sigma)) {
        throw ConfigError("channel.rpn_sigma must be finite and >= 0");
    }
}

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id) : seed_(seed), stream_id_(stream_id) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream_id), static_cast<std::uint32_t>(stream_id >> 32),
                      0x9e3779b9u};
    engine_.seed(seq);
}

double wiener_variance(double linewidth_hz, double symbol_rate_baud) {
    if (!(symbol_rate_baud > 0.0)) {
        throw ConfigError("symbol rate must be positive");
    }
    if (!(linewidth_hz >= 0.0)) {
        throw ConfigError("linewidth must be non-negative");
    }
    return 2.0 * std::numbers::pi * linewidth_hz / symbol_rate_baud;
}

double noise_variance(double snr_db) {
    if (snr_db == std::numeric_limits<double>::infinity()) {
        return 0.0;
    }
    return std::pow(10.0, -snr_db / 10.0);
}

ComplexSequence complex_noise(std::size_t count, double snr_db, RngStream& rng) {
    ComplexSequence n(count);
    const double variance = noise_variance(snr_db);
    if (variance == 0.0) {
        return n;
    }
    const double sigma = std::sqrt(variance / 2.0);
    for (auto& v : n) {
        const double re = rng.normal();
        const double im = rng.normal();
        v = {sigma * re, sigma * im};
    }
    return n;
}

ComplexSequence awgn(std::span<const cplx> x, double snr_db, RngStream& rng) {
    ComplexSequence out = complex_noise(x.size(), snr_db, rng);
    for (std::size_t k = 0; k < x.size(); ++k) {
        out[k] += x[k];
    }
    return out;
}

std::vector<double> wiener_phase(std::size_t count, double variance, RngStream& rng) {
    if (count == 0) {
        throw ConfigError("wiener_phase needs count >= 1");
    }
    if (!(variance >= 0.0)) {
        throw ConfigError("phase noise variance must be non-negative");
    }
    std::vector<double> phi(count, 0.0);
    if (variance == 0.0) {
        return phi;
    }
    const double sigma = std::sqrt(variance);
    for (std::size_t k = 1; k < count; ++k) {
        phi[k] = phi[k - 1] + sigma * rng.normal();
    }
    return phi;
}

ComplexSequence apply_phase(std::span<const cplx> x, std::span<const double> phi) {
    if (x.size() != phi.size()) {
        throw ShapeError("apply_phase: " + std::to_string(x.size()) + " symbols but " + std::to_string(phi.size()) +
                         " phases");
    }
    ComplexSequence out(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) {
        out[k] = x[k] * std::polar(1.0, phi[k]);
    }
    return out;
}

std::vector<double> rpn_phase(std::size_t count, double sigma, RngStream& rng) {
    if (!(sigma >= 0.0)) {
        throw ConfigError("RPN sigma must be non-negative");
    }
    std::vector<double> theta(count, 0.0);
    if (sigma == 0.0) {
        return theta;
    }
    for (auto& t : theta) {
        t = sigma * rng.normal();
    }
    return theta;
}

ComplexSequence rpn(std::span<const cplx> x, double sigma, RngStream& rng) {
    if (sigma == 0.0) {
        return ComplexSequence(x.begin(), x.end());
    }
    return apply_phase(x, rpn_phase(x.size(), sigma, rng));
}

} // namespace dbps::channel
