#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "dbps/types.hpp"

namespace dbps::channel {

enum class ChannelKind { awgn_only, wiener, rpn_surrogate };

std::string_view to_string(ChannelKind kind);
ChannelKind parse_channel_kind(std::string_view name);

struct ChannelConfig {
    double snr_db = 17.0;
    double linewidth_hz = 100e3;
    double symbol_rate_baud = 32e9;
    double rpn_sigma = 0.005;
    ChannelKind kind = ChannelKind::wiener;

    /// sigma_n^2 = 10^(-snr_db/10); zero for snr_db = +inf.
    double noise_variance() const;
    /// sigma_phi^2 = 2 pi linewidth / symbol_rate.
    double phase_variance() const;

    /// Throws ConfigError naming the offending field.
    void validate() const;
};

/// A reproducible random stream. Identical (seed, stream_id) pairs produce
/// identical draws; different stream ids seed independent generators, so
/// concurrent runs each take their own id.
class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint64_t stream_id);

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t stream_id() const noexcept { return stream_id_; }

    double normal() { return normal_(engine_); }
    double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }
    /// Uniform integer in [0, n).
    std::uint32_t uniform_index(std::uint32_t n) {
        return std::uniform_int_distribution<std::uint32_t>(0, n - 1)(engine_);
    }

    std::mt19937_64& engine() noexcept { return engine_; }

private:
    std::uint64_t seed_;
    std::uint64_t stream_id_;
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

/// Stream id for (run, purpose) pairs; keeps purposes of one run disjoint.
constexpr std::uint64_t stream_id(std::uint64_t run, std::uint64_t purpose) noexcept { return (run << 8) | (purpose & 0xff); }

/// Wiener increment variance 2 pi linewidth / symbol_rate in rad^2.
double wiener_variance(double linewidth_hz, double symbol_rate_baud);

/// 10^(-snr_db/10); snr_db = +inf gives 0.
double noise_variance(double snr_db);

/// count samples of CN(0, sigma_n^2).
ComplexSequence complex_noise(std::size_t count, double snr_db, RngStream& rng);

/// x + n with n ~ CN(0, 10^(-snr_db/10)).
ComplexSequence awgn(std::span<const cplx> x, double snr_db, RngStream& rng);

/// phi[0] = 0, phi[k] = phi[k-1] + N(0, variance). Not wrapped.
std::vector<double> wiener_phase(std::size_t count, double variance, RngStream& rng);

/// x[k] * exp(j phi[k]).
ComplexSequence apply_phase(std::span<const cplx> x, std::span<const double> phi);

/// Memoryless Gaussian phase rotation, theta_k ~ N(0, sigma^2) i.i.d.
std::vector<double> rpn_phase(std::size_t count, double sigma, RngStream& rng);
ComplexSequence rpn(std::span<const cplx> x, double sigma, RngStream& rng);

} // namespace dbps::channel
