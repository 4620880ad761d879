#include "dbps/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "dbps/channel.hpp"
#include "dbps/error.hpp"

namespace dbps::metrics {

namespace {

void check_shapes(const RealMatrix& bits, const RealMatrix& probs, const Mask& mask) {
    if (bits.rows != probs.rows || bits.cols != probs.cols) {
        throw ShapeError("bit and posterior matrices differ in shape (" + std::to_string(bits.rows) + "x" +
                         std::to_string(bits.cols) + " vs " + std::to_string(probs.rows) + "x" +
                         std::to_string(probs.cols) + ")");
    }
    if (mask.size() != bits.rows) {
        throw ShapeError("mask length does not match the number of symbols");
    }
}

// Sum over valid rows of -ln P(true bit), and the number of valid rows.
std::pair<double, std::size_t> total_log_loss(const RealMatrix& bits, const RealMatrix& probs, const Mask& mask) {
    check_shapes(bits, probs, mask);
    double total = 0.0;
    std::size_t used = 0;
    for (std::size_t k = 0; k < bits.rows; ++k) {
        if (!mask[k]) continue;
        ++used;
        for (std::size_t j = 0; j < bits.cols; ++j) {
            const double q = std::clamp(probs(k, j), learn::probability_floor, 1.0 - learn::probability_floor);
            total -= bits(k, j) != 0.0 ? std::log(q) : std::log1p(-q);
        }
    }
    if (used == 0) {
        throw NumericalError("metric over an empty selection");
    }
    return {total, used};
}

double log_sum_exp(const double* v, std::size_t n) {
    double hi = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) hi = std::max(hi, v[i]);
    if (hi == -std::numeric_limits<double>::infinity()) return hi;
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += std::exp(v[i] - hi);
    return hi + std::log(acc);
}

// For each bit position i: log-sum-exp of the log-likelihoods over points whose
// label has bit i equal to 1 (ones) and equal to 0 (zeros).
struct BitLogLikelihoods {
    std::vector<double> ones;
    std::vector<double> zeros;
    double all = 0.0;
};

void bit_log_likelihoods(const Constellation& c, std::span<const double> loglik, BitLogLikelihoods& out,
                         std::vector<double>& scratch1, std::vector<double>& scratch0) {
    const int m = c.order();
    const std::size_t M = c.size();
    out.ones.resize(static_cast<std::size_t>(m));
    out.zeros.resize(static_cast<std::size_t>(m));
    out.all = log_sum_exp(loglik.data(), M);
    for (int i = 0; i < m; ++i) {
        scratch1.clear();
        scratch0.clear();
        for (std::size_t j = 0; j < M; ++j) {
            (c.bit(j, i) ? scratch1 : scratch0).push_back(loglik[j]);
        }
        out.ones[static_cast<std::size_t>(i)] = log_sum_exp(scratch1.data(), scratch1.size());
        out.zeros[static_cast<std::size_t>(i)] = log_sum_exp(scratch0.data(), scratch0.size());
    }
}

} // namespace

double bce_nats(const RealMatrix& bits, const RealMatrix& probs, const Mask& mask) {
    const auto [total, used] = total_log_loss(bits, probs, mask);
    return total / static_cast<double>(used * bits.cols);
}

double bmi_from_posteriors(const RealMatrix& bits, const RealMatrix& probs, const Mask& mask) {
    const auto [total, used] = total_log_loss(bits, probs, mask);
    const double m = static_cast<double>(bits.cols);
    return m - total / (static_cast<double>(used) * std::numbers::ln2);
}

double ber(const RealMatrix& bits, const RealMatrix& probs, const Mask& mask) {
    check_shapes(bits, probs, mask);
    std::size_t errors = 0;
    std::size_t used = 0;
    for (std::size_t k = 0; k < bits.rows; ++k) {
        if (!mask[k]) continue;
        ++used;
        for (std::size_t j = 0; j < bits.cols; ++j) {
            const int decided = probs(k, j) > 0.5 ? 1 : 0;
            errors += decided != static_cast<int>(bits(k, j)) ? 1 : 0;
        }
    }
    if (used == 0) {
        throw NumericalError("BER over an empty selection");
    }
    return static_cast<double>(errors) / static_cast<double>(used * bits.cols);
}

OracleResult awgn_bmi_oracle(const Constellation& c, double snr_db, std::size_t samples, std::uint64_t seed) {
    if (samples < 2) {
        throw ConfigError("oracle needs at least 2 samples");
    }
    const int m = c.order();
    const std::size_t M = c.size();
    const double var = channel::noise_variance(snr_db);
    OracleResult res;
    res.samples = samples;
    if (var == 0.0) {
        res.bmi = res.mi = static_cast<double>(m);
        return res;
    }
    channel::RngStream sym_rng(seed, channel::stream_id(0, 1));
    channel::RngStream noise_rng(seed, channel::stream_id(0, 2));
    const double sigma = std::sqrt(var / 2.0);
    const auto pts = c.points();

    std::vector<double> loglik(M);
    std::vector<double> s1, s0;
    BitLogLikelihoods bl;
    double bmi_sum = 0.0, bmi_sq = 0.0, mi_sum = 0.0, mi_sq = 0.0;
    for (std::size_t n = 0; n < samples; ++n) {
        const std::size_t tx = sym_rng.uniform_index(static_cast<std::uint32_t>(M));
        const double nr = noise_rng.normal();
        const double ni = noise_rng.normal();
        const cplx y = pts[tx] + cplx(sigma * nr, sigma * ni);
        for (std::size_t j = 0; j < M; ++j) {
            loglik[j] = -std::norm(y - pts[j]) / var;
        }
        bit_log_likelihoods(c, loglik, bl, s1, s0);
        double info = static_cast<double>(m);
        for (int i = 0; i < m; ++i) {
            const double lp = (c.bit(tx, i) ? bl.ones[static_cast<std::size_t>(i)] : bl.zeros[static_cast<std::size_t>(i)]) - bl.all;
            info += lp / std::numbers::ln2;
        }
        const double sym_info = static_cast<double>(m) + (loglik[tx] - bl.all) / std::numbers::ln2;
        bmi_sum += info;
        bmi_sq += info * info;
        mi_sum += sym_info;
        mi_sq += sym_info * sym_info;
    }
    const double nn = static_cast<double>(samples);
    auto ci = [nn](double sum, double sq) {
        const double mean = sum / nn;
        const double var_s = std::max(0.0, (sq - nn * mean * mean) / (nn - 1.0));
        return 1.96 * std::sqrt(var_s / nn);
    };
    res.bmi = bmi_sum / nn;
    res.mi = mi_sum / nn;
    res.bmi_ci95 = ci(bmi_sum, bmi_sq);
    res.mi_ci95 = ci(mi_sum, mi_sq);
    return res;
}

ExactDemapper::ExactDemapper(Constellation c, double snr_db)
    : c_(std::move(c)), noise_variance_(channel::noise_variance(snr_db)) {}

RealMatrix ExactDemapper::posteriors(std::span<const cplx> y) const {
    const std::size_t M = c_.size();
    const auto m = static_cast<std::size_t>(c_.order());
    RealMatrix out(y.size(), m);
    const auto pts = c_.points();
    std::vector<double> loglik(M);
    std::vector<double> s1, s0;
    BitLogLikelihoods bl;
    for (std::size_t k = 0; k < y.size(); ++k) {
        if (noise_variance_ == 0.0) {
            const std::size_t j = nearest_symbol(y[k], pts);
            for (std::size_t i = 0; i < m; ++i) {
                out(k, i) = static_cast<double>(c_.bit(j, static_cast<int>(i)));
            }
            continue;
        }
        for (std::size_t j = 0; j < M; ++j) {
            loglik[j] = -std::norm(y[k] - pts[j]) / noise_variance_;
        }
        bit_log_likelihoods(c_, loglik, bl, s1, s0);
        for (std::size_t i = 0; i < m; ++i) {
            out(k, i) = std::exp(bl.ones[i] - bl.all);
        }
    }
    return out;
}

} // namespace dbps::metrics
