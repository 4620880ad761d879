#include "dbps/cpe.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "dbps/error.hpp"

namespace dbps::cpe {

namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;

} // namespace

std::string_view to_string(BpsMode mode) { return mode == BpsMode::hard ? "hard" : "soft"; }

BpsMode parse_bps_mode(std::string_view name) {
    if (name == "hard") return BpsMode::hard;
    if (name == "soft") return BpsMode::soft;
    throw ConfigError("unknown BPS mode '" + std::string(name) + "' (expected hard or soft)");
}

void BpsConfig::validate() const {
    if (num_test_phases < 2) {
        throw ConfigError("bps.num_test_phases must be >= 2");
    }
    if (half_window < 0) {
        throw ConfigError("bps.half_window must be >= 0");
    }
    if (mode == BpsMode::soft && !(temperature > 0.0 && std::isfinite(temperature))) {
        throw ConfigError("bps.temperature must be finite and > 0");
    }
}

std::vector<double> test_phase_grid(int num_phases) {
    if (num_phases < 2) {
        throw ConfigError("test phase grid needs L >= 2, got " + std::to_string(num_phases));
    }
    std::vector<double> phases(static_cast<std::size_t>(num_phases));
    for (int b = 0; b < num_phases; ++b) {
        phases[static_cast<std::size_t>(b)] = -std::numbers::pi + two_pi * (b + 0.5) / num_phases;
    }
    return phases;
}

std::vector<cplx> rotation_factors(std::span<const double> phases) {
    const std::size_t L = phases.size();
    const std::size_t quarter = L % 4 == 0 ? L / 4 : 0;
    std::vector<cplx> rot(L);
    for (std::size_t b = 0; b < L; ++b) {
        if (quarter && b >= quarter && std::abs(phases[b] - phases[b - quarter] - std::numbers::pi / 2) < 1e-12) {
            const cplx r = rot[b - quarter];
            rot[b] = {-r.imag(), r.real()};
        } else {
            rot[b] = std::polar(1.0, phases[b]);
        }
    }
    return rot;
}

void distances_into(std::span<const cplx> z, std::span<const cplx> points, std::span<const double> phases,
                    std::span<double> out, std::span<std::uint8_t> nearest) {
    const std::size_t K = z.size();
    const std::size_t L = phases.size();
    const std::size_t M = points.size();
    if (out.size() != K * L) {
        throw ShapeError("distances: output buffer has wrong size");
    }
    if (!nearest.empty() && nearest.size() != K * L) {
        throw ShapeError("distances: nearest-index buffer has wrong size");
    }
    if (M == 0 || M > max_constellation_size) {
        throw ConfigError("distances: constellation size must be in 1.." + std::to_string(max_constellation_size));
    }

    // Structure of arrays so the inner loop over test phases vectorizes.
    const auto rot = rotation_factors(phases);
    std::vector<double> cos_b(L), sin_b(L), wr(L), wi(L);
    for (std::size_t b = 0; b < L; ++b) {
        cos_b[b] = rot[b].real();
        sin_b[b] = rot[b].imag();
    }
    std::vector<double> pr(M), pi(M);
    for (std::size_t i = 0; i < M; ++i) {
        pr[i] = points[i].real();
        pi[i] = points[i].imag();
    }
    std::vector<std::uint8_t> idx(L);
    const bool want_index = !nearest.empty();

    for (std::size_t k = 0; k < K; ++k) {
        const double zr = z[k].real();
        const double zi = z[k].imag();
        for (std::size_t b = 0; b < L; ++b) {
            wr[b] = zr * cos_b[b] - zi * sin_b[b];
            wi[b] = zr * sin_b[b] + zi * cos_b[b];
        }
        double* row = out.data() + k * L;
        std::fill(row, row + L, std::numeric_limits<double>::infinity());
        if (want_index) {
            std::fill(idx.begin(), idx.end(), std::uint8_t{0});
            for (std::size_t i = 0; i < M; ++i) {
                const double px = pr[i];
                const double py = pi[i];
                const auto ii = static_cast<std::uint8_t>(i);
                for (std::size_t b = 0; b < L; ++b) {
                    const double dr = wr[b] - px;
                    const double di = wi[b] - py;
                    const double d = dr * dr + di * di;
                    const bool better = d < row[b];
                    row[b] = better ? d : row[b];
                    idx[b] = better ? ii : idx[b];
                }
            }
            std::copy(idx.begin(), idx.end(), nearest.begin() + static_cast<std::ptrdiff_t>(k * L));
        } else {
            for (std::size_t i = 0; i < M; ++i) {
                const double px = pr[i];
                const double py = pi[i];
                for (std::size_t b = 0; b < L; ++b) {
                    const double dr = wr[b] - px;
                    const double di = wi[b] - py;
                    const double d = dr * dr + di * di;
                    row[b] = d < row[b] ? d : row[b];
                }
            }
        }
    }
}

RealMatrix distances(std::span<const cplx> z, const Constellation& c, std::span<const double> phases) {
    RealMatrix d(z.size(), phases.size());
    distances_into(z, c.points(), phases, d.data);
    return d;
}

void window_sums_into(const double* d, double* s, std::size_t rows, std::size_t cols, std::size_t half_window) {
    if (rows == 0) {
        return;
    }
    if (half_window == 0) {
        std::copy(d, d + rows * cols, s);
        return;
    }
    std::vector<double> acc(cols, 0.0);
    const std::size_t first = std::min(half_window, rows - 1);
    for (std::size_t j = 0; j <= first; ++j) {
        const double* r = d + j * cols;
        for (std::size_t b = 0; b < cols; ++b) {
            acc[b] += r[b];
        }
    }
    for (std::size_t k = 0; k < rows; ++k) {
        std::copy(acc.begin(), acc.end(), s + k * cols);
        const std::size_t enter = k + 1 + half_window;
        if (enter < rows) {
            const double* r = d + enter * cols;
            for (std::size_t b = 0; b < cols; ++b) {
                acc[b] += r[b];
            }
        }
        if (k >= half_window) {
            const double* r = d + (k - half_window) * cols;
            for (std::size_t b = 0; b < cols; ++b) {
                acc[b] -= r[b];
            }
        }
    }
}

RealMatrix window_sums(const RealMatrix& d, std::size_t half_window) {
    RealMatrix s(d.rows, d.cols);
    window_sums_into(d.data.data(), s.data.data(), d.rows, d.cols, half_window);
    return s;
}

std::vector<double> hard_select(const RealMatrix& s, std::span<const double> phases) {
    if (s.cols != phases.size()) {
        throw ShapeError("hard_select: matrix has " + std::to_string(s.cols) + " columns but " +
                         std::to_string(phases.size()) + " test phases");
    }
    std::vector<double> out(s.rows);
    for (std::size_t k = 0; k < s.rows; ++k) {
        const double* r = s.row(k);
        std::size_t best = 0;
        for (std::size_t b = 1; b < s.cols; ++b) {
            if (r[b] < r[best]) {
                best = b;
            }
        }
        out[k] = phases[best];
    }
    return out;
}

void softmin_rows_inplace(double* x, std::size_t rows, std::size_t cols, double t) {
    if (!(t > 0.0)) {
        throw ConfigError("softmin temperature must be > 0");
    }
    const double inv_t = 1.0 / t;
    for (std::size_t k = 0; k < rows; ++k) {
        double* r = x + k * cols;
        double lo = std::numeric_limits<double>::infinity();
        for (std::size_t b = 0; b < cols; ++b) {
            if (std::isnan(r[b])) {
                throw NumericalError("softmin: NaN input in row " + std::to_string(k));
            }
            lo = std::min(lo, r[b]);
        }
        double total = 0.0;
        for (std::size_t b = 0; b < cols; ++b) {
            r[b] = std::exp(-(r[b] - lo) * inv_t);
            total += r[b];
        }
        const double inv_total = 1.0 / total;
        for (std::size_t b = 0; b < cols; ++b) {
            r[b] *= inv_total;
        }
    }
}

std::vector<double> softmin_t(std::span<const double> x, double t) {
    std::vector<double> out(x.begin(), x.end());
    if (!out.empty()) {
        softmin_rows_inplace(out.data(), 1, out.size(), t);
    }
    return out;
}

std::vector<double> soft_select(const RealMatrix& s, std::span<const double> phases, double t) {
    if (s.cols != phases.size()) {
        throw ShapeError("soft_select: matrix has " + std::to_string(s.cols) + " columns but " +
                         std::to_string(phases.size()) + " test phases");
    }
    RealMatrix w = s;
    softmin_rows_inplace(w.data.data(), w.rows, w.cols, t);
    std::vector<double> out(s.rows, 0.0);
    for (std::size_t k = 0; k < s.rows; ++k) {
        const double* r = w.row(k);
        double acc = 0.0;
        for (std::size_t b = 0; b < s.cols; ++b) {
            acc += phases[b] * r[b];
        }
        out[k] = acc;
    }
    return out;
}

std::size_t rotational_symmetry(std::span<const cplx> points) {
    const std::size_t M = points.size();
    for (std::size_t order = M; order >= 2; order /= 2) {
        if (M % order != 0) continue;
        const cplx rot = std::polar(1.0, two_pi / static_cast<double>(order));
        bool closed = true;
        for (std::size_t i = 0; i < M && closed; ++i) {
            const cplx q = points[i] * rot;
            closed = std::any_of(points.begin(), points.end(), [&](cplx p) { return std::abs(p - q) < 1e-12; });
        }
        if (closed) return order;
    }
    return 1;
}

std::vector<double> unwrap_offsets(std::span<const double> phi, double period) {
    if (!(period > 0.0)) {
        throw ConfigError("unwrap period must be > 0");
    }
    std::vector<double> offset(phi.size(), 0.0);
    if (phi.empty()) {
        return offset;
    }
    double prev = phi[0];
    for (std::size_t k = 1; k < phi.size(); ++k) {
        offset[k] = period * std::round((prev - phi[k]) / period);
        prev = phi[k] + offset[k];
    }
    return offset;
}

std::vector<double> unwrap(std::span<const double> phi, double period) {
    auto out = unwrap_offsets(phi, period);
    for (std::size_t k = 0; k < phi.size(); ++k) {
        out[k] += phi[k];
    }
    return out;
}

CpeOutput bps(std::span<const cplx> z, const Constellation& c, const BpsConfig& cfg) {
    cfg.validate();
    const std::size_t N = static_cast<std::size_t>(cfg.half_window);
    if (z.size() <= 2 * N) {
        throw ShapeError("bps: sequence of " + std::to_string(z.size()) + " symbols is not longer than 2N = " +
                         std::to_string(2 * N));
    }
    const auto phases = test_phase_grid(cfg.num_test_phases);
    const RealMatrix d = distances(z, c, phases);
    const RealMatrix s = window_sums(d, N);
    const auto raw = cfg.mode == BpsMode::hard ? hard_select(s, phases) : soft_select(s, phases, cfg.temperature);

    CpeOutput out;
    out.phase_estimates = unwrap(raw, two_pi / static_cast<double>(rotational_symmetry(c.points())));
    out.corrected.resize(z.size());
    for (std::size_t k = 0; k < z.size(); ++k) {
        out.corrected[k] = z[k] * std::polar(1.0, out.phase_estimates[k]);
    }
    out.valid_mask.assign(z.size(), 1);
    for (std::size_t k = 0; k < N; ++k) {
        out.valid_mask[k] = 0;
        out.valid_mask[z.size() - 1 - k] = 0;
    }
    return out;
}

double temperature_schedule(std::size_t step, std::size_t total_steps, double t_start, double t_end) {
    if (!(t_end > 0.0)) {
        throw ConfigError("temperature schedule end must be > 0");
    }
    if (!(t_start >= t_end)) {
        throw ConfigError("temperature schedule must not increase (t_start >= t_end)");
    }
    if (step > total_steps) {
        throw ConfigError("temperature schedule step beyond total_steps");
    }
    if (total_steps == 0) {
        return t_start;
    }
    if (step == total_steps) {
        return t_end;
    }
    const double frac = static_cast<double>(step) / static_cast<double>(total_steps);
    return t_start * std::pow(t_end / t_start, frac);
}

} // namespace dbps::cpe
