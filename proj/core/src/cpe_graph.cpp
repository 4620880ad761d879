#include "dbps/cpe_graph.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "dbps/error.hpp"

namespace dbps::cpe {

namespace {

ComplexSequence to_complex(std::span<const double> interleaved) {
    ComplexSequence out(interleaved.size() / 2);
    for (std::size_t k = 0; k < out.size(); ++k) {
        out[k] = {interleaved[2 * k], interleaved[2 * k + 1]};
    }
    return out;
}

void check_blocks(std::size_t rows, std::size_t seq_len, std::size_t half_window) {
    if (seq_len == 0 || rows % seq_len != 0) {
        throw ShapeError("BPS graph: " + std::to_string(rows) + " rows are not a whole number of sequences of length " +
                         std::to_string(seq_len));
    }
    if (seq_len <= 2 * half_window) {
        throw ShapeError("BPS graph: sequence length " + std::to_string(seq_len) + " is not longer than 2N = " +
                         std::to_string(2 * half_window));
    }
}

} // namespace

ad::Var distances(const ad::Var& z, const ad::Var& points, std::span<const double> phases) {
    if (z.cols() != 2 || points.cols() != 2) {
        throw ShapeError("BPS distances expect n x 2 symbols and M x 2 points");
    }
    const std::size_t n = z.rows();
    const std::size_t L = phases.size();
    const auto zc = to_complex(z.value());
    const auto pc = to_complex(points.value());
    std::vector<double> out(n * L);
    const bool needs_grad = z.requires_grad() || points.requires_grad();
    std::vector<std::uint8_t> nearest(needs_grad ? n * L : 0);
    distances_into(zc, pc, phases, out, nearest);

    const auto rot = rotation_factors(phases);
    std::vector<double> cs(2 * L);
    for (std::size_t b = 0; b < L; ++b) {
        cs[2 * b] = rot[b].real();
        cs[2 * b + 1] = rot[b].imag();
    }
    const auto& zn = z.node();
    const auto& pn = points.node();
    return ad::Var::make(n, L, std::move(out), {zn, pn},
                         [zn, pn, L, cs = std::move(cs), nearest = std::move(nearest)](ad::Node& self) {
                             const std::size_t n = zn->rows;
                             const auto& g = self.grad;
                             std::vector<double>* gz = zn->requires_grad ? &zn->grad_buffer() : nullptr;
                             std::vector<double>* gp = pn->requires_grad ? &pn->grad_buffer() : nullptr;
                             for (std::size_t k = 0; k < n; ++k) {
                                 const double zr = zn->value[2 * k];
                                 const double zi = zn->value[2 * k + 1];
                                 double acc_r = 0.0;
                                 double acc_i = 0.0;
                                 for (std::size_t b = 0; b < L; ++b) {
                                     const double gk = g[k * L + b];
                                     if (gk == 0.0) {
                                         continue;
                                     }
                                     const double c = cs[2 * b];
                                     const double s = cs[2 * b + 1];
                                     const std::size_t i = nearest[k * L + b];
                                     // e = z e^{j phi_b} - p_i ; d = |e|^2
                                     const double er = zr * c - zi * s - pn->value[2 * i];
                                     const double ei = zr * s + zi * c - pn->value[2 * i + 1];
                                     const double tr = 2.0 * gk * er;
                                     const double ti = 2.0 * gk * ei;
                                     // dd/dz = 2 e e^{-j phi_b}
                                     acc_r += tr * c + ti * s;
                                     acc_i += -tr * s + ti * c;
                                     if (gp) {
                                         (*gp)[2 * i] -= tr;
                                         (*gp)[2 * i + 1] -= ti;
                                     }
                                 }
                                 if (gz) {
                                     (*gz)[2 * k] += acc_r;
                                     (*gz)[2 * k + 1] += acc_i;
                                 }
                             }
                         });
}

ad::Var window_sums(const ad::Var& d, std::size_t half_window, std::size_t seq_len) {
    if (seq_len == 0 || d.rows() % seq_len != 0) {
        throw ShapeError("window_sums: rows are not a whole number of sequences");
    }
    const std::size_t cols = d.cols();
    const std::size_t blocks = d.rows() / seq_len;
    std::vector<double> out(d.size());
    for (std::size_t blk = 0; blk < blocks; ++blk) {
        const std::size_t off = blk * seq_len * cols;
        window_sums_into(d.value().data() + off, out.data() + off, seq_len, cols, half_window);
    }
    const auto& dn = d.node();
    return ad::Var::make(d.rows(), cols, std::move(out), {dn}, [dn, half_window, seq_len, blocks](ad::Node& self) {
        // The truncated window operator is symmetric, so its adjoint is itself.
        std::vector<double> tmp(self.grad.size());
        const std::size_t cols = self.cols;
        for (std::size_t blk = 0; blk < blocks; ++blk) {
            const std::size_t off = blk * seq_len * cols;
            window_sums_into(self.grad.data() + off, tmp.data() + off, seq_len, cols, half_window);
        }
        auto& gd = dn->grad_buffer();
        for (std::size_t i = 0; i < tmp.size(); ++i) {
            gd[i] += tmp[i];
        }
    });
}

ad::Var softmin_rows(const ad::Var& s, double t) {
    std::vector<double> w(s.value().begin(), s.value().end());
    softmin_rows_inplace(w.data(), s.rows(), s.cols(), t);
    const auto& sn = s.node();
    return ad::Var::make(s.rows(), s.cols(), std::move(w), {sn}, [sn, t](ad::Node& self) {
        auto& gs = sn->grad_buffer();
        const std::size_t cols = self.cols;
        const double inv_t = 1.0 / t;
        for (std::size_t k = 0; k < self.rows; ++k) {
            const double* w = self.value.data() + k * cols;
            const double* g = self.grad.data() + k * cols;
            double dot = 0.0;
            for (std::size_t b = 0; b < cols; ++b) {
                dot += w[b] * g[b];
            }
            double* out = gs.data() + k * cols;
            for (std::size_t b = 0; b < cols; ++b) {
                out[b] -= inv_t * w[b] * (g[b] - dot);
            }
        }
    });
}

ad::Var soft_select(const ad::Var& s, std::span<const double> phases, double t) {
    if (s.cols() != phases.size()) {
        throw ShapeError("soft_select: column count does not match the test phase count");
    }
    auto column = ad::Var::constant(phases.size(), 1, std::vector<double>(phases.begin(), phases.end()));
    return ad::matmul(softmin_rows(s, t), column);
}

BpsGraphOutput bps(const ad::Var& z, const ad::Var& points, std::size_t seq_len, const BpsConfig& cfg) {
    cfg.validate();
    const std::size_t N = static_cast<std::size_t>(cfg.half_window);
    check_blocks(z.rows(), seq_len, N);
    const auto phases = test_phase_grid(cfg.num_test_phases);
    const std::size_t n = z.rows();
    const std::size_t blocks = n / seq_len;

    ad::Var raw;
    if (cfg.mode == BpsMode::soft) {
        raw = soft_select(window_sums(distances(z, points, phases), N, seq_len), phases, cfg.temperature);
    } else {
        const auto zc = to_complex(z.value());
        const auto pc = to_complex(points.value());
        RealMatrix d(n, phases.size());
        distances_into(zc, pc, phases, d.data);
        RealMatrix s(n, phases.size());
        for (std::size_t blk = 0; blk < blocks; ++blk) {
            const std::size_t off = blk * seq_len * phases.size();
            window_sums_into(d.data.data() + off, s.data.data() + off, seq_len, phases.size(), N);
        }
        auto est = hard_select(s, phases);
        raw = ad::Var::constant(n, 1, std::move(est));
    }

    const double period =
        2.0 * std::numbers::pi / static_cast<double>(rotational_symmetry(to_complex(points.value())));
    std::vector<double> offsets(n);
    for (std::size_t blk = 0; blk < blocks; ++blk) {
        const auto seg = raw.value().subspan(blk * seq_len, seq_len);
        const auto off = unwrap_offsets(seg, period);
        std::copy(off.begin(), off.end(), offsets.begin() + static_cast<std::ptrdiff_t>(blk * seq_len));
    }
    BpsGraphOutput out;
    out.phase_estimates = raw + ad::Var::constant(n, 1, std::move(offsets));
    out.corrected = ad::rotate(z, out.phase_estimates);
    out.valid_mask.assign(n, 1);
    for (std::size_t blk = 0; blk < blocks; ++blk) {
        for (std::size_t k = 0; k < N; ++k) {
            out.valid_mask[blk * seq_len + k] = 0;
            out.valid_mask[blk * seq_len + seq_len - 1 - k] = 0;
        }
    }
    return out;
}

} // namespace dbps::cpe
