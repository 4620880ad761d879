#pragma once

// Blind phase search expressed on the differentiation graph. The forward
// values agree with the plain functions in cpe.hpp; the hand-written backward
// passes make the soft variant trainable end to end.

#include <span>

#include "dbps/autodiff.hpp"
#include "dbps/cpe.hpp"

namespace dbps::cpe {

/// z: n x 2 received symbols, points: M x 2 constellation. Returns n x L
/// distances. The nearest-point choice per (k, b) is held constant when
/// differentiating.
ad::Var distances(const ad::Var& z, const ad::Var& points, std::span<const double> phases);

/// Window sums over consecutive blocks of seq_len rows (one block per
/// sequence); windows never cross block boundaries.
ad::Var window_sums(const ad::Var& d, std::size_t half_window, std::size_t seq_len);

/// Row-wise softmin with temperature t.
ad::Var softmin_rows(const ad::Var& s, double t);

/// Expected test phase per row: softmin_rows(s, t) * phases.
ad::Var soft_select(const ad::Var& s, std::span<const double> phases, double t);

struct BpsGraphOutput {
    ad::Var corrected;       ///< n x 2
    ad::Var phase_estimates; ///< n x 1, unwrapped per sequence
    Mask valid_mask;
};

/// BPS over `z.rows() / seq_len` stacked sequences. Soft mode is
/// differentiable in z and points; unwrap offsets are constants. Hard mode
/// treats the phase estimates as constants, so only the derotation of z
/// carries a gradient.
BpsGraphOutput bps(const ad::Var& z, const ad::Var& points, std::size_t seq_len, const BpsConfig& cfg);

} // namespace dbps::cpe
