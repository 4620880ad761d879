#pragma once

#include <cstdint>
#include <numbers>
#include <span>
#include <string_view>
#include <vector>

#include "dbps/constellation.hpp"
#include "dbps/types.hpp"

namespace dbps::cpe {

enum class BpsMode { hard, soft };

std::string_view to_string(BpsMode mode);
BpsMode parse_bps_mode(std::string_view name);

struct BpsConfig {
    int num_test_phases = 60;
    /// Window is 2 * half_window + 1 symbols.
    int half_window = 60;
    BpsMode mode = BpsMode::hard;
    /// Softmin temperature, soft mode only.
    double temperature = 1.0;

    std::size_t window_length() const noexcept { return 2 * static_cast<std::size_t>(half_window) + 1; }
    void validate() const;
};

struct CpeOutput {
    ComplexSequence corrected;
    /// Unwrapped correction angles; corrected[k] = z[k] * exp(j phase_estimates[k]).
    std::vector<double> phase_estimates;
    /// 0 for the first and last half_window positions.
    Mask valid_mask;
};

/// phi_b = -pi + 2 pi (b + 1/2) / L, b = 0..L-1.
std::vector<double> test_phase_grid(int num_phases);

/// Largest number of points the distance kernel can index.
inline constexpr std::size_t max_constellation_size = 256;

/// exp(j phi_b) for every test phase. Phases a quarter turn apart get
/// factors that are exact quarter turns of each other, so quarter-turn
/// symmetric constellations produce bit-identical distance columns.
std::vector<cplx> rotation_factors(std::span<const double> phases);

/// d[k][b] = min_p |z[k] exp(j phi_b) - p|^2 written to `out` (K x L, row
/// major). When `nearest` is non-empty the minimizing point index of every
/// (k, b) is stored there as well; ties resolve to the lowest index.
void distances_into(std::span<const cplx> z, std::span<const cplx> points, std::span<const double> phases,
                    std::span<double> out, std::span<std::uint8_t> nearest = {});

RealMatrix distances(std::span<const cplx> z, const Constellation& c, std::span<const double> phases);

/// s[k][b] = sum over |n| <= N of d[k-n][b], truncated at the edges. O(K L)
/// rolling sums over a K x L row-major block.
void window_sums_into(const double* d, double* s, std::size_t rows, std::size_t cols, std::size_t half_window);
RealMatrix window_sums(const RealMatrix& d, std::size_t half_window);

/// phases[argmin_b s[k][b]], lowest b on ties.
std::vector<double> hard_select(const RealMatrix& s, std::span<const double> phases);

/// exp(-x_i / t) / sum_j exp(-x_j / t), evaluated after subtracting min(x).
std::vector<double> softmin_t(std::span<const double> x, double t);
/// Row-wise softmin over `cols` entries, in place on a row-major block.
void softmin_rows_inplace(double* x, std::size_t rows, std::size_t cols, double t);

/// Expected test phase under the row-wise softmin weights.
std::vector<double> soft_select(const RealMatrix& s, std::span<const double> phases, double t);

/// out[k] = phi[k] + P round((out[k-1] - phi[k]) / P) with period P.
std::vector<double> unwrap(std::span<const double> phi, double period = 2.0 * std::numbers::pi);
/// The multiples of the period unwrap() adds, i.e. unwrap(phi) - phi.
std::vector<double> unwrap_offsets(std::span<const double> phi, double period = 2.0 * std::numbers::pi);

/// Largest S such that rotating the points by 2 pi / S maps the set onto
/// itself (4 for square QAM, 1 for a constellation without symmetry). BPS
/// estimates are ambiguous modulo 2 pi / S, so bps() unwraps with that period.
std::size_t rotational_symmetry(std::span<const cplx> points);

/// Full blind phase search: distances, window sums, hard or soft selection,
/// unwrap, derotation. Requires z.size() > 2 * half_window.
CpeOutput bps(std::span<const cplx> z, const Constellation& c, const BpsConfig& cfg);

/// Geometric decay t_start * (t_end / t_start)^(step / total_steps).
double temperature_schedule(std::size_t step, std::size_t total_steps, double t_start, double t_end);

} // namespace dbps::cpe
