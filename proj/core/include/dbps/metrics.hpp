#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "dbps/autoencoder.hpp"
#include "dbps/constellation.hpp"
#include "dbps/cpe.hpp"
#include "dbps/types.hpp"

namespace dbps::metrics {

/// Bit-wise mutual information in bit/symbol:
/// m - sum_i mean_k[-log2 P(b_i = true bit | y_k)], over rows with mask != 0.
/// Not clamped at zero.
double bmi_from_posteriors(const RealMatrix& bits, const RealMatrix& probs, const Mask& mask);

/// Masked mean binary cross-entropy in nats (same clamp as training).
double bce_nats(const RealMatrix& bits, const RealMatrix& probs, const Mask& mask);

/// Hard decisions at 0.5; p = 0.5 decides 0.
double ber(const RealMatrix& bits, const RealMatrix& probs, const Mask& mask);

struct OracleResult {
    double bmi = 0.0;
    double bmi_ci95 = 0.0; ///< half-width of the 95 % confidence interval
    double mi = 0.0;       ///< symbol-wise mutual information
    double mi_ci95 = 0.0;
    std::size_t samples = 0;
};

/// Monte-Carlo BMI (and MI) on the AWGN channel with exact posteriors.
OracleResult awgn_bmi_oracle(const Constellation& c, double snr_db, std::size_t samples, std::uint64_t seed);

/// Maps received symbols to per-bit posteriors P(b_i = 1 | y).
class Demapper {
public:
    virtual ~Demapper() = default;
    virtual int bits() const = 0;
    virtual RealMatrix posteriors(std::span<const cplx> y) const = 0;
};

class NetworkDemapper final : public Demapper {
public:
    explicit NetworkDemapper(learn::RxParams rx) : rx_(std::move(rx)) {}
    int bits() const override { return rx_.bits(); }
    RealMatrix posteriors(std::span<const cplx> y) const override { return rx_.posteriors(y); }

private:
    learn::RxParams rx_;
};

/// Exact bit posteriors under the AWGN likelihood at a given SNR.
class ExactDemapper final : public Demapper {
public:
    ExactDemapper(Constellation c, double snr_db);
    int bits() const override { return c_.order(); }
    RealMatrix posteriors(std::span<const cplx> y) const override;

private:
    Constellation c_;
    double noise_variance_;
};

struct ValidationGrid {
    std::vector<double> snr_db{15.0, 17.0, 20.0};
    std::vector<double> linewidth_hz;
    std::size_t runs = 100;
    std::size_t symbols_per_run = 100000;
    double symbol_rate_baud = 32e9;

    /// `count` equally spaced values from lo to hi inclusive.
    static std::vector<double> linspace(double lo, double hi, std::size_t count);
    void validate() const;
};

struct ValidateOptions {
    cpe::BpsConfig bps; ///< mode is forced to hard
    std::uint64_t seed = 1;
    std::size_t jobs = 1;
    /// Remove one global rotation per run, chosen by correlating the BPS
    /// output with the transmitted symbols over the first `align_symbols`
    /// valid positions. For symmetric baselines such as square QAM.
    bool align_rotation = false;
    std::size_t align_symbols = 1000;
};

struct EvalRecord {
    double snr_db = 0.0;
    double linewidth_hz = 0.0;
    double bmi_mean = 0.0;
    double bmi_std = 0.0;
    double ber_mean = 0.0;
    std::size_t runs = 0;
    std::size_t symbols_per_run = 0;
    /// Mean count per run of consecutive phase estimates jumping by more than pi/4.
    double slip_events_mean = 0.0;
};

struct RunResult {
    double bmi = 0.0;
    double ber = 0.0;
    std::size_t slip_events = 0;
};

/// One validation run: random bits, AWGN, Wiener phase noise, hard BPS,
/// demapping, metrics over the valid positions.
RunResult validation_run(const Constellation& c, const Demapper& demapper, double snr_db, double linewidth_hz,
                         double symbol_rate_baud, std::size_t symbols, const ValidateOptions& options,
                         std::uint64_t run_id);

/// Every (snr, linewidth) grid point, `runs` runs each, on up to
/// options.jobs threads. Results do not depend on the thread count.
std::vector<EvalRecord> validate(const Constellation& c, const Demapper& demapper, const ValidationGrid& grid,
                                 const ValidateOptions& options);

/// Space-separated "linewidth mean stddev" table for the records at one SNR.
std::string format_bmi_table(std::span<const EvalRecord> records, double snr_db);

/// Writes <dir>/<prefix>_<snr>dB.txt per SNR and returns the paths.
std::vector<std::filesystem::path> write_bmi_tables(const std::filesystem::path& dir, const std::string& prefix,
                                                    std::span<const EvalRecord> records);

/// File-name fragment for an SNR value, "17" or "17.5".
std::string snr_tag(double snr_db);

} // namespace dbps::metrics
