#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "dbps/metrics.hpp"
#include "dbps/train.hpp"

namespace dbps::cli {

/// Everything one experiment needs, stored as a JSON file whose keys carry
/// their units (snr_db, linewidth_hz, symbol_rate_baud, rpn_sigma_rad).
struct ExperimentConfig {
    /// order, seed, channel, BPS and training parameters.
    learn::TrainConfig train;
    metrics::ValidationGrid validation;
    bool align_rotation = false;
    std::size_t jobs = 1;
    std::filesystem::path output_dir = "runs/default";

    /// Throws ConfigError naming the offending key.
    void validate() const;

    friend bool operator==(const ExperimentConfig&, const ExperimentConfig&);
};

/// Defaults: 64 points from a Gray-QAM start, 4000 steps, 17 dB, 100 kHz at 32 GBaud,
/// L = 60, N = 60, and the validation grid {15, 17, 20} dB x ten linewidths
/// from 50 to 600 kHz. Odd orders need "tx_init": "random".
ExperimentConfig default_config();

std::string serialize_config(const ExperimentConfig& cfg);

/// Missing keys keep their defaults; unknown keys and wrong types throw
/// ConfigError with the JSON path of the key.
ExperimentConfig parse_config(std::string_view text);

ExperimentConfig load_config(const std::filesystem::path& path);
void save_config(const std::filesystem::path& path, const ExperimentConfig& cfg);

} // namespace dbps::cli
