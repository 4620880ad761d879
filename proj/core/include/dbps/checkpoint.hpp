#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "dbps/autoencoder.hpp"
#include "dbps/train.hpp"

namespace dbps::learn {

inline constexpr std::string_view rx_format_tag = "dbps-rx";
inline constexpr int rx_format_version = 1;

/// JSON document {"format": "dbps-rx", "version": 1, "bits": m, "hidden": h,
/// "layers": [{"inputs", "outputs", "weight": [...], "bias": [...]}, ...]}.
/// Doubles are written in shortest round-trip form.
std::string serialize_rx(const RxParams& rx);
RxParams parse_rx(std::string_view text);

void save_rx(const std::filesystem::path& path, const RxParams& rx);
RxParams load_rx(const std::filesystem::path& path);

/// "step,loss,temperature" CSV.
std::string format_loss_csv(const std::vector<LossRecord>& history);
void save_loss_csv(const std::filesystem::path& path, const std::vector<LossRecord>& history);

} // namespace dbps::learn
