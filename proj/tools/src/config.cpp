#include "dbps_cli/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "dbps/error.hpp"

namespace dbps::cli {

using nlohmann::json;

namespace {

// Reads `key` from `obj` into `out` when present; `path` prefixes messages.
template <typename T>
void read(const json& obj, const char* key, T& out, const std::string& path) {
    const auto it = obj.find(key);
    if (it == obj.end()) return;
    try {
        out = it->get<T>();
    } catch (const json::exception&) {
        throw ConfigError(path + "." + key + " has the wrong type");
    }
}

void reject_unknown(const json& obj, std::initializer_list<std::string_view> known, const std::string& path) {
    if (!obj.is_object()) {
        throw ConfigError(path + " must be an object");
    }
    for (const auto& [key, _] : obj.items()) {
        if (std::find(known.begin(), known.end(), key) == known.end()) {
            throw ConfigError("unknown key " + path + "." + key);
        }
    }
}

const json& section(const json& root, const char* key, const json& empty) {
    const auto it = root.find(key);
    return it == root.end() ? empty : *it;
}

template <typename Parse>
auto read_enum(const json& obj, const char* key, const std::string& path, Parse parse, decltype(parse("")) fallback) {
    std::string name;
    read(obj, key, name, path);
    if (name.empty()) return fallback;
    try {
        return parse(name);
    } catch (const ConfigError& e) {
        throw ConfigError(path + "." + key + ": " + e.what());
    }
}

} // namespace

ExperimentConfig default_config() {
    ExperimentConfig cfg;
    cfg.train.tx_init = learn::TxInit::gray_qam;
    cfg.train.steps = 4000;
    cfg.validation.linewidth_hz = metrics::ValidationGrid::linspace(50e3, 600e3, 10);
    return cfg;
}

void ExperimentConfig::validate() const {
    train.validate();
    validation.validate();
    if (jobs < 1) {
        throw ConfigError("validation.jobs must be >= 1");
    }
    if (validation.symbols_per_run <= 2 * static_cast<std::size_t>(train.bps.half_window)) {
        throw ConfigError("validation.symbols_per_run must exceed 2 * bps.half_window");
    }
}

bool operator==(const ExperimentConfig& a, const ExperimentConfig& b) { return serialize_config(a) == serialize_config(b); }

std::string serialize_config(const ExperimentConfig& cfg) {
    const auto& t = cfg.train;
    json j;
    j["order"] = t.order;
    j["seed"] = t.seed;
    j["output_dir"] = cfg.output_dir.generic_string();
    j["channel"] = {{"snr_db", t.channel.snr_db},
                    {"linewidth_hz", t.channel.linewidth_hz},
                    {"symbol_rate_baud", t.channel.symbol_rate_baud},
                    {"rpn_sigma_rad", t.channel.rpn_sigma},
                    {"kind", channel::to_string(t.channel.kind)}};
    j["bps"] = {{"num_test_phases", t.bps.num_test_phases}, {"half_window", t.bps.half_window}};
    j["train"] = {{"mode", learn::to_string(t.mode)},
                  {"batch_sequences", t.batch_sequences},
                  {"sequence_length", t.sequence_length},
                  {"steps", t.steps},
                  {"learning_rate", t.learning_rate},
                  {"optimizer", "adam"},
                  {"temperature_start", t.temperature_start},
                  {"temperature_end", t.temperature_end},
                  {"tx_init", learn::to_string(t.tx_init)},
                  {"freeze_tx", t.freeze_tx},
                  {"align_rotation", t.align_rotation},
                  {"rx_hidden", t.rx_hidden}};
    j["validation"] = {{"snr_db", cfg.validation.snr_db},
                       {"linewidth_hz", cfg.validation.linewidth_hz},
                       {"runs", cfg.validation.runs},
                       {"symbols_per_run", cfg.validation.symbols_per_run},
                       {"align_rotation", cfg.align_rotation},
                       {"jobs", cfg.jobs}};
    return j.dump(2) + "\n";
}

ExperimentConfig parse_config(std::string_view text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    reject_unknown(root, {"order", "seed", "output_dir", "channel", "bps", "train", "validation"}, "config");

    ExperimentConfig cfg = default_config();
    auto& t = cfg.train;
    read(root, "order", t.order, "config");
    read(root, "seed", t.seed, "config");
    std::string out_dir = cfg.output_dir.generic_string();
    read(root, "output_dir", out_dir, "config");
    cfg.output_dir = out_dir;

    const json empty = json::object();
    const auto& ch = section(root, "channel", empty);
    reject_unknown(ch, {"snr_db", "linewidth_hz", "symbol_rate_baud", "rpn_sigma_rad", "kind"}, "channel");
    read(ch, "snr_db", t.channel.snr_db, "channel");
    read(ch, "linewidth_hz", t.channel.linewidth_hz, "channel");
    read(ch, "symbol_rate_baud", t.channel.symbol_rate_baud, "channel");
    read(ch, "rpn_sigma_rad", t.channel.rpn_sigma, "channel");
    t.channel.kind = read_enum(ch, "kind", "channel", channel::parse_channel_kind, t.channel.kind);

    const auto& bps = section(root, "bps", empty);
    reject_unknown(bps, {"num_test_phases", "half_window"}, "bps");
    read(bps, "num_test_phases", t.bps.num_test_phases, "bps");
    read(bps, "half_window", t.bps.half_window, "bps");

    const auto& tr = section(root, "train", empty);
    reject_unknown(tr,
                   {"mode", "batch_sequences", "sequence_length", "steps", "learning_rate", "optimizer",
                    "temperature_start", "temperature_end", "tx_init", "freeze_tx", "align_rotation", "rx_hidden"},
                   "train");
    t.mode = read_enum(tr, "mode", "train", learn::parse_train_mode, t.mode);
    read(tr, "batch_sequences", t.batch_sequences, "train");
    read(tr, "sequence_length", t.sequence_length, "train");
    read(tr, "steps", t.steps, "train");
    read(tr, "learning_rate", t.learning_rate, "train");
    std::string optimizer = "adam";
    read(tr, "optimizer", optimizer, "train");
    if (optimizer != "adam") {
        throw ConfigError("train.optimizer: only 'adam' is supported");
    }
    read(tr, "temperature_start", t.temperature_start, "train");
    read(tr, "temperature_end", t.temperature_end, "train");
    t.tx_init = read_enum(tr, "tx_init", "train", learn::parse_tx_init, t.tx_init);
    read(tr, "freeze_tx", t.freeze_tx, "train");
    read(tr, "align_rotation", t.align_rotation, "train");
    read(tr, "rx_hidden", t.rx_hidden, "train");

    const auto& v = section(root, "validation", empty);
    reject_unknown(v, {"snr_db", "linewidth_hz", "runs", "symbols_per_run", "align_rotation", "jobs"}, "validation");
    read(v, "snr_db", cfg.validation.snr_db, "validation");
    read(v, "linewidth_hz", cfg.validation.linewidth_hz, "validation");
    read(v, "runs", cfg.validation.runs, "validation");
    read(v, "symbols_per_run", cfg.validation.symbols_per_run, "validation");
    read(v, "align_rotation", cfg.align_rotation, "validation");
    read(v, "jobs", cfg.jobs, "validation");
    cfg.validation.symbol_rate_baud = t.channel.symbol_rate_baud;

    cfg.validate();
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError("cannot open config file " + path.string());
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

void save_config(const std::filesystem::path& path, const ExperimentConfig& cfg) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error("cannot write " + path.string());
    }
    out << serialize_config(cfg);
}

} // namespace dbps::cli
