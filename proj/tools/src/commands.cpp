#include "dbps_cli/commands.hpp"

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <optional>
#include <regex>

#include <CLI11.hpp>

#include "dbps/checkpoint.hpp"
#include "dbps/constellation.hpp"
#include "dbps/error.hpp"
#include "dbps/metrics.hpp"
#include "dbps/train.hpp"
#include "dbps_cli/config.hpp"

namespace dbps::cli {

namespace fs = std::filesystem;

namespace {

constexpr const char* constellation_file = "constellation.txt";
constexpr const char* rx_file = "rx.json";
constexpr const char* loss_file = "loss.csv";
constexpr const char* config_file = "config.json";
constexpr const char* bundle_dir = "plotdata";

std::string fmt(double v, int decimals) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed, decimals);
    return std::string(buf, res.ptr);
}

struct TrainArgs {
    std::string config;
    std::string mode;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> steps;
    std::string out;
    std::string tx_init;
    bool freeze_tx = false;
    bool align = false;
    std::size_t log_every = 100;
    std::size_t bmi_samples = 100000;
};

struct ValidateArgs {
    std::string constellation;
    std::string rx;
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> jobs;
    std::optional<std::size_t> runs;
    std::optional<std::size_t> symbols;
    std::string out;
    std::string prefix = "bmi";
    bool align = false;
};

struct BaselineArgs {
    int m = 0;
    double snr_db = 0.0;
    std::size_t samples = 100000;
    std::uint64_t seed = 1;
};

struct ExportArgs {
    std::string run_dir;
    std::string out;
};

int cmd_train(const TrainArgs& a, std::ostream& out) {
    ExperimentConfig cfg = load_config(a.config);
    auto& t = cfg.train;
    if (!a.mode.empty()) t.mode = learn::parse_train_mode(a.mode);
    if (a.seed) t.seed = *a.seed;
    if (a.steps) t.steps = *a.steps;
    if (!a.tx_init.empty()) t.tx_init = learn::parse_tx_init(a.tx_init);
    if (a.freeze_tx) t.freeze_tx = true;
    if (a.align) t.align_rotation = true;
    if (!a.out.empty()) cfg.output_dir = a.out;
    cfg.validate();

    out << "training " << learn::to_string(t.mode) << ": M = " << (1 << t.order) << ", " << t.steps << " steps of "
        << t.batch_sequences << " x " << t.sequence_length << " symbols, seed " << t.seed << "\n";
    auto progress = [&](const learn::LossRecord& r) {
        if (a.log_every > 0 && (r.step % a.log_every == 0 || r.step + 1 == t.steps)) {
            out << "step " << r.step << " loss " << fmt(r.loss, 6) << " temperature " << fmt(r.temperature, 6) << "\n";
            out.flush();
        }
    };
    const auto result = t.mode == learn::TrainMode::rpn ? learn::train_rpn_reference(t, progress)
                                                        : learn::train(t, progress);

    fs::create_directories(cfg.output_dir);
    save_constellation(cfg.output_dir / constellation_file, result.constellation);
    learn::save_rx(cfg.output_dir / rx_file, result.rx);
    learn::save_loss_csv(cfg.output_dir / loss_file, result.history);
    save_config(cfg.output_dir / config_file, cfg);

    if (!result.history.empty()) {
        const std::size_t n = result.history.size();
        const std::size_t window = std::min<std::size_t>(100, n);
        out << "final loss " << fmt(learn::moving_average_loss(result.history, n, window), 6) << " nats (mean of last "
            << window << " steps)\n";
    }
    const auto bmi = metrics::awgn_bmi_oracle(result.constellation, t.channel.snr_db, a.bmi_samples, t.seed);
    out << "constellation BMI on AWGN at " << fmt(t.channel.snr_db, 2) << " dB: " << fmt(bmi.bmi, 4) << " +- "
        << fmt(bmi.bmi_ci95, 4) << " bit/symbol\n";
    out << "wrote " << (cfg.output_dir / constellation_file).string() << ", " << rx_file << ", " << loss_file << ", "
        << config_file << "\n";
    return exit_ok;
}

int cmd_validate(const ValidateArgs& a, std::ostream& out) {
    ExperimentConfig cfg = load_config(a.config);
    if (a.seed) cfg.train.seed = *a.seed;
    if (a.jobs) cfg.jobs = *a.jobs;
    if (a.runs) cfg.validation.runs = *a.runs;
    if (a.symbols) cfg.validation.symbols_per_run = *a.symbols;
    if (a.align) cfg.align_rotation = true;
    const fs::path dir = a.out.empty() ? cfg.output_dir : fs::path(a.out);
    cfg.validate();

    const auto c = load_constellation(a.constellation);
    const auto rx = learn::load_rx(a.rx);
    if (rx.bits() != c.order()) {
        throw ShapeError("constellation has m = " + std::to_string(c.order()) + " bits per symbol but the Rx predicts " +
                         std::to_string(rx.bits()));
    }
    metrics::ValidateOptions opts;
    opts.bps = cfg.train.bps;
    opts.seed = cfg.train.seed;
    opts.jobs = cfg.jobs;
    opts.align_rotation = cfg.align_rotation;
    const auto records = metrics::validate(c, metrics::NetworkDemapper(rx), cfg.validation, opts);
    const auto paths = metrics::write_bmi_tables(dir, a.prefix, records);
    for (double snr : cfg.validation.snr_db) {
        out << "SNR " << metrics::snr_tag(snr) << " dB\n" << metrics::format_bmi_table(records, snr);
    }
    for (const auto& p : paths) {
        out << "wrote " << p.string() << "\n";
    }
    return exit_ok;
}

int cmd_baseline(const BaselineArgs& a, std::ostream& out) {
    const auto c = gray_qam(a.m);
    const auto r = metrics::awgn_bmi_oracle(c, a.snr_db, a.samples, a.seed);
    out << "Gray " << c.size() << "-QAM, AWGN " << fmt(a.snr_db, 2) << " dB: BMI " << fmt(r.bmi, 4) << " +- "
        << fmt(r.bmi_ci95, 4) << " bit/symbol, MI " << fmt(r.mi, 4) << " +- " << fmt(r.mi_ci95, 4) << " (" << r.samples
        << " samples, 95 % CI)\n";
    return exit_ok;
}

int cmd_export(const ExportArgs& a, std::ostream& out) {
    const fs::path run = a.run_dir;
    const fs::path bundle = a.out.empty() ? run / bundle_dir : fs::path(a.out);
    std::vector<std::string> missing;
    if (!fs::is_regular_file(run / constellation_file)) missing.push_back(constellation_file);
    if (!missing.empty()) {
        std::string names;
        for (const auto& m : missing) names += (names.empty() ? "" : ", ") + m;
        throw Error("run directory " + run.string() + " is missing: " + names);
    }
    fs::create_directories(bundle);
    const auto c = load_constellation(run / constellation_file);
    save_constellation(bundle / constellation_file, c, {.decimals = 8});
    std::size_t copied = 1;

    static const std::regex table_name(R"(.+_-?[0-9.]+dB\.txt)");
    std::vector<fs::path> extra;
    for (const auto& entry : fs::directory_iterator(run)) {
        if (!entry.is_regular_file()) continue;
        const auto name = entry.path().filename().string();
        if (name == loss_file || std::regex_match(name, table_name)) extra.push_back(entry.path());
    }
    std::sort(extra.begin(), extra.end());
    for (const auto& p : extra) {
        if (fs::exists(bundle / p.filename()) && fs::equivalent(p, bundle / p.filename())) continue;
        fs::copy_file(p, bundle / p.filename(), fs::copy_options::overwrite_existing);
        ++copied;
    }
    out << "exported " << copied << " files to " << bundle.string() << "\n";
    return exit_ok;
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Constellation shaping through a differentiable blind phase search"};
    app.require_subcommand(1);

    TrainArgs ta;
    auto* train = app.add_subcommand("train", "Train a constellation and receiver");
    train->add_option("config", ta.config, "Experiment config (JSON)")->required();
    train->add_option("--mode", ta.mode, "diff-bps, hard-bps, rpn or awgn")
        ->check(CLI::IsMember({"diff-bps", "hard-bps", "rpn", "awgn"}));
    train->add_option("--seed", ta.seed, "Overrides the config seed");
    train->add_option("--steps", ta.steps, "Overrides train.steps");
    train->add_option("--out", ta.out, "Output directory (default: config output_dir)");
    train->add_option("--tx-init", ta.tx_init, "random or gray_qam")->check(CLI::IsMember({"random", "gray_qam"}));
    train->add_flag("--freeze-tx", ta.freeze_tx, "Train the receiver only");
    train->add_flag("--align", ta.align, "hard-bps only: remove one global rotation per sequence");
    train->add_option("--log-every", ta.log_every, "Print the loss every N steps (0 = never)");
    train->add_option("--bmi-samples", ta.bmi_samples, "Samples for the final AWGN BMI estimate");

    ValidateArgs va;
    auto* validate = app.add_subcommand("validate", "Validate with the hard BPS over the SNR x linewidth grid");
    validate->add_option("constellation", va.constellation, "Constellation file")->required();
    validate->add_option("rx", va.rx, "Rx checkpoint (JSON)")->required();
    validate->add_option("config", va.config, "Experiment config (JSON)")->required();
    validate->add_option("--seed", va.seed, "Overrides the config seed");
    validate->add_option("--jobs", va.jobs, "Worker threads");
    validate->add_option("--runs", va.runs, "Overrides validation.runs");
    validate->add_option("--symbols", va.symbols, "Overrides validation.symbols_per_run");
    validate->add_option("--out", va.out, "Output directory (default: config output_dir)");
    validate->add_option("--prefix", va.prefix, "Table file prefix");
    validate->add_flag("--align", va.align, "Remove one global rotation per run (square-QAM baselines)");

    BaselineArgs ba;
    auto* baseline = app.add_subcommand("baseline", "AWGN BMI of Gray QAM with exact posteriors");
    baseline->add_option("--m", ba.m, "Bits per symbol (even)")->required();
    baseline->add_option("--snr-db", ba.snr_db, "SNR in dB")->required();
    baseline->add_option("--samples", ba.samples, "Monte-Carlo samples")->check(CLI::Range(2, 1 << 30));
    baseline->add_option("--seed", ba.seed, "Random seed");

    ExportArgs ea;
    auto* exporter = app.add_subcommand("export-plotdata", "Collect plot-ready files from a run directory");
    exporter->add_option("run_dir", ea.run_dir, "Run directory")->required();
    exporter->add_option("--out", ea.out, "Bundle directory (default: <run_dir>/plotdata)");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? exit_ok : exit_config_error;
    }

    try {
        if (*train) return cmd_train(ta, out);
        if (*validate) return cmd_validate(va, out);
        if (*baseline) return cmd_baseline(ba, out);
        if (*exporter) return cmd_export(ea, out);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return exit_config_error;
    } catch (const FormatError& e) {
        err << "input error: " << e.what() << "\n";
        return exit_config_error;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return exit_runtime_error;
    }
    return exit_runtime_error;
}

} // namespace dbps::cli
