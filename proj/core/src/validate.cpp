#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <numbers>
#include <thread>

#include "dbps/channel.hpp"
#include "dbps/error.hpp"
#include "dbps/metrics.hpp"

namespace dbps::metrics {

namespace {

enum Purpose : std::uint64_t { bits_stream = 1, noise_stream = 2, phase_stream = 3 };

std::string shortest(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed);
    return std::string(buf, res.ptr);
}

std::string fixed(double v, int decimals) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed, decimals);
    return std::string(buf, res.ptr);
}

} // namespace

std::vector<double> ValidationGrid::linspace(double lo, double hi, std::size_t count) {
    std::vector<double> out(count);
    if (count == 1) {
        out[0] = lo;
        return out;
    }
    for (std::size_t i = 0; i < count; ++i) {
        out[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
    }
    return out;
}

void ValidationGrid::validate() const {
    if (snr_db.empty() || linewidth_hz.empty()) {
        throw ConfigError("validation grid needs at least one SNR and one linewidth");
    }
    if (runs == 0) {
        throw ConfigError("validation.runs must be >= 1");
    }
    if (symbols_per_run == 0) {
        throw ConfigError("validation.symbols_per_run must be >= 1");
    }
    if (!(symbol_rate_baud > 0.0)) {
        throw ConfigError("validation symbol rate must be > 0");
    }
    for (double lw : linewidth_hz) {
        if (!(lw >= 0.0)) throw ConfigError("validation linewidths must be >= 0");
    }
}

RunResult validation_run(const Constellation& c, const Demapper& demapper, double snr_db, double linewidth_hz,
                         double symbol_rate_baud, std::size_t symbols, const ValidateOptions& options,
                         std::uint64_t run_id) {
    if (demapper.bits() != c.order()) {
        throw ShapeError("demapper produces " + std::to_string(demapper.bits()) + " bits but the constellation has m = " +
                         std::to_string(c.order()));
    }
    cpe::BpsConfig bcfg = options.bps;
    bcfg.mode = cpe::BpsMode::hard;
    bcfg.validate();
    if (symbols <= 2 * static_cast<std::size_t>(bcfg.half_window)) {
        throw ShapeError("validation run of " + std::to_string(symbols) + " symbols is shorter than the BPS window");
    }

    const auto M = static_cast<std::uint32_t>(c.size());
    channel::RngStream bits_rng(options.seed, channel::stream_id(run_id, bits_stream));
    std::vector<std::uint32_t> labels(symbols);
    ComplexSequence x(symbols);
    for (std::size_t k = 0; k < symbols; ++k) {
        labels[k] = bits_rng.uniform_index(M);
        x[k] = c.point(c.index_of_label(labels[k]));
    }
    channel::RngStream noise_rng(options.seed, channel::stream_id(run_id, noise_stream));
    channel::RngStream phase_rng(options.seed, channel::stream_id(run_id, phase_stream));
    const auto noisy = channel::awgn(x, snr_db, noise_rng);
    const auto phi = channel::wiener_phase(symbols, channel::wiener_variance(linewidth_hz, symbol_rate_baud), phase_rng);
    const auto z = channel::apply_phase(noisy, phi);

    auto out = cpe::bps(z, c, bcfg);
    if (options.align_rotation) {
        cplx acc{0.0, 0.0};
        std::size_t used = 0;
        for (std::size_t k = 0; k < symbols && used < options.align_symbols; ++k) {
            if (!out.valid_mask[k]) continue;
            acc += x[k] * std::conj(out.corrected[k]);
            ++used;
        }
        const cplx rot = std::polar(1.0, std::arg(acc));
        for (auto& y : out.corrected) {
            y *= rot;
        }
    }

    const auto probs = demapper.posteriors(out.corrected);
    const auto bits = labels_to_bits(labels, c.order());
    RunResult r;
    r.bmi = bmi_from_posteriors(bits, probs, out.valid_mask);
    r.ber = ber(bits, probs, out.valid_mask);
    for (std::size_t k = 1; k < symbols; ++k) {
        if (out.valid_mask[k] && out.valid_mask[k - 1] &&
            std::abs(out.phase_estimates[k] - out.phase_estimates[k - 1]) > std::numbers::pi / 4.0) {
            ++r.slip_events;
        }
    }
    return r;
}

std::vector<EvalRecord> validate(const Constellation& c, const Demapper& demapper, const ValidationGrid& grid,
                                 const ValidateOptions& options) {
    grid.validate();
    if (grid.snr_db.size() > 255 || grid.linewidth_hz.size() > 255 || grid.runs > (std::size_t{1} << 32)) {
        throw ConfigError("validation grid too large");
    }
    const std::size_t points = grid.snr_db.size() * grid.linewidth_hz.size();
    const std::size_t tasks = points * grid.runs;
    std::vector<RunResult> results(tasks);

    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        while (true) {
            const std::size_t t = next.fetch_add(1);
            if (t >= tasks) return;
            const std::size_t gp = t / grid.runs;
            const std::size_t run = t % grid.runs;
            const std::size_t si = gp / grid.linewidth_hz.size();
            const std::size_t li = gp % grid.linewidth_hz.size();
            // Run ids depend only on the grid coordinates, so adding runs keeps earlier ones.
            const std::uint64_t run_id = (static_cast<std::uint64_t>(si) << 48) |
                                         (static_cast<std::uint64_t>(li) << 40) | static_cast<std::uint64_t>(run);
            try {
                results[t] = validation_run(c, demapper, grid.snr_db[si], grid.linewidth_hz[li], grid.symbol_rate_baud,
                                            grid.symbols_per_run, options, run_id);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next.store(tasks);
                return;
            }
        }
    };
    const std::size_t jobs = std::clamp<std::size_t>(options.jobs, 1, tasks);
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
    }
    if (failure) {
        std::rethrow_exception(failure);
    }

    std::vector<EvalRecord> records;
    records.reserve(points);
    for (std::size_t gp = 0; gp < points; ++gp) {
        EvalRecord rec;
        rec.snr_db = grid.snr_db[gp / grid.linewidth_hz.size()];
        rec.linewidth_hz = grid.linewidth_hz[gp % grid.linewidth_hz.size()];
        rec.runs = grid.runs;
        rec.symbols_per_run = grid.symbols_per_run;
        double bmi_sum = 0.0, ber_sum = 0.0, slip_sum = 0.0;
        for (std::size_t r = 0; r < grid.runs; ++r) {
            const auto& rr = results[gp * grid.runs + r];
            bmi_sum += rr.bmi;
            ber_sum += rr.ber;
            slip_sum += static_cast<double>(rr.slip_events);
        }
        const double n = static_cast<double>(grid.runs);
        rec.bmi_mean = bmi_sum / n;
        rec.ber_mean = ber_sum / n;
        rec.slip_events_mean = slip_sum / n;
        double ss = 0.0;
        for (std::size_t r = 0; r < grid.runs; ++r) {
            const double d = results[gp * grid.runs + r].bmi - rec.bmi_mean;
            ss += d * d;
        }
        rec.bmi_std = grid.runs > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
        records.push_back(rec);
    }
    return records;
}

std::string snr_tag(double snr_db) { return shortest(snr_db); }

std::string format_bmi_table(std::span<const EvalRecord> records, double snr_db) {
    std::string out = "linewidth mean stddev\n";
    for (const auto& r : records) {
        if (r.snr_db != snr_db) continue;
        out += shortest(r.linewidth_hz) + " " + fixed(r.bmi_mean, 8) + " " + fixed(r.bmi_std, 8) + "\n";
    }
    return out;
}

std::vector<std::filesystem::path> write_bmi_tables(const std::filesystem::path& dir, const std::string& prefix,
                                                    std::span<const EvalRecord> records) {
    std::filesystem::create_directories(dir);
    std::vector<double> snrs;
    for (const auto& r : records) {
        if (std::find(snrs.begin(), snrs.end(), r.snr_db) == snrs.end()) snrs.push_back(r.snr_db);
    }
    std::vector<std::filesystem::path> paths;
    for (double snr : snrs) {
        auto path = dir / (prefix + "_" + snr_tag(snr) + "dB.txt");
        std::ofstream out(path, std::ios::binary);
        if (!out) throw Error("cannot write " + path.string());
        out << format_bmi_table(records, snr);
        paths.push_back(path);
    }
    return paths;
}

} // namespace dbps::metrics
