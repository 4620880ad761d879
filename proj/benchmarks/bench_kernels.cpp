#include <benchmark/benchmark.h>

#include "dbps/autoencoder.hpp"
#include "dbps/channel.hpp"
#include "dbps/constellation.hpp"
#include "dbps/cpe.hpp"

namespace {

using namespace dbps;

ComplexSequence received(std::size_t n, const Constellation& c) {
    channel::RngStream rng(7, 0);
    ComplexSequence x(n);
    for (std::size_t k = 0; k < n; ++k) {
        x[k] = c.point(rng.uniform_index(static_cast<std::uint32_t>(c.size())));
    }
    const auto phi = channel::wiener_phase(n, channel::wiener_variance(100e3, 32e9), rng);
    return channel::awgn(channel::apply_phase(x, phi), 20.0, rng);
}

void BM_Distances(benchmark::State& state) {
    const auto c = gray_qam(6);
    const auto z = received(static_cast<std::size_t>(state.range(0)), c);
    const auto phases = cpe::test_phase_grid(60);
    for (auto _ : state) {
        benchmark::DoNotOptimize(cpe::distances(z, c, phases));
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Distances)->Arg(1 << 12)->Arg(1 << 15);

void BM_WindowSums(benchmark::State& state) {
    const auto c = gray_qam(6);
    const auto d = cpe::distances(received(1 << 15, c), c, cpe::test_phase_grid(60));
    const auto half = static_cast<std::size_t>(state.range(0));
    for (auto _ : state) {
        benchmark::DoNotOptimize(cpe::window_sums(d, half));
    }
    state.SetItemsProcessed(state.iterations() * (1 << 15));
}
BENCHMARK(BM_WindowSums)->Arg(0)->Arg(8)->Arg(60);

void BM_Bps(benchmark::State& state) {
    const auto c = gray_qam(6);
    const auto z = received(1 << 15, c);
    cpe::BpsConfig cfg;
    cfg.mode = state.range(0) == 0 ? cpe::BpsMode::hard : cpe::BpsMode::soft;
    cfg.temperature = 1e-3;
    for (auto _ : state) {
        benchmark::DoNotOptimize(cpe::bps(z, c, cfg));
    }
    state.SetItemsProcessed(state.iterations() * (1 << 15));
    state.SetLabel(cfg.mode == cpe::BpsMode::hard ? "hard" : "soft");
}
BENCHMARK(BM_Bps)->Arg(0)->Arg(1);

void BM_RxPosteriors(benchmark::State& state) {
    const auto c = gray_qam(6);
    const auto z = received(1 << 14, c);
    channel::RngStream rng(3, 1);
    const auto rx = learn::RxParams::init(6, rng);
    for (auto _ : state) {
        benchmark::DoNotOptimize(rx.posteriors(z));
    }
    state.SetItemsProcessed(state.iterations() * (1 << 14));
}
BENCHMARK(BM_RxPosteriors);

void BM_WienerChannel(benchmark::State& state) {
    channel::RngStream rng(11, 0);
    const double var = channel::wiener_variance(100e3, 32e9);
    for (auto _ : state) {
        benchmark::DoNotOptimize(channel::wiener_phase(1 << 16, var, rng));
    }
    state.SetItemsProcessed(state.iterations() * (1 << 16));
}
BENCHMARK(BM_WienerChannel);

} // namespace
BENCHMARK_MAIN();
