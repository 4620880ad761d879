#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>

#include "dbps/channel.hpp"
#include "dbps/constellation.hpp"
#include "dbps/error.hpp"

using dbps::cplx;
namespace ch = dbps::channel;

namespace {

constexpr double pi = std::numbers::pi;

struct Moments {
    double mean = 0, var = 0, skew = 0, excess_kurtosis = 0;
};

Moments moments(const std::vector<double>& v) {
    const double n = static_cast<double>(v.size());
    double mean = 0;
    for (double x : v) mean += x;
    mean /= n;
    double m2 = 0, m3 = 0, m4 = 0;
    for (double x : v) {
        const double d = x - mean;
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    return {mean, m2, m3 / std::pow(m2, 1.5), m4 / (m2 * m2) - 3.0};
}

std::vector<cplx> unit_qpsk(std::size_t n, ch::RngStream& rng) {
    const auto c = dbps::gray_qam(2);
    std::vector<cplx> x(n);
    for (auto& v : x) v = c.point(rng.uniform_index(4));
    return x;
}

} // namespace

TEST_CASE("wiener_variance examples") {
    CHECK(ch::wiener_variance(0, 32e9) == 0.0);
    CHECK(ch::wiener_variance(100e3, 32e9) == doctest::Approx(1.963495e-5).epsilon(1e-6));
    CHECK(ch::wiener_variance(600e3, 32e9) == doctest::Approx(1.178097e-4).epsilon(1e-6));
    CHECK_THROWS_AS(ch::wiener_variance(100e3, 0), dbps::ConfigError);
    CHECK_THROWS_AS(ch::wiener_variance(100e3, -1), dbps::ConfigError);
    CHECK_THROWS_AS(ch::wiener_variance(-1, 32e9), dbps::ConfigError);
}

TEST_CASE("channel config derived quantities and validation") {
    ch::ChannelConfig cfg;
    cfg.snr_db = 17;
    CHECK(cfg.noise_variance() == doctest::Approx(std::pow(10.0, -1.7)));
    CHECK(cfg.phase_variance() == doctest::Approx(2 * pi * 1e5 / 32e9));
    CHECK_NOTHROW(cfg.validate());
    cfg.symbol_rate_baud = 0;
    CHECK_THROWS_AS(cfg.validate(), dbps::ConfigError);
    cfg = {};
    cfg.rpn_sigma = -0.1;
    CHECK_THROWS_AS(cfg.validate(), dbps::ConfigError);
    cfg = {};
    cfg.linewidth_hz = -5;
    CHECK_THROWS_AS(cfg.validate(), dbps::ConfigError);

    for (auto k : {ch::ChannelKind::awgn_only, ch::ChannelKind::wiener, ch::ChannelKind::rpn_surrogate}) {
        CHECK(ch::parse_channel_kind(ch::to_string(k)) == k);
    }
    CHECK_THROWS_AS(ch::parse_channel_kind("laser"), dbps::ConfigError);
}

TEST_CASE("awgn with infinite SNR is the identity") {
    ch::RngStream rng(1, 0);
    const auto x = unit_qpsk(100, rng);
    const auto y = ch::awgn(x, std::numeric_limits<double>::infinity(), rng);
    CHECK(y == x);
}

TEST_CASE("awgn noise statistics at 17 dB") {
    ch::RngStream rng(2, 0);
    const std::size_t n = 1'000'000;
    const auto x = unit_qpsk(n, rng);
    const auto y = ch::awgn(x, 17.0, rng);
    cplx mean{}, second{};
    double var = 0;
    for (std::size_t k = 0; k < n; ++k) {
        const cplx e = y[k] - x[k];
        mean += e;
        var += std::norm(e);
        second += e * e;
    }
    const double dn = static_cast<double>(n);
    mean /= dn;
    var /= dn;
    second /= dn;
    const double sigma2 = std::pow(10.0, -1.7);
    CHECK(var == doctest::Approx(0.019953).epsilon(0.01));
    // standard error of the complex mean is sqrt(sigma2 / n)
    CHECK(std::abs(mean) < 4.0 * std::sqrt(sigma2 / dn));
    // circular symmetry: E[n^2] vanishes; its per-component std is sigma2 / sqrt(2n)
    CHECK(std::abs(second.real()) < 4.0 * sigma2 / std::sqrt(2.0 * dn));
    CHECK(std::abs(second.imag()) < 4.0 * sigma2 / std::sqrt(2.0 * dn));
}

TEST_CASE("wiener_phase examples") {
    ch::RngStream rng(3, 0);
    const auto zero = ch::wiener_phase(50, 0.0, rng);
    CHECK(zero == std::vector<double>(50, 0.0));
    const auto single = ch::wiener_phase(1, 1.0, rng);
    CHECK(single == std::vector<double>{0.0});
    CHECK_THROWS_AS(ch::wiener_phase(0, 1.0, rng), dbps::ConfigError);
}

TEST_CASE("wiener_phase increments are Gaussian with the requested variance") {
    ch::RngStream rng(4, 0);
    const double s2 = 1.9635e-5;
    const std::size_t n = 1'000'000;
    const auto phi = ch::wiener_phase(n + 1, s2, rng);
    CHECK(phi[0] == 0.0);
    std::vector<double> inc(n);
    for (std::size_t k = 0; k < n; ++k) inc[k] = phi[k + 1] - phi[k];
    const auto m = moments(inc);
    CHECK(m.var == doctest::Approx(s2).epsilon(0.05));
    const double dn = static_cast<double>(n);
    CHECK(std::abs(m.skew) < 4.0 * std::sqrt(6.0 / dn));
    CHECK(std::abs(m.excess_kurtosis) < 4.0 * std::sqrt(24.0 / dn));
}

TEST_CASE("wiener_phase variance grows linearly with lag") {
    const double s2 = 1e-4;
    const std::size_t lag = 1000;
    const std::size_t realizations = 4000;
    std::vector<double> end(realizations);
    for (std::size_t r = 0; r < realizations; ++r) {
        ch::RngStream rng(5, r);
        end[r] = ch::wiener_phase(lag + 1, s2, rng)[lag];
    }
    const auto m = moments(end);
    // relative std of a sample variance is sqrt(2 / n) ~ 2.2 %
    CHECK(m.var == doctest::Approx(lag * s2).epsilon(4.0 * std::sqrt(2.0 / realizations)));
}

TEST_CASE("apply_phase") {
    const std::vector<cplx> one{{1, 0}};
    const auto r = ch::apply_phase(one, std::vector<double>{pi / 2});
    CHECK(std::abs(r[0] - cplx(0, 1)) < 1e-12);

    ch::RngStream rng(6, 0);
    std::vector<cplx> x(1000);
    std::vector<double> phi(1000);
    for (std::size_t k = 0; k < x.size(); ++k) {
        x[k] = {rng.normal(), rng.normal()};
        phi[k] = 10.0 * rng.normal();
    }
    CHECK(ch::apply_phase(x, std::vector<double>(1000, 0.0)) == x);
    const auto y = ch::apply_phase(x, phi);
    for (std::size_t k = 0; k < x.size(); ++k) {
        CHECK(std::abs(y[k]) == doctest::Approx(std::abs(x[k])).epsilon(1e-14));
    }
    CHECK_THROWS_AS(ch::apply_phase(x, std::vector<double>(999, 0.0)), dbps::ShapeError);
}

TEST_CASE("rpn rotation statistics") {
    ch::RngStream rng(7, 0);
    const std::size_t n = 1'000'000;
    const auto x = unit_qpsk(n, rng);
    CHECK(ch::rpn(x, 0.0, rng) == x);
    const auto y = ch::rpn(x, 0.005, rng);
    std::vector<double> theta(n);
    for (std::size_t k = 0; k < n; ++k) theta[k] = std::arg(y[k] / x[k]);
    const auto m = moments(theta);
    CHECK(std::sqrt(m.var) == doctest::Approx(0.005).epsilon(0.02));
    double lag1 = 0;
    for (std::size_t k = 1; k < n; ++k) lag1 += (theta[k] - m.mean) * (theta[k - 1] - m.mean);
    lag1 /= static_cast<double>(n - 1) * m.var;
    CHECK(std::abs(lag1) < 4.0 / std::sqrt(static_cast<double>(n)));
    CHECK_THROWS_AS(ch::rpn(x, -1.0, rng), dbps::ConfigError);
}

TEST_CASE("identical streams reproduce identical draws") {
    const std::vector<cplx> x(4096, cplx(1, 0));
    ch::RngStream a(42, ch::stream_id(3, 2));
    ch::RngStream b(42, ch::stream_id(3, 2));
    ch::RngStream c(42, ch::stream_id(3, 1));
    ch::RngStream d(43, ch::stream_id(3, 2));
    const auto ya = ch::awgn(x, 10.0, a);
    CHECK(ya == ch::awgn(x, 10.0, b));
    CHECK(ya != ch::awgn(x, 10.0, c));
    CHECK(ya != ch::awgn(x, 10.0, d));
    CHECK(ch::wiener_phase(100, 1e-3, a) == ch::wiener_phase(100, 1e-3, b));
    CHECK(ch::stream_id(3, 2) != ch::stream_id(2, 3));
}

TEST_CASE("distinct streams are uncorrelated") {
    const std::size_t n = 200'000;
    ch::RngStream a(9, ch::stream_id(0, 2));
    ch::RngStream b(9, ch::stream_id(1, 2));
    double corr = 0;
    for (std::size_t k = 0; k < n; ++k) corr += a.normal() * b.normal();
    CHECK(std::abs(corr / static_cast<double>(n)) < 4.0 / std::sqrt(static_cast<double>(n)));
}
