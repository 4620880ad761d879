#include "dbps/constellation.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "dbps/error.hpp"

namespace dbps {

namespace {

int log2_exact(std::size_t n) {
    if (n == 0 || (n & (n - 1)) != 0) {
        return -1;
    }
    int m = 0;
    while ((std::size_t{1} << m) < n) {
        ++m;
    }
    return m;
}

std::string format_double(double v, int decimals) {
    char buf[64];
    auto res = decimals > 0 ? std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed, decimals)
                            : std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::vector<std::string_view> split_tabs(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        auto pos = line.find('\t', start);
        out.push_back(line.substr(start, pos == std::string_view::npos ? pos : pos - start));
        if (pos == std::string_view::npos) {
            break;
        }
        start = pos + 1;
    }
    return out;
}

double parse_double(std::string_view s, std::size_t line_no) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) {
        throw FormatError("invalid number '" + std::string(s) + "'", line_no);
    }
    return v;
}

} // namespace

Constellation::Constellation(std::vector<cplx> points, std::vector<std::uint32_t> labels)
    : points_(std::move(points)), labels_(std::move(labels)) {
    order_ = log2_exact(points_.size());
    if (order_ < 1) {
        throw ConfigError("constellation size " + std::to_string(points_.size()) + " is not a power of two >= 2");
    }
    if (labels_.size() != points_.size()) {
        throw ShapeError("constellation has " + std::to_string(points_.size()) + " points but " +
                         std::to_string(labels_.size()) + " labels");
    }
    by_label_.assign(points_.size(), points_.size());
    for (std::size_t i = 0; i < labels_.size(); ++i) {
        const auto l = labels_[i];
        if (l >= points_.size() || by_label_[l] != points_.size()) {
            throw ConfigError("constellation labels are not a permutation of 0.." + std::to_string(points_.size() - 1));
        }
        by_label_[l] = i;
    }
    for (auto p : points_) {
        if (!std::isfinite(p.real()) || !std::isfinite(p.imag())) {
            throw NumericalError("constellation point is not finite");
        }
    }
}

Constellation Constellation::with_identity_labels(std::vector<cplx> points) {
    std::vector<std::uint32_t> labels(points.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        labels[i] = static_cast<std::uint32_t>(i);
    }
    return Constellation(std::move(points), std::move(labels));
}

double Constellation::mean_power() const {
    double acc = 0.0;
    for (auto p : points_) {
        acc += std::norm(p);
    }
    return acc / static_cast<double>(points_.size());
}

Constellation Constellation::normalized() const {
    return Constellation(normalize(points_), labels_);
}

std::vector<cplx> normalize(std::span<const cplx> points) {
    if (points.empty()) {
        throw ConfigError("cannot normalize an empty constellation");
    }
    double power = 0.0;
    for (auto p : points) {
        power += std::norm(p);
    }
    power /= static_cast<double>(points.size());
    if (!(power > 0.0) || !std::isfinite(power)) {
        throw ConfigError("degenerate constellation: zero or non-finite mean power");
    }
    const double scale = 1.0 / std::sqrt(power);
    std::vector<cplx> out(points.begin(), points.end());
    for (auto& p : out) {
        p *= scale;
    }
    return out;
}

Constellation gray_qam(int m) {
    if (m < 2 || m % 2 != 0 || m > 16) {
        throw ConfigError("square QAM needs an even order 2 <= m <= 16, got m = " + std::to_string(m));
    }
    const int half = m / 2;
    const std::uint32_t levels = 1u << half;
    // gray code g -> position j of that level along the axis, j = 0 is the largest amplitude
    std::vector<double> amplitude_of_gray(levels);
    for (std::uint32_t j = 0; j < levels; ++j) {
        const std::uint32_t g = j ^ (j >> 1);
        amplitude_of_gray[g] = static_cast<double>(levels - 1) - 2.0 * j;
    }
    const std::size_t count = std::size_t{1} << m;
    std::vector<cplx> points(count);
    for (std::uint32_t label = 0; label < count; ++label) {
        const std::uint32_t gi = label >> half;
        const std::uint32_t gq = label & (levels - 1);
        points[label] = {amplitude_of_gray[gi], amplitude_of_gray[gq]};
    }
    return Constellation::with_identity_labels(normalize(points));
}

std::size_t nearest_symbol(cplx z, std::span<const cplx> points) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < points.size(); ++i) {
        const double d = std::norm(z - points[i]);
        if (d < best_d) {
            best_d = d;
            best = i;
        }
    }
    return best;
}

std::size_t nearest_symbol(cplx z, const Constellation& c) { return nearest_symbol(z, c.points()); }

double min_distance(const Constellation& c) {
    double best = std::numeric_limits<double>::infinity();
    const auto pts = c.points();
    for (std::size_t i = 0; i < pts.size(); ++i) {
        for (std::size_t j = i + 1; j < pts.size(); ++j) {
            best = std::min(best, std::abs(pts[i] - pts[j]));
        }
    }
    return best;
}

std::string format_label(std::uint32_t label) {
    char buf[16];
    auto res = std::to_chars(buf, buf + sizeof(buf), label, 16);
    std::string s(buf, res.ptr);
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char ch) { return static_cast<char>(std::toupper(ch)); });
    return s;
}

std::string serialize(const Constellation& c, SerializeOptions options) {
    std::string out = "re\tim\tlabel\n";
    for (std::size_t i = 0; i < c.size(); ++i) {
        out += format_double(c.point(i).real(), options.decimals);
        out += '\t';
        out += format_double(c.point(i).imag(), options.decimals);
        out += '\t';
        out += format_label(c.label(i));
        out += '\n';
    }
    return out;
}

Constellation parse_constellation(std::string_view text) {
    std::vector<cplx> points;
    std::vector<std::uint32_t> labels;
    std::size_t line_no = 0;
    bool header_seen = false;
    while (!text.empty()) {
        auto eol = text.find('\n');
        std::string_view line = text.substr(0, eol);
        text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.remove_suffix(1);
        }
        if (line.empty()) {
            continue;
        }
        if (!header_seen) {
            if (line != "re\tim\tlabel") {
                throw FormatError("expected header 're\\tim\\tlabel'", line_no);
            }
            header_seen = true;
            continue;
        }
        const auto fields = split_tabs(line);
        if (fields.size() != 3) {
            throw FormatError("expected 3 tab-separated fields, got " + std::to_string(fields.size()), line_no);
        }
        const double re = parse_double(fields[0], line_no);
        const double im = parse_double(fields[1], line_no);
        std::uint32_t label = 0;
        auto [ptr, ec] = std::from_chars(fields[2].data(), fields[2].data() + fields[2].size(), label, 16);
        if (ec != std::errc{} || ptr != fields[2].data() + fields[2].size() || fields[2].empty()) {
            throw FormatError("invalid hexadecimal label '" + std::string(fields[2]) + "'", line_no);
        }
        points.emplace_back(re, im);
        labels.push_back(label);
    }
    if (!header_seen) {
        throw FormatError("empty constellation file");
    }
    try {
        return Constellation(std::move(points), std::move(labels));
    } catch (const FormatError&) {
        throw;
    } catch (const Error& e) {
        throw FormatError(std::string("invalid constellation: ") + e.what());
    }
}

Constellation load_constellation(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw FormatError("cannot open constellation file " + path.string());
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_constellation(ss.str());
}

void save_constellation(const std::filesystem::path& path, const Constellation& c, SerializeOptions options) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error("cannot write " + path.string());
    }
    out << serialize(c, options);
}

RealMatrix labels_to_bits(std::span<const std::uint32_t> labels, int m) {
    RealMatrix bits(labels.size(), static_cast<std::size_t>(m));
    for (std::size_t k = 0; k < labels.size(); ++k) {
        for (int j = 0; j < m; ++j) {
            bits(k, static_cast<std::size_t>(j)) = static_cast<double>((labels[k] >> (m - 1 - j)) & 1u);
        }
    }
    return bits;
}

std::vector<std::uint32_t> bits_to_labels(const RealMatrix& bits) {
    std::vector<std::uint32_t> labels(bits.rows, 0);
    for (std::size_t k = 0; k < bits.rows; ++k) {
        std::uint32_t l = 0;
        for (std::size_t j = 0; j < bits.cols; ++j) {
            const double b = bits(k, j);
            if (b != 0.0 && b != 1.0) {
                throw ConfigError("bit matrix entries must be 0 or 1");
            }
            l = (l << 1) | static_cast<std::uint32_t>(b);
        }
        labels[k] = l;
    }
    return labels;
}

} // namespace dbps
