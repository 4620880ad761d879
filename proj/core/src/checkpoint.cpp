#include "dbps/checkpoint.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "dbps/error.hpp"

namespace dbps::learn {

namespace {

using nlohmann::json;

std::string shortest(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw FormatError("cannot open " + path.string());
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error("cannot write " + path.string());
    }
    out << text;
}

} // namespace

std::string serialize_rx(const RxParams& rx) {
    json doc;
    doc["format"] = rx_format_tag;
    doc["version"] = rx_format_version;
    doc["bits"] = rx.bits();
    doc["hidden"] = rx.hidden();
    doc["layers"] = json::array();
    for (const auto& l : rx.layers()) {
        json layer;
        layer["inputs"] = l.inputs();
        layer["outputs"] = l.outputs();
        layer["weight"] = std::vector<double>(l.weight.value().begin(), l.weight.value().end());
        layer["bias"] = std::vector<double>(l.bias.value().begin(), l.bias.value().end());
        doc["layers"].push_back(std::move(layer));
    }
    return doc.dump() + "\n";
}

RxParams parse_rx(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw FormatError(std::string("Rx checkpoint is not valid JSON: ") + e.what());
    }
    try {
        if (doc.at("format").get<std::string>() != rx_format_tag) {
            throw FormatError("not an Rx checkpoint (format tag mismatch)");
        }
        const int version = doc.at("version").get<int>();
        if (version != rx_format_version) {
            throw FormatError("unsupported Rx checkpoint version " + std::to_string(version));
        }
        const auto& layers = doc.at("layers");
        if (!layers.is_array() || layers.size() != 3) {
            throw FormatError("Rx checkpoint must hold exactly 3 layers");
        }
        std::array<DenseLayer, 3> out;
        for (std::size_t i = 0; i < 3; ++i) {
            const auto& l = layers[i];
            const auto in = l.at("inputs").get<std::size_t>();
            const auto outs = l.at("outputs").get<std::size_t>();
            auto w = l.at("weight").get<std::vector<double>>();
            auto b = l.at("bias").get<std::vector<double>>();
            if (w.size() != in * outs || b.size() != outs) {
                throw FormatError("Rx checkpoint layer " + std::to_string(i) + " has inconsistent sizes");
            }
            out[i] = {ad::Var::parameter(in, outs, std::move(w)), ad::Var::parameter(1, outs, std::move(b))};
        }
        RxParams rx(std::move(out));
        if (doc.contains("bits") && doc.at("bits").get<int>() != rx.bits()) {
            throw FormatError("Rx checkpoint 'bits' does not match its output layer");
        }
        return rx;
    } catch (const json::exception& e) {
        throw FormatError(std::string("malformed Rx checkpoint: ") + e.what());
    } catch (const ShapeError& e) {
        throw FormatError(std::string("malformed Rx checkpoint: ") + e.what());
    }
}

void save_rx(const std::filesystem::path& path, const RxParams& rx) { write_file(path, serialize_rx(rx)); }

RxParams load_rx(const std::filesystem::path& path) { return parse_rx(read_file(path)); }

std::string format_loss_csv(const std::vector<LossRecord>& history) {
    std::string out = "step,loss,temperature\n";
    for (const auto& r : history) {
        out += std::to_string(r.step) + "," + shortest(r.loss) + "," + shortest(r.temperature) + "\n";
    }
    return out;
}

void save_loss_csv(const std::filesystem::path& path, const std::vector<LossRecord>& history) {
    write_file(path, format_loss_csv(history));
}

} // namespace dbps::learn
