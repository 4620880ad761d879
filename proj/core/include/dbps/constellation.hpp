#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dbps/types.hpp"

namespace dbps {

/// M = 2^m complex points together with the m-bit label carried by each point.
/// Labels are stored as integers whose bits are read MSB-first, so label 0b10
/// of a 4-point constellation means (b1, b2) = (1, 0).
///
/// Immutable once constructed; the constructor rejects sizes that are not a
/// power of two and label sets that are not a permutation of 0..M-1.
class Constellation {
public:
    Constellation(std::vector<cplx> points, std::vector<std::uint32_t> labels);

    /// Point i carries label i.
    static Constellation with_identity_labels(std::vector<cplx> points);

    int order() const noexcept { return order_; }
    std::size_t size() const noexcept { return points_.size(); }

    std::span<const cplx> points() const noexcept { return points_; }
    std::span<const std::uint32_t> labels() const noexcept { return labels_; }
    cplx point(std::size_t i) const { return points_.at(i); }
    std::uint32_t label(std::size_t i) const { return labels_.at(i); }

    /// Bit j (0 = MSB) of the label of point i.
    int bit(std::size_t i, int j) const { return static_cast<int>((labels_[i] >> (order_ - 1 - j)) & 1u); }

    std::size_t index_of_label(std::uint32_t label) const { return by_label_.at(label); }

    double mean_power() const;

    /// Same labels, points scaled to unit mean power.
    Constellation normalized() const;

    friend bool operator==(const Constellation&, const Constellation&) = default;

private:
    std::vector<cplx> points_;
    std::vector<std::uint32_t> labels_;
    std::vector<std::size_t> by_label_;
    int order_ = 0;
};

/// Scales `points` by one positive real factor so that the mean of |x|^2 is 1.
/// Throws ConfigError for empty or all-zero input.
std::vector<cplx> normalize(std::span<const cplx> points);

/// Square 2^m-QAM with per-axis reflected Gray labels: the first m/2 label
/// bits choose the in-phase level, the last m/2 the quadrature level.
/// Point i carries label i. Label 0 sits in the upper right corner.
Constellation gray_qam(int m);

/// Index of the point closest to z; ties go to the lowest index.
std::size_t nearest_symbol(cplx z, std::span<const cplx> points);
std::size_t nearest_symbol(cplx z, const Constellation& c);

/// Minimum pairwise Euclidean distance.
double min_distance(const Constellation& c);

struct SerializeOptions {
    /// Fixed number of decimals. 0 selects the shortest representation that
    /// parses back to the identical double.
    int decimals = 0;
};

/// Tab-separated text: header "re\tim\tlabel", then one row per point with
/// the label in upper-case hexadecimal.
std::string serialize(const Constellation& c, SerializeOptions options = {});

/// Inverse of serialize(). Throws FormatError naming the offending line.
Constellation parse_constellation(std::string_view text);

Constellation load_constellation(const std::filesystem::path& path);
void save_constellation(const std::filesystem::path& path, const Constellation& c, SerializeOptions options = {});

/// Label as upper-case hex without prefix, e.g. 0x3f -> "3F".
std::string format_label(std::uint32_t label);

/// Integer labels -> B x m matrix of 0.0/1.0 (MSB in column 0).
RealMatrix labels_to_bits(std::span<const std::uint32_t> labels, int m);

/// Rows of a 0/1 bit matrix -> integer labels (MSB-first).
std::vector<std::uint32_t> bits_to_labels(const RealMatrix& bits);

} // namespace dbps
