#pragma once

#include <cassert>
#include <complex>
#include <cstddef>
#include <vector>

namespace dbps {

using cplx = std::complex<double>;
using ComplexSequence = std::vector<cplx>;

/// Dense row-major matrix of doubles. Used for K x L distance tables,
/// bit matrices and posterior matrices.
struct RealMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    RealMatrix() = default;
    RealMatrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t r, std::size_t c) {
        assert(r < rows && c < cols);
        return data[r * cols + c];
    }
    double operator()(std::size_t r, std::size_t c) const {
        assert(r < rows && c < cols);
        return data[r * cols + c];
    }

    const double* row(std::size_t r) const { return data.data() + r * cols; }
    double* row(std::size_t r) { return data.data() + r * cols; }

    bool empty() const { return data.empty(); }
};

} // namespace dbps

namespace dbps {

/// Per-symbol validity flags (1 = usable). Positions whose BPS window was
/// truncated at a sequence edge are 0.
using Mask = std::vector<unsigned char>;

} // namespace dbps
