#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "sanet/rng.hpp"
#include "sanet/tensor.hpp"

namespace sanet {

// Orthogonal-style convolution init: each output filter, flattened to a
// fan-in row, is Gram-Schmidt orthonormalized against the previous ones and
// scaled by `gain`. All arithmetic runs in double with only +,*,/ and sqrt,
// so the same seed yields the same bits everywhere. Requires Cout <= fan-in.
template <typename T>
BasicTensor<T> orthogonal_conv(Shape ws, double gain, Rng& rng) {
    check_shape_valid(ws);
    const int rows = ws.n;
    const int cols = ws.c * ws.h * ws.w;
    if (rows > cols) {
        throw std::invalid_argument("orthogonal_conv: Cout " + std::to_string(rows) +
                                    " exceeds fan-in " + std::to_string(cols));
    }
    std::vector<std::vector<double>> basis;
    basis.reserve(rows);
    std::vector<double> row(cols);
    while (static_cast<int>(basis.size()) < rows) {
        for (int j = 0; j < cols; ++j) row[j] = rng.normal();
        for (const auto& prev : basis) {
            double proj = 0.0;
            for (int j = 0; j < cols; ++j) proj += row[j] * prev[j];
            for (int j = 0; j < cols; ++j) row[j] -= proj * prev[j];
        }
        double norm2 = 0.0;
        for (int j = 0; j < cols; ++j) norm2 += row[j] * row[j];
        if (norm2 < 1e-12) continue;  // redraw a degenerate direction
        const double inv = 1.0 / std::sqrt(norm2);
        for (int j = 0; j < cols; ++j) row[j] *= inv;
        basis.push_back(row);
    }
    BasicTensor<T> w(ws);
    for (int r = 0; r < rows; ++r)
        for (int j = 0; j < cols; ++j)
            w.data[static_cast<size_t>(r) * cols + j] = static_cast<T>(gain * basis[r][j]);
    return w;
}

}  // namespace sanet
