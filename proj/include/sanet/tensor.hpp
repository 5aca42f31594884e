#pragma once

#include <cmath>
#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "sanet/rng.hpp"

namespace sanet {

// Extents of a dense 4-D array in (batch, channels, height, width) order.
struct Shape {
    int n = 1;
    int c = 1;
    int h = 1;
    int w = 1;

    std::int64_t numel() const {
        return static_cast<std::int64_t>(n) * c * static_cast<std::int64_t>(h) * w;
    }
    bool operator==(const Shape&) const = default;

    std::string str() const {
        std::ostringstream os;
        os << n << "x" << c << "x" << h << "x" << w;
        return os.str();
    }
};

inline void check_shape_valid(const Shape& s) {
    if (s.n < 1 || s.c < 1 || s.h < 1 || s.w < 1) {
        throw std::invalid_argument("tensor extents must all be >= 1, got " + s.str());
    }
}

// Dense row-major (N,C,H,W) tensor. T is float in the production pathway;
// double instantiations back the high-precision gradient checking mode.
template <typename T>
struct BasicTensor {
    Shape shape;
    std::vector<T> data;

    BasicTensor() : shape{1, 1, 1, 1}, data(1, T(0)) {}

    explicit BasicTensor(Shape s) : shape(s) {
        check_shape_valid(s);
        data.assign(static_cast<std::size_t>(s.numel()), T(0));
    }

    BasicTensor(Shape s, std::vector<T> values) : shape(s), data(std::move(values)) {
        check_shape_valid(s);
        if (static_cast<std::int64_t>(data.size()) != s.numel()) {
            throw std::invalid_argument("tensor data length " + std::to_string(data.size()) +
                                        " does not match shape " + s.str());
        }
    }

    static BasicTensor full(Shape s, T value) {
        BasicTensor t(s);
        for (T& v : t.data) v = value;
        return t;
    }

    static BasicTensor scalar(T value) { return full({1, 1, 1, 1}, value); }

    // rows x cols matrix embedded as (1,1,rows,cols)
    static BasicTensor matrix(int rows, int cols, std::vector<T> values) {
        return BasicTensor({1, 1, rows, cols}, std::move(values));
    }

    std::int64_t numel() const { return shape.numel(); }

    std::size_t index(int in, int ic, int ih, int iw) const {
        return ((static_cast<std::size_t>(in) * shape.c + ic) * shape.h + ih) * shape.w + iw;
    }

    T& at(int in, int ic, int ih, int iw) { return data[index(in, ic, ih, iw)]; }
    T at(int in, int ic, int ih, int iw) const { return data[index(in, ic, ih, iw)]; }

    T item() const {
        if (numel() != 1) {
            throw std::invalid_argument("item() requires a scalar tensor, got " + shape.str());
        }
        return data[0];
    }

    bool all_finite() const {
        for (T v : data) {
            if (!std::isfinite(static_cast<double>(v))) return false;
        }
        return true;
    }

    template <typename U>
    BasicTensor<U> cast() const {
        BasicTensor<U> out(shape);
        for (std::size_t i = 0; i < data.size(); ++i) out.data[i] = static_cast<U>(data[i]);
        return out;
    }
};

using Tensor = BasicTensor<float>;

template <typename T>
double max_abs_diff(const BasicTensor<T>& a, const BasicTensor<T>& b) {
    if (!(a.shape == b.shape)) {
        throw std::invalid_argument("max_abs_diff: shape mismatch " + a.shape.str() + " vs " +
                                    b.shape.str());
    }
    double m = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        double d = std::abs(static_cast<double>(a.data[i]) - static_cast<double>(b.data[i]));
        if (d > m) m = d;
    }
    return m;
}

template <typename T>
bool exactly_equal(const BasicTensor<T>& a, const BasicTensor<T>& b) {
    if (!(a.shape == b.shape)) return false;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        if (a.data[i] != b.data[i]) return false;
    }
    return true;
}

template <typename T>
BasicTensor<T> random_tensor(Shape s, Rng& rng, double lo = -1.0, double hi = 1.0) {
    BasicTensor<T> t(s);
    for (T& v : t.data) v = static_cast<T>(rng.uniform(lo, hi));
    return t;
}

}  // namespace sanet
