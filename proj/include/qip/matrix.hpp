// Copyright 2026 The qipkit Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at

//     http://www.apache.org/licenses/LICENSE-2.0

// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

/**
 * @file matrix.hpp
 * Dense row-major matrix of doubles. Deliberately minimal: storage, row
 * views and a handful of vector helpers shared across modules. All heavy
 * numerics in this library are explicit loops at the call site.
 */
#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace qip {

struct matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    matrix() = default;
    matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    [[nodiscard]] std::span<double> row(std::size_t r) {
        if (r >= rows) {
            throw std::out_of_range("matrix row index out of range");
        }
        return {data.data() + r * cols, cols};
    }
    [[nodiscard]] std::span<const double> row(std::size_t r) const {
        if (r >= rows) {
            throw std::out_of_range("matrix row index out of range");
        }
        return {data.data() + r * cols, cols};
    }

    [[nodiscard]] bool same_shape(const matrix& other) const noexcept {
        return rows == other.rows && cols == other.cols;
    }
};

inline double dot(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw std::invalid_argument("dot: length mismatch");
    }
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        s += a[i] * b[i];
    }
    return s;
}

inline double norm2(std::span<const double> a) {
    double s = 0.0;
    for (double x : a) {
        s += x * x;
    }
    return std::sqrt(s);
}

/// Column j of a row-major matrix, gathered into a fresh vector.
inline std::vector<double> column_of(const matrix& m, std::size_t j) {
    if (j >= m.cols) {
        throw std::out_of_range("column_of: column index out of range");
    }
    std::vector<double> c(m.rows);
    for (std::size_t r = 0; r < m.rows; ++r) {
        c[r] = m(r, j);
    }
    return c;
}

} // namespace qip
