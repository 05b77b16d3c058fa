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
 * @file numeric.hpp
 * Shared numerical helpers: stable softmax / log-sum-exp and feature
 * normalization with the library-wide floors.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace qip {

/// Floor on the target distribution inside KL logs.
inline constexpr double kl_epsilon = 1e-12;

/// Floor on vector norms during feature normalization.
inline constexpr double feature_norm_floor = 1e-12;

/// max_j x_j + log sum_j exp(x_j - max).
inline double log_sum_exp(std::span<const double> x) {
    if (x.empty()) {
        throw std::invalid_argument("log_sum_exp: empty input");
    }
    const double m = *std::max_element(x.begin(), x.end());
    double s = 0.0;
    for (double v : x) {
        s += std::exp(v - m);
    }
    return m + std::log(s);
}

inline std::vector<double> softmax(std::span<const double> x) {
    const double lse = log_sum_exp(x);
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        out[i] = std::exp(x[i] - lse);
    }
    return out;
}

/// v <- v / max(|v|, floor). Returns the pre-normalization norm.
inline double normalize_in_place(std::span<double> v, double floor) {
    double n = 0.0;
    for (double x : v) {
        n += x * x;
    }
    n = std::sqrt(n);
    const double div = std::max(n, floor);
    for (double& x : v) {
        x /= div;
    }
    return n;
}

} // namespace qip
