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
 * @file data.hpp
 * Dataset plumbing: seeded Gaussian-blob generation, stratified or
 * class-disjoint splits, IDX image ingestion, and the QFV1 binary feature
 * format (little-endian, bitwise-lossless round trips).
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "qip/errors.hpp"
#include "qip/io.hpp"
#include "qip/matrix.hpp"

namespace qip {

struct dataset {
    matrix x;
    std::vector<int> y;

    [[nodiscard]] std::size_t size() const { return x.rows; }
};

// ---------------------------------------------------------------------------
// synthetic generation

struct synthetic_spec {
    std::size_t n_classes = 10;
    std::size_t samples_per_class = 200;
    std::size_t input_dim = 8;
    double center_scale = 3.0;
    double noise_sigma = 1.0;
    std::uint64_t seed = 1;

    void validate() const {
        if (n_classes < 2) {
            throw config_error("synthetic_spec: need at least two classes");
        }
        if (samples_per_class < 1 || input_dim < 1) {
            throw config_error("synthetic_spec: counts must be positive");
        }
        if (center_scale <= 0.0 || noise_sigma < 0.0) {
            throw config_error("synthetic_spec: center_scale > 0 and noise_sigma >= 0 required");
        }
    }
};

/// Class-major Gaussian blobs: C centers ~ center_scale * N(0, I), then each
/// sample = its center + N(0, noise_sigma^2 I). One generator seeded by
/// spec.seed drives every draw, centers first, so datasets are reproducible
/// bitwise.
inline dataset generate_blobs(const synthetic_spec& spec) {
    spec.validate();
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> unit(0.0, 1.0);
    matrix centers(spec.n_classes, spec.input_dim);
    for (double& v : centers.data) {
        v = spec.center_scale * unit(rng);
    }
    dataset out;
    const std::size_t n = spec.n_classes * spec.samples_per_class;
    out.x = matrix(n, spec.input_dim);
    out.y.resize(n);
    std::size_t row = 0;
    for (std::size_t c = 0; c < spec.n_classes; ++c) {
        for (std::size_t s = 0; s < spec.samples_per_class; ++s, ++row) {
            out.y[row] = static_cast<int>(c);
            for (std::size_t t = 0; t < spec.input_dim; ++t) {
                out.x(row, t) = centers(c, t) + spec.noise_sigma * unit(rng);
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// splits

struct split_result {
    dataset train;
    dataset test;
};

namespace detail {

inline dataset gather(const dataset& d, std::span<const std::size_t> rows) {
    dataset out;
    out.x = matrix(rows.size(), d.x.cols);
    out.y.resize(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto src = d.x.row(rows[i]);
        std::copy(src.begin(), src.end(), out.x.row(i).begin());
        out.y[i] = d.y[rows[i]];
    }
    return out;
}

} // namespace detail

/// Per-class shuffled split: round(fraction * class size) rows of every
/// class go to train. With class_disjoint set, the split is by identity
/// instead (the held-out protocol for clustering unseen classes): classes
/// 0 .. C/2-1 train, the rest test, and fraction is ignored.
inline split_result stratified_split(const dataset& d, double train_fraction, std::uint64_t seed,
                                     bool class_disjoint = false) {
    if (d.x.rows != d.y.size() || d.x.rows == 0) {
        throw std::invalid_argument("stratified_split: empty or inconsistent dataset");
    }
    if (!class_disjoint && (train_fraction <= 0.0 || train_fraction >= 1.0)) {
        throw std::invalid_argument("stratified_split: fraction must lie strictly inside (0, 1)");
    }
    int max_label = 0;
    for (int y : d.y) {
        if (y < 0) {
            throw std::invalid_argument("stratified_split: negative label");
        }
        max_label = std::max(max_label, y);
    }
    std::vector<std::vector<std::size_t>> per_class(static_cast<std::size_t>(max_label) + 1);
    for (std::size_t i = 0; i < d.y.size(); ++i) {
        per_class[static_cast<std::size_t>(d.y[i])].push_back(i);
    }
    std::vector<std::size_t> train_rows;
    std::vector<std::size_t> test_rows;
    if (class_disjoint) {
        const std::size_t cut = per_class.size() / 2;
        for (std::size_t c = 0; c < per_class.size(); ++c) {
            auto& dst = c < cut ? train_rows : test_rows;
            dst.insert(dst.end(), per_class[c].begin(), per_class[c].end());
        }
    } else {
        std::mt19937_64 rng(seed);
        for (auto& rows : per_class) {
            std::shuffle(rows.begin(), rows.end(), rng);
            const auto n_train = static_cast<std::size_t>(
                std::llround(train_fraction * static_cast<double>(rows.size())));
            for (std::size_t i = 0; i < rows.size(); ++i) {
                (i < n_train ? train_rows : test_rows).push_back(rows[i]);
            }
        }
    }
    return {detail::gather(d, train_rows), detail::gather(d, test_rows)};
}

// ---------------------------------------------------------------------------
// IDX image files

namespace detail {
inline constexpr std::uint32_t idx_image_magic = 0x00000803;
inline constexpr std::uint32_t idx_label_magic = 0x00000801;
} // namespace detail

/// Reads an IDX image/label pair: big-endian headers, unsigned-byte pixels
/// flattened row-major and scaled to [0, 1].
inline dataset load_idx(const std::string& images_path, const std::string& labels_path) {
    byte_reader images(read_file_bytes(images_path));
    if (images.u32_be() != detail::idx_image_magic) {
        throw data_error(data_error::kind::bad_magic,
                         "'" + images_path + "': not an IDX image file");
    }
    const std::uint32_t n_images = images.u32_be();
    const std::uint32_t rows = images.u32_be();
    const std::uint32_t cols = images.u32_be();
    if (rows == 0 || cols == 0 || rows > 4096 || cols > 4096) {
        throw data_error(data_error::kind::overflow,
                         "'" + images_path + "': implausible image shape");
    }
    byte_reader labels(read_file_bytes(labels_path));
    if (labels.u32_be() != detail::idx_label_magic) {
        throw data_error(data_error::kind::bad_magic,
                         "'" + labels_path + "': not an IDX label file");
    }
    const std::uint32_t n_labels = labels.u32_be();
    if (n_images != n_labels) {
        throw data_error(data_error::kind::count_mismatch,
                         "image count " + std::to_string(n_images) + " != label count " +
                             std::to_string(n_labels));
    }
    dataset out;
    const std::size_t dim = std::size_t{rows} * cols;
    out.x = matrix(n_images, dim);
    out.y.resize(n_images);
    for (std::size_t i = 0; i < n_images; ++i) {
        for (std::size_t t = 0; t < dim; ++t) {
            out.x(i, t) = static_cast<double>(images.u8()) / 255.0;
        }
        out.y[i] = static_cast<int>(labels.u8());
    }
    if (!images.exhausted() || !labels.exhausted()) {
        throw data_error(data_error::kind::count_mismatch, "IDX payload longer than its header");
    }
    return out;
}

// ---------------------------------------------------------------------------
// QFV1 feature files

namespace detail {
inline constexpr char feature_magic[4] = {'Q', 'F', 'V', '1'};
}

/// Versioned little-endian feature container: magic, u32 rows/cols, a label
/// presence byte, f64 row-major payload, then u32 labels when present.
inline std::string serialize_features(const matrix& x, std::span<const int> labels = {}) {
    if (!labels.empty() && labels.size() != x.rows) {
        throw std::invalid_argument("serialize_features: one label per row");
    }
    for (int y : labels) {
        if (y < 0) {
            throw std::invalid_argument("serialize_features: labels must be non-negative");
        }
    }
    byte_writer w;
    w.bytes(detail::feature_magic, 4);
    w.u32(static_cast<std::uint32_t>(x.rows));
    w.u32(static_cast<std::uint32_t>(x.cols));
    w.u8(labels.empty() ? 0 : 1);
    for (double v : x.data) {
        w.f64(v);
    }
    for (int y : labels) {
        w.u32(static_cast<std::uint32_t>(y));
    }
    return w.str();
}

inline void save_features(const std::string& path, const matrix& x,
                          std::span<const int> labels = {}) {
    atomic_write_file(path, serialize_features(x, labels));
}

struct feature_file {
    matrix x;
    std::vector<int> labels; // empty when the file carries none
    bool has_labels = false;
};

inline feature_file deserialize_features(const std::string& bytes) {
    byte_reader r(bytes);
    if (r.bytes(4) != std::string(detail::feature_magic, 4)) {
        throw data_error(data_error::kind::bad_version, "feature file: bad magic, expected QFV1");
    }
    const std::uint32_t rows = r.u32();
    const std::uint32_t cols = r.u32();
    if (static_cast<std::uint64_t>(rows) * cols > (std::uint64_t{1} << 28)) {
        throw data_error(data_error::kind::overflow, "feature file: implausible dimensions");
    }
    feature_file out;
    out.has_labels = r.u8() != 0;
    out.x = matrix(rows, cols);
    for (double& v : out.x.data) {
        v = r.f64();
    }
    if (out.has_labels) {
        out.labels.resize(rows);
        for (int& y : out.labels) {
            y = static_cast<int>(r.u32());
        }
    }
    if (!r.exhausted()) {
        throw data_error(data_error::kind::count_mismatch,
                         "feature file: payload longer than its header");
    }
    return out;
}

inline feature_file load_features(const std::string& path) {
    return deserialize_features(read_file_bytes(path));
}

// ---------------------------------------------------------------------------
// CSV export

/// Features (and labels when given) as CSV for external plotting. Doubles
/// render with %.17g so the text round-trips the exact values.
inline std::string features_to_csv(const matrix& x, std::span<const int> labels = {}) {
    if (!labels.empty() && labels.size() != x.rows) {
        throw std::invalid_argument("features_to_csv: one label per row");
    }
    std::string out;
    for (std::size_t c = 0; c < x.cols; ++c) {
        out += c == 0 ? "x0" : ", x" + std::to_string(c);
    }
    if (!labels.empty()) {
        out += x.cols == 0 ? "label" : ", label";
    }
    out += "\n";
    char cell[64];
    for (std::size_t r = 0; r < x.rows; ++r) {
        for (std::size_t c = 0; c < x.cols; ++c) {
            std::snprintf(cell, sizeof(cell), c == 0 ? "%.17g" : ", %.17g", x(r, c));
            out += cell;
        }
        if (!labels.empty()) {
            std::snprintf(cell, sizeof(cell), x.cols == 0 ? "%d" : ", %d", labels[r]);
            out += cell;
        }
        out += "\n";
    }
    return out;
}

} // namespace qip
