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
 * @file config.hpp
 * Run configuration: a flat `section.key = value` text format with `#`
 * comments. Every key is known ahead of time; unknown or duplicate keys are
 * rejected so a typo cannot silently fall back to a default.
 */
#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "qip/data.hpp"
#include "qip/encode.hpp"
#include "qip/errors.hpp"
#include "qip/io.hpp"
#include "qip/observe.hpp"
#include "qip/train.hpp"

namespace qip {

struct run_config {
    // data
    std::size_t data_classes = 10;
    std::size_t data_samples_per_class = 200;
    std::size_t data_input_dim = 8;
    double data_center_scale = 3.0;
    double data_noise_sigma = 1.0;
    double data_train_fraction = 0.7;
    bool data_class_disjoint = false;
    std::string data_images_path; // both set: ingest IDX instead of blobs
    std::string data_labels_path;
    // encoder
    std::string encoder_kind = "amplitude";
    std::size_t encoder_feature_dim = 16;
    std::size_t encoder_n_qubits = 4;
    // observable
    std::string observable_passes = "Z";
    // train
    double train_lambda = 0.5;
    double train_scale_s = 16.0;
    bool train_normalize_quantum = true;
    bool train_detach_targets = false;
    double train_base_lr = 1e-3;
    double train_weight_decay = 1e-4;
    double train_beta1 = 0.9;
    double train_beta2 = 0.999;
    double train_adam_eps = 1e-8;
    std::size_t train_epochs = 20;
    std::size_t train_batch = 64;
    std::vector<std::size_t> train_hidden_dims{32, 32};
    // cluster
    std::size_t cluster_k = 5;
    bool cluster_use_refiner = false;
    std::size_t cluster_refiner_hidden = 8;
    std::size_t cluster_refiner_qubits = 3;
    std::string cluster_refiner_obs = "Z";
    std::size_t cluster_refiner_epochs = 10;
    double cluster_threshold = 0.5;
    std::string cluster_token_space = "quantum"; // or "classical"
    // run
    std::vector<std::uint64_t> run_seeds{1, 2, 3, 4, 5};
    std::string run_out_dir = "out";
    // sweep
    std::vector<double> sweep_lambdas{0.0, 0.1, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0};

    [[nodiscard]] synthetic_spec make_synthetic(std::uint64_t seed) const {
        synthetic_spec s;
        s.n_classes = data_classes;
        s.samples_per_class = data_samples_per_class;
        s.input_dim = data_input_dim;
        s.center_scale = data_center_scale;
        s.noise_sigma = data_noise_sigma;
        s.seed = seed;
        return s;
    }

    [[nodiscard]] encoding_spec make_encoding() const {
        const encoding_kind kind = encoding_kind_from_string(encoder_kind);
        encoding_spec enc;
        switch (kind) {
        case encoding_kind::amplitude:
            enc = encoding_spec::amplitude(encoder_feature_dim);
            if (enc.n_qubits != encoder_n_qubits) {
                throw config_error("encoder.n_qubits must be " + std::to_string(enc.n_qubits) +
                                   " for an amplitude encoder of width " +
                                   std::to_string(encoder_feature_dim));
            }
            break;
        case encoding_kind::phase:
            enc = encoding_spec::phase(encoder_feature_dim, encoder_n_qubits);
            break;
        case encoding_kind::u3:
            enc = encoding_spec::u3(encoder_feature_dim, encoder_n_qubits);
            break;
        }
        return enc;
    }

    [[nodiscard]] train_options make_train_options(double lambda_override) const {
        train_options opt;
        opt.lambda = lambda_override;
        opt.scale_s = train_scale_s;
        opt.normalize_quantum = train_normalize_quantum;
        opt.detach_targets = train_detach_targets;
        opt.base_lr = train_base_lr;
        opt.weight_decay = train_weight_decay;
        opt.beta1 = train_beta1;
        opt.beta2 = train_beta2;
        opt.adam_eps = train_adam_eps;
        opt.validate();
        return opt;
    }

    [[nodiscard]] std::vector<std::size_t> mlp_dims() const {
        std::vector<std::size_t> dims{data_input_dim};
        dims.insert(dims.end(), train_hidden_dims.begin(), train_hidden_dims.end());
        dims.push_back(encoder_feature_dim);
        return dims;
    }

    [[nodiscard]] bool uses_idx() const {
        return !data_images_path.empty() || !data_labels_path.empty();
    }

    void validate() const {
        make_synthetic(1).validate();
        (void)make_encoding();
        (void)observable_spec::parse(observable_passes);
        (void)make_train_options(train_lambda >= 0.0 ? train_lambda : 0.0);
        if (train_lambda < 0.0) {
            throw config_error("train.lambda must be >= 0");
        }
        if (train_epochs < 1 || train_batch < 1) {
            throw config_error("train.epochs and train.batch must be >= 1");
        }
        if (cluster_k < 2) {
            throw config_error("cluster.k must be >= 2");
        }
        if (cluster_threshold < 0.0 || cluster_threshold > 1.0) {
            throw config_error("cluster.threshold must lie in [0, 1]");
        }
        if (cluster_token_space != "quantum" && cluster_token_space != "classical") {
            throw config_error("cluster.token_space must be 'quantum' or 'classical'");
        }
        if (cluster_refiner_hidden < 1 || cluster_refiner_qubits < 1) {
            throw config_error("refiner dims must be positive");
        }
        (void)observable_spec::parse(cluster_refiner_obs);
        if (run_seeds.empty()) {
            throw config_error("run.seeds must not be empty");
        }
        if (sweep_lambdas.empty()) {
            throw config_error("sweep.lambdas must not be empty");
        }
        for (double l : sweep_lambdas) {
            if (l < 0.0) {
                throw config_error("sweep.lambdas must be >= 0");
            }
        }
        if (uses_idx() && (data_images_path.empty() || data_labels_path.empty())) {
            throw config_error("data.images_path and data.labels_path must be set together");
        }
    }
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) {
        return "";
    }
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

inline bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true") {
        return true;
    }
    if (value == "false") {
        return false;
    }
    throw config_error(key + ": expected 'true' or 'false', got '" + value + "'");
}

inline double parse_double(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const double v = std::stod(value, &used);
        if (used != value.size()) {
            throw config_error("");
        }
        return v;
    } catch (const std::exception&) {
        throw config_error(key + ": expected a number, got '" + value + "'");
    }
}

inline std::size_t parse_size(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const long long v = std::stoll(value, &used);
        if (used != value.size() || v < 0) {
            throw config_error("");
        }
        return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
        throw config_error(key + ": expected a non-negative integer, got '" + value + "'");
    }
}

template <typename T, typename F>
std::vector<T> parse_list(const std::string& key, const std::string& value, F&& one) {
    std::vector<T> out;
    if (trim(value).empty()) {
        return out;
    }
    std::size_t pos = 0;
    while (pos <= value.size()) {
        const std::size_t comma = value.find(',', pos);
        const std::string piece =
            trim(value.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos));
        if (piece.empty()) {
            throw config_error(key + ": empty list element");
        }
        out.push_back(one(key, piece));
        if (comma == std::string::npos) {
            break;
        }
        pos = comma + 1;
    }
    return out;
}

} // namespace detail

/// Parses the flat `section.key = value` format. Unknown keys, duplicate
/// keys, malformed lines, and type errors all throw config_error.
inline run_config parse_config(const std::string& text) {
    run_config cfg;
    std::set<std::string> seen;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t nl = text.find('\n', pos);
        std::string line =
            text.substr(pos, nl == std::string::npos ? std::string::npos : nl - pos);
        pos = nl == std::string::npos ? text.size() + 1 : nl + 1;
        ++line_no;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) {
            line = line.substr(0, hash);
        }
        line = detail::trim(line);
        if (line.empty()) {
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw config_error("line " + std::to_string(line_no) + ": expected 'key = value'");
        }
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        if (key.empty()) {
            throw config_error("line " + std::to_string(line_no) + ": empty key");
        }
        if (!seen.insert(key).second) {
            throw config_error("line " + std::to_string(line_no) + ": duplicate key '" + key +
                               "'");
        }
        if (key == "data.classes") {
            cfg.data_classes = detail::parse_size(key, value);
        } else if (key == "data.samples_per_class") {
            cfg.data_samples_per_class = detail::parse_size(key, value);
        } else if (key == "data.input_dim") {
            cfg.data_input_dim = detail::parse_size(key, value);
        } else if (key == "data.center_scale") {
            cfg.data_center_scale = detail::parse_double(key, value);
        } else if (key == "data.noise_sigma") {
            cfg.data_noise_sigma = detail::parse_double(key, value);
        } else if (key == "data.train_fraction") {
            cfg.data_train_fraction = detail::parse_double(key, value);
        } else if (key == "data.class_disjoint") {
            cfg.data_class_disjoint = detail::parse_bool(key, value);
        } else if (key == "data.images_path") {
            cfg.data_images_path = value;
        } else if (key == "data.labels_path") {
            cfg.data_labels_path = value;
        } else if (key == "encoder.kind") {
            cfg.encoder_kind = value;
        } else if (key == "encoder.feature_dim") {
            cfg.encoder_feature_dim = detail::parse_size(key, value);
        } else if (key == "encoder.n_qubits") {
            cfg.encoder_n_qubits = detail::parse_size(key, value);
        } else if (key == "observable.passes") {
            cfg.observable_passes = value;
        } else if (key == "train.lambda") {
            cfg.train_lambda = detail::parse_double(key, value);
        } else if (key == "train.scale_s") {
            cfg.train_scale_s = detail::parse_double(key, value);
        } else if (key == "train.normalize_quantum") {
            cfg.train_normalize_quantum = detail::parse_bool(key, value);
        } else if (key == "train.detach_targets") {
            cfg.train_detach_targets = detail::parse_bool(key, value);
        } else if (key == "train.base_lr") {
            cfg.train_base_lr = detail::parse_double(key, value);
        } else if (key == "train.weight_decay") {
            cfg.train_weight_decay = detail::parse_double(key, value);
        } else if (key == "train.beta1") {
            cfg.train_beta1 = detail::parse_double(key, value);
        } else if (key == "train.beta2") {
            cfg.train_beta2 = detail::parse_double(key, value);
        } else if (key == "train.adam_eps") {
            cfg.train_adam_eps = detail::parse_double(key, value);
        } else if (key == "train.epochs") {
            cfg.train_epochs = detail::parse_size(key, value);
        } else if (key == "train.batch") {
            cfg.train_batch = detail::parse_size(key, value);
        } else if (key == "train.hidden_dims") {
            cfg.train_hidden_dims = detail::parse_list<std::size_t>(key, value, detail::parse_size);
        } else if (key == "cluster.k") {
            cfg.cluster_k = detail::parse_size(key, value);
        } else if (key == "cluster.use_refiner") {
            cfg.cluster_use_refiner = detail::parse_bool(key, value);
        } else if (key == "cluster.refiner_hidden") {
            cfg.cluster_refiner_hidden = detail::parse_size(key, value);
        } else if (key == "cluster.refiner_qubits") {
            cfg.cluster_refiner_qubits = detail::parse_size(key, value);
        } else if (key == "cluster.refiner_obs") {
            cfg.cluster_refiner_obs = value;
        } else if (key == "cluster.refiner_epochs") {
            cfg.cluster_refiner_epochs = detail::parse_size(key, value);
        } else if (key == "cluster.threshold") {
            cfg.cluster_threshold = detail::parse_double(key, value);
        } else if (key == "cluster.token_space") {
            cfg.cluster_token_space = value;
        } else if (key == "run.seeds") {
            cfg.run_seeds = detail::parse_list<std::uint64_t>(
                key, value, [](const std::string& k, const std::string& v) {
                    return static_cast<std::uint64_t>(detail::parse_size(k, v));
                });
        } else if (key == "run.out_dir") {
            cfg.run_out_dir = value;
        } else if (key == "sweep.lambdas") {
            cfg.sweep_lambdas = detail::parse_list<double>(key, value, detail::parse_double);
        } else {
            throw config_error("line " + std::to_string(line_no) + ": unknown key '" + key + "'");
        }
    }
    return cfg;
}

inline run_config load_config(const std::string& path) {
    return parse_config(read_file_bytes(path));
}

} // namespace qip
