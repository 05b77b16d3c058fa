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
 * @file experiments.hpp
 * End-to-end experiment orchestration shared by the command-line driver and
 * the integration suite: dataset construction per config and seed, training
 * runs at a chosen mixing weight, feature extraction into the classical and
 * quantum spaces, and a full clustering evaluation (proposals, optional
 * refiner, assembly, metrics) over both spaces.
 */
#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "qip/cluster.hpp"
#include "qip/config.hpp"
#include "qip/data.hpp"
#include "qip/encode.hpp"
#include "qip/matrix.hpp"
#include "qip/observe.hpp"
#include "qip/train.hpp"

namespace qip {

struct experiment_dataset {
    dataset train;
    dataset test;
    std::size_t n_classes = 0; // classes present in the training split
};

/// Synthetic blobs (or the configured IDX pair) split per the config. The
/// seed drives both generation and the split, so one (config, seed) pair
/// names one dataset.
inline experiment_dataset build_dataset(const run_config& cfg, std::uint64_t seed) {
    dataset full = cfg.uses_idx() ? load_idx(cfg.data_images_path, cfg.data_labels_path)
                                  : generate_blobs(cfg.make_synthetic(seed));
    split_result split =
        stratified_split(full, cfg.data_train_fraction, seed, cfg.data_class_disjoint);
    experiment_dataset out;
    out.train = std::move(split.train);
    out.test = std::move(split.test);
    int max_label = 0;
    for (int y : out.train.y) {
        max_label = std::max(max_label, y);
    }
    out.n_classes = static_cast<std::size_t>(max_label) + 1;
    return out;
}

struct trained_run {
    train_state state;
    std::vector<step_record> history;
};

/// One full training run at the given mixing weight on the seed's dataset.
inline trained_run train_run(const run_config& cfg, const experiment_dataset& data,
                             std::uint64_t seed, double lambda) {
    trained_run run;
    run.state = init_train_state(cfg.mlp_dims(), data.n_classes, cfg.make_encoding(),
                                 observable_spec::parse(cfg.observable_passes),
                                 cfg.make_train_options(lambda), seed);
    run.history = fit(run.state, data.train.x, data.train.y, cfg.train_epochs, cfg.train_batch);
    return run;
}

/// Rows of quantum_map over the rows of v (raw measurements; cosine-based
/// clustering is scale-free, so no per-row normalization is applied here).
inline matrix quantum_features(const train_state& st, const matrix& v) {
    const std::size_t m = st.obs.output_dim(st.enc.n_qubits);
    matrix q(v.rows, m);
    for (std::size_t i = 0; i < v.rows; ++i) {
        const quantum_feature qf = quantum_map(v.row(i), st.enc, st.obs);
        for (std::size_t k = 0; k < m; ++k) {
            q(i, k) = qf.values[k];
        }
    }
    return q;
}

struct space_eval {
    pair_metrics pair;
    bcubed_metrics bcubed;
};

/// Replaces each proposal's member rows with rows of `tokens` (used when
/// the neighbor structure and the refiner's token features come from
/// different spaces).
inline void retoken_proposals(std::vector<cluster_proposal>& proposals, const matrix& tokens) {
    for (cluster_proposal& prop : proposals) {
        prop.member_features = matrix(prop.member_indices.size(), tokens.cols);
        for (std::size_t t = 0; t < prop.member_indices.size(); ++t) {
            const auto src = tokens.row(prop.member_indices[t]);
            std::copy(src.begin(), src.end(), prop.member_features.row(t).begin());
        }
    }
}

/// Proposals, optional refiner, assembly, metrics for one feature space.
/// Neighbors come from `sim_feats`; refiner tokens come from `token_feats`
/// (the same matrix in the default setup). Without the refiner every
/// proposed link is kept. With it, a fresh refiner is trained on the
/// training-split proposals (labels known there) and its keep probabilities
/// gate the test-split links.
inline space_eval evaluate_space(const matrix& sim_feats, const matrix& token_feats,
                                 std::span<const int> test_labels, const run_config& cfg,
                                 const matrix* train_sim, const matrix* train_tokens,
                                 std::span<const int> train_labels, std::uint64_t seed) {
    const std::size_t k = std::min<std::size_t>(cfg.cluster_k, sim_feats.rows);
    std::vector<cluster_proposal> proposals = knn_clusters(sim_feats, k);
    std::vector<std::vector<double>> keep;
    keep.reserve(proposals.size());
    if (cfg.cluster_use_refiner) {
        if (train_sim == nullptr || train_tokens == nullptr) {
            throw std::invalid_argument("evaluate_space: refiner needs training features");
        }
        retoken_proposals(proposals, token_feats);
        relativize_to_center(proposals);
        const std::size_t train_k = std::min<std::size_t>(cfg.cluster_k, train_sim->rows);
        std::vector<cluster_proposal> train_props = knn_clusters(*train_sim, train_k);
        retoken_proposals(train_props, *train_tokens);
        relativize_to_center(train_props);
        refiner_model model =
            init_refiner(token_feats.cols, cfg.cluster_refiner_hidden, cfg.cluster_refiner_qubits,
                         cfg.cluster_refiner_obs, seed);
        train_refiner(model, train_props, train_labels, cfg.cluster_refiner_epochs);
        for (const cluster_proposal& prop : proposals) {
            keep.push_back(refine(prop, model));
        }
    } else {
        for (const cluster_proposal& prop : proposals) {
            keep.emplace_back(prop.member_indices.size(), 1.0);
        }
    }
    const std::vector<int> pred =
        assemble_clusters(proposals, keep, sim_feats.rows, cfg.cluster_threshold);
    space_eval out;
    out.pair = pairwise_f(pred, test_labels);
    out.bcubed = bcubed_f(pred, test_labels);
    return out;
}

struct cluster_report {
    space_eval classical;
    space_eval quantum;
};

/// Extracts v (and q) on the held-out split and scores k-NN clustering in
/// both spaces. cluster.token_space picks what the quantum-space refiner
/// reads as tokens: the quantum measurements themselves (default) or the
/// classical features behind them; the classical-space baseline always
/// consumes classical tokens.
inline cluster_report evaluate_clustering(const train_state& st, const experiment_dataset& data,
                                          const run_config& cfg) {
    const matrix v_test = forward_features(st.net, data.test.x);
    const matrix q_test = quantum_features(st, v_test);
    const bool quantum_tokens = cfg.cluster_token_space == "quantum";
    matrix v_train;
    matrix q_train;
    const matrix* v_train_ptr = nullptr;
    const matrix* q_train_ptr = nullptr;
    if (cfg.cluster_use_refiner) {
        v_train = forward_features(st.net, data.train.x);
        q_train = quantum_features(st, v_train);
        v_train_ptr = &v_train;
        q_train_ptr = &q_train;
    }
    cluster_report out;
    out.classical = evaluate_space(v_test, v_test, data.test.y, cfg, v_train_ptr, v_train_ptr,
                                   data.train.y, st.seed);
    out.quantum = evaluate_space(q_test, quantum_tokens ? q_test : v_test, data.test.y, cfg,
                                 q_train_ptr, quantum_tokens ? q_train_ptr : v_train_ptr,
                                 data.train.y, st.seed);
    return out;
}

/// Mean of a field across runs (tiny helper for seed aggregation).
inline double mean_of(std::span<const double> xs) {
    double acc = 0.0;
    for (double x : xs) {
        acc += x;
    }
    return xs.empty() ? 0.0 : acc / static_cast<double>(xs.size());
}

} // namespace qip
