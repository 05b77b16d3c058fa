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
 * @file cluster.hpp
 * Clustering evaluation pipeline: k-nearest-neighbor cluster proposals over
 * a feature matrix, a one-block quantum-attention refiner that scores each
 * proposal member as same-class-as-center, threshold linking into final
 * clusters, and Pairwise / BCubed F metrics.
 *
 * The refiner projects each member token, produces Query / Key / Value
 * vectors by measuring a u3-encoded state per head, runs classical scaled
 * dot-product attention over the proposal's tokens, and reads out one
 * logistic keep probability per member. Training is binary cross-entropy
 * against [member label == center label] with gradients flowing through the
 * three quantum maps, using the same optimizer and schedule as the feature
 * trainer.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "qip/encode.hpp"
#include "qip/errors.hpp"
#include "qip/matrix.hpp"
#include "qip/numeric.hpp"
#include "qip/observe.hpp"
#include "qip/train.hpp"

namespace qip {

// ---------------------------------------------------------------------------
// proposals

struct cluster_proposal {
    std::size_t center_index = 0;
    std::vector<std::size_t> member_indices; // center first, then nearest
    matrix member_features;                  // k x m, rows follow member order
};

/// Brute-force cosine k-nearest-neighbor proposals, one per sample. The
/// center leads its own member list; the remaining k - 1 slots are the most
/// similar other samples, ties broken toward the lower index.
inline std::vector<cluster_proposal> knn_clusters(const matrix& features, std::size_t k) {
    const std::size_t n = features.rows;
    if (k < 2 || k > n) {
        throw std::invalid_argument("knn_clusters: k must be in [2, N]");
    }
    for (double v : features.data) {
        if (!std::isfinite(v)) {
            throw std::invalid_argument("knn_clusters: non-finite feature");
        }
    }
    std::vector<double> norms(n);
    for (std::size_t i = 0; i < n; ++i) {
        norms[i] = std::max(norm2(features.row(i)), feature_norm_floor);
    }
    std::vector<cluster_proposal> proposals;
    proposals.reserve(n);
    std::vector<std::pair<double, std::size_t>> ranked;
    for (std::size_t i = 0; i < n; ++i) {
        ranked.clear();
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) {
                continue;
            }
            ranked.emplace_back(dot(features.row(i), features.row(j)) / (norms[i] * norms[j]), j);
        }
        std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
            if (a.first != b.first) {
                return a.first > b.first;
            }
            return a.second < b.second;
        });
        cluster_proposal prop;
        prop.center_index = i;
        prop.member_indices.push_back(i);
        for (std::size_t t = 0; t + 1 < k; ++t) {
            prop.member_indices.push_back(ranked[t].second);
        }
        prop.member_features = matrix(k, features.cols);
        for (std::size_t t = 0; t < k; ++t) {
            const auto src = features.row(prop.member_indices[t]);
            std::copy(src.begin(), src.end(), prop.member_features.row(t).begin());
        }
        proposals.push_back(std::move(prop));
    }
    return proposals;
}

/// Rewrites each proposal's member rows as offsets from its center row.
/// The attention block is permutation equivariant, so with absolute tokens
/// it has no way to tell which token is the center and the keep predicate
/// collapses to the base rate; center-relative tokens make it expressible.
/// Idempotent: the center row becomes zero and stays zero.
inline void relativize_to_center(std::span<cluster_proposal> proposals) {
    for (cluster_proposal& prop : proposals) {
        const std::vector<double> center(prop.member_features.row(0).begin(),
                                         prop.member_features.row(0).end());
        for (std::size_t t = 0; t < prop.member_features.rows; ++t) {
            auto row = prop.member_features.row(t);
            for (std::size_t c = 0; c < row.size(); ++c) {
                row[c] -= center[c];
            }
        }
    }
}

// ---------------------------------------------------------------------------
// refiner

struct refiner_model {
    matrix proj_w;              // hidden x input
    std::vector<double> proj_b; // hidden
    encoding_spec enc_q;        // u3 specs over the projected tokens
    encoding_spec enc_k;
    encoding_spec enc_v;
    observable_spec obs;        // shared measurement basis for all heads
    std::vector<double> head_w; // measured-vector length
    double head_b = 0.0;
    std::vector<double> m_moments; // optimizer state, parameter block order
    std::vector<double> v_moments;
    std::size_t step = 0;
    std::size_t total_steps = 0;
    std::uint64_t seed = 0;

    [[nodiscard]] std::size_t input_dim() const { return proj_w.cols; }
    [[nodiscard]] std::size_t hidden_dim() const { return proj_w.rows; }
    [[nodiscard]] std::size_t measured_dim() const { return obs.output_dim(enc_q.n_qubits); }

    void validate() const {
        if (proj_w.rows == 0 || proj_w.cols == 0 || proj_b.size() != proj_w.rows) {
            throw config_error("refiner: projection shape mismatch");
        }
        for (const encoding_spec* e : {&enc_q, &enc_k, &enc_v}) {
            e->validate();
            if (e->kind != encoding_kind::u3) {
                throw config_error("refiner: heads must be u3 encoders");
            }
            if (e->feature_dim != hidden_dim()) {
                throw config_error("refiner: head encoder width must match the projection");
            }
            if (e->n_qubits != enc_q.n_qubits) {
                throw config_error("refiner: heads must share a qubit count");
            }
        }
        if (head_w.size() != measured_dim()) {
            throw config_error("refiner: output head must match the measured length");
        }
        auto finite = [](std::span<const double> xs) {
            return std::all_of(xs.begin(), xs.end(), [](double x) { return std::isfinite(x); });
        };
        if (!finite(proj_w.data) || !finite(proj_b) || !finite(head_w) ||
            !std::isfinite(head_b)) {
            throw config_error("refiner: non-finite parameter");
        }
    }
};

inline std::size_t refiner_parameter_count(const refiner_model& model) {
    return model.proj_w.data.size() + model.proj_b.size() + model.enc_q.pqc_params.size() +
           model.enc_k.pqc_params.size() + model.enc_v.pqc_params.size() + model.head_w.size() +
           1;
}

/// Fresh refiner: He projection, block angles seeded uniform like the
/// encoder trainer, small random output head so token gradients are live
/// from the first step.
inline refiner_model init_refiner(std::size_t input_dim, std::size_t hidden_dim,
                                  std::size_t n_qubits, const std::string& obs_str,
                                  std::uint64_t seed) {
    if (input_dim == 0 || hidden_dim == 0) {
        throw config_error("refiner: zero width");
    }
    refiner_model model;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> he(0.0, std::sqrt(2.0 / static_cast<double>(input_dim)));
    model.proj_w = matrix(hidden_dim, input_dim);
    for (double& x : model.proj_w.data) {
        x = he(rng);
    }
    model.proj_b.assign(hidden_dim, 0.0);
    model.enc_q = encoding_spec::u3(hidden_dim, n_qubits);
    model.enc_k = encoding_spec::u3(hidden_dim, n_qubits);
    model.enc_v = encoding_spec::u3(hidden_dim, n_qubits);
    seed_pqc_params(model.enc_q, rng());
    seed_pqc_params(model.enc_k, rng());
    seed_pqc_params(model.enc_v, rng());
    model.obs = observable_spec::parse(obs_str);
    const std::size_t m_r = model.obs.output_dim(n_qubits);
    std::normal_distribution<double> g(0.0, 1.0 / std::sqrt(static_cast<double>(m_r)));
    model.head_w.resize(m_r);
    for (double& x : model.head_w) {
        x = g(rng);
    }
    model.head_b = 0.0;
    model.seed = seed;
    model.m_moments.assign(refiner_parameter_count(model), 0.0);
    model.v_moments.assign(refiner_parameter_count(model), 0.0);
    model.validate();
    return model;
}

namespace detail {

struct refiner_forward {
    matrix tokens; // k x hidden, projected members
    matrix q;      // k x m_r
    matrix kk;
    matrix v;
    matrix scores; // k x k, pre-softmax
    matrix attn;   // k x k, row-stochastic
    matrix out;    // k x m_r
    std::vector<double> logits;
    std::vector<double> probs;
};

inline refiner_forward refiner_forward_pass(const cluster_proposal& proposal,
                                            const refiner_model& model) {
    const std::size_t k = proposal.member_features.rows;
    if (k == 0) {
        throw std::invalid_argument("refine: empty proposal");
    }
    if (proposal.member_features.cols != model.input_dim()) {
        throw std::invalid_argument("refine: token width does not match the projection");
    }
    const std::size_t h = model.hidden_dim();
    const std::size_t m_r = model.measured_dim();

    refiner_forward fw;
    fw.tokens = matrix(k, h);
    for (std::size_t t = 0; t < k; ++t) {
        for (std::size_t o = 0; o < h; ++o) {
            double acc = model.proj_b[o];
            for (std::size_t c = 0; c < model.input_dim(); ++c) {
                acc += model.proj_w(o, c) * proposal.member_features(t, c);
            }
            fw.tokens(t, o) = acc;
        }
    }
    fw.q = matrix(k, m_r);
    fw.kk = matrix(k, m_r);
    fw.v = matrix(k, m_r);
    for (std::size_t t = 0; t < k; ++t) {
        const auto qv = quantum_map(fw.tokens.row(t), model.enc_q, model.obs);
        const auto kv = quantum_map(fw.tokens.row(t), model.enc_k, model.obs);
        const auto vv = quantum_map(fw.tokens.row(t), model.enc_v, model.obs);
        for (std::size_t c = 0; c < m_r; ++c) {
            fw.q(t, c) = qv.values[c];
            fw.kk(t, c) = kv.values[c];
            fw.v(t, c) = vv.values[c];
        }
    }
    const double scale = 1.0 / std::sqrt(static_cast<double>(m_r));
    fw.scores = matrix(k, k);
    for (std::size_t a = 0; a < k; ++a) {
        for (std::size_t b = 0; b < k; ++b) {
            fw.scores(a, b) = scale * dot(fw.q.row(a), fw.kk.row(b));
        }
    }
    fw.attn = matrix(k, k);
    for (std::size_t a = 0; a < k; ++a) {
        const std::vector<double> row = softmax(fw.scores.row(a));
        std::copy(row.begin(), row.end(), fw.attn.row(a).begin());
    }
    fw.out = matrix(k, m_r);
    for (std::size_t a = 0; a < k; ++a) {
        for (std::size_t c = 0; c < m_r; ++c) {
            double acc = 0.0;
            for (std::size_t b = 0; b < k; ++b) {
                acc += fw.attn(a, b) * fw.v(b, c);
            }
            fw.out(a, c) = acc;
        }
    }
    fw.logits.resize(k);
    fw.probs.resize(k);
    for (std::size_t t = 0; t < k; ++t) {
        fw.logits[t] = dot(fw.out.row(t), model.head_w) + model.head_b;
        fw.probs[t] = 1.0 / (1.0 + std::exp(-fw.logits[t]));
    }
    return fw;
}

} // namespace detail

/// Per-member probability that the member belongs to the center's class.
inline std::vector<double> refine(const cluster_proposal& proposal, const refiner_model& model) {
    return detail::refiner_forward_pass(proposal, model).probs;
}

// ---------------------------------------------------------------------------
// refiner training

struct refiner_gradients {
    matrix proj_w;
    std::vector<double> proj_b;
    std::vector<double> pqc_q;
    std::vector<double> pqc_k;
    std::vector<double> pqc_v;
    std::vector<double> head_w;
    double head_b = 0.0;
};

inline refiner_gradients zero_refiner_gradients(const refiner_model& model) {
    refiner_gradients g;
    g.proj_w = matrix(model.proj_w.rows, model.proj_w.cols);
    g.proj_b.assign(model.proj_b.size(), 0.0);
    g.pqc_q.assign(model.enc_q.pqc_params.size(), 0.0);
    g.pqc_k.assign(model.enc_k.pqc_params.size(), 0.0);
    g.pqc_v.assign(model.enc_v.pqc_params.size(), 0.0);
    g.head_w.assign(model.head_w.size(), 0.0);
    return g;
}

/// Same pinned visiting order as the trainer: projection, the three head
/// angle blocks, then the output head.
template <typename Model, typename Grads, typename F>
void visit_refiner_blocks(Model& model, Grads& grads, F&& f) {
    std::size_t off = 0;
    f("refiner.proj.w", std::span(model.proj_w.data), std::span(grads.proj_w.data), off);
    off += model.proj_w.data.size();
    f("refiner.proj.b", std::span(model.proj_b), std::span(grads.proj_b), off);
    off += model.proj_b.size();
    f("refiner.q.pqc", std::span(model.enc_q.pqc_params), std::span(grads.pqc_q), off);
    off += model.enc_q.pqc_params.size();
    f("refiner.k.pqc", std::span(model.enc_k.pqc_params), std::span(grads.pqc_k), off);
    off += model.enc_k.pqc_params.size();
    f("refiner.v.pqc", std::span(model.enc_v.pqc_params), std::span(grads.pqc_v), off);
    off += model.enc_v.pqc_params.size();
    f("refiner.head.w", std::span(model.head_w), std::span(grads.head_w), off);
    off += model.head_w.size();
    f("refiner.head.b", std::span(&model.head_b, 1), std::span(&grads.head_b, 1), off);
}

/// Mean binary cross-entropy over the proposal's member tokens against
/// targets [member label == center label], with gradients for every block.
/// The logit form of the loss keeps both branches stable.
inline double refiner_loss_and_gradients(const refiner_model& model,
                                         const cluster_proposal& proposal,
                                         std::span<const int> labels,
                                         refiner_gradients& grads) {
    const detail::refiner_forward fw = detail::refiner_forward_pass(proposal, model);
    const std::size_t k = proposal.member_features.rows;
    const std::size_t m_r = model.measured_dim();
    const std::size_t h = model.hidden_dim();
    for (std::size_t idx : proposal.member_indices) {
        if (idx >= labels.size()) {
            throw std::invalid_argument("refiner: member index outside the label array");
        }
    }
    const int center_label = labels[proposal.center_index];
    double loss = 0.0;
    std::vector<double> z_bar(k);
    for (std::size_t t = 0; t < k; ++t) {
        const double y = labels[proposal.member_indices[t]] == center_label ? 1.0 : 0.0;
        const double z = fw.logits[t];
        loss += std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));
        z_bar[t] = (fw.probs[t] - y) / static_cast<double>(k);
    }
    loss /= static_cast<double>(k);

    // head and attention-output cotangents
    matrix out_bar(k, m_r);
    for (std::size_t t = 0; t < k; ++t) {
        grads.head_b += z_bar[t];
        for (std::size_t c = 0; c < m_r; ++c) {
            grads.head_w[c] += z_bar[t] * fw.out(t, c);
            out_bar(t, c) = z_bar[t] * model.head_w[c];
        }
    }
    // out = attn v
    matrix v_bar(k, m_r);
    matrix attn_bar(k, k);
    for (std::size_t a = 0; a < k; ++a) {
        for (std::size_t b = 0; b < k; ++b) {
            double acc = 0.0;
            for (std::size_t c = 0; c < m_r; ++c) {
                acc += out_bar(a, c) * fw.v(b, c);
                // v_bar accumulates attn^T out_bar below
            }
            attn_bar(a, b) = acc;
        }
    }
    for (std::size_t b = 0; b < k; ++b) {
        for (std::size_t c = 0; c < m_r; ++c) {
            double acc = 0.0;
            for (std::size_t a = 0; a < k; ++a) {
                acc += fw.attn(a, b) * out_bar(a, c);
            }
            v_bar(b, c) = acc;
        }
    }
    // softmax rows: s_bar = attn * (attn_bar - rowdot)
    matrix score_bar(k, k);
    for (std::size_t a = 0; a < k; ++a) {
        double rowdot = 0.0;
        for (std::size_t b = 0; b < k; ++b) {
            rowdot += attn_bar(a, b) * fw.attn(a, b);
        }
        for (std::size_t b = 0; b < k; ++b) {
            score_bar(a, b) = fw.attn(a, b) * (attn_bar(a, b) - rowdot);
        }
    }
    // scores = scale q kk^T
    const double scale = 1.0 / std::sqrt(static_cast<double>(m_r));
    matrix q_bar(k, m_r);
    matrix kk_bar(k, m_r);
    for (std::size_t a = 0; a < k; ++a) {
        for (std::size_t b = 0; b < k; ++b) {
            const double g = scale * score_bar(a, b);
            if (g == 0.0) {
                continue;
            }
            for (std::size_t c = 0; c < m_r; ++c) {
                q_bar(a, c) += g * fw.kk(b, c);
                kk_bar(b, c) += g * fw.q(a, c);
            }
        }
    }
    // through the three quantum maps into tokens and block angles
    matrix token_bar(k, h);
    for (std::size_t t = 0; t < k; ++t) {
        const auto add_head = [&](const encoding_spec& enc, const matrix& bar,
                                  std::vector<double>& pqc_grad) {
            const quantum_map_vjp_result vjp =
                quantum_map_vjp(fw.tokens.row(t), enc, model.obs, bar.row(t));
            for (std::size_t o = 0; o < h; ++o) {
                token_bar(t, o) += vjp.wrt_input[o];
            }
            for (std::size_t p = 0; p < pqc_grad.size(); ++p) {
                pqc_grad[p] += vjp.wrt_pqc[p];
            }
        };
        add_head(model.enc_q, q_bar, grads.pqc_q);
        add_head(model.enc_k, kk_bar, grads.pqc_k);
        add_head(model.enc_v, v_bar, grads.pqc_v);
    }
    // projection
    for (std::size_t t = 0; t < k; ++t) {
        for (std::size_t o = 0; o < h; ++o) {
            const double g = token_bar(t, o);
            grads.proj_b[o] += g;
            for (std::size_t c = 0; c < model.input_dim(); ++c) {
                grads.proj_w(o, c) += g * proposal.member_features(t, c);
            }
        }
    }
    return loss;
}

struct refiner_step_record {
    std::size_t step = 0;
    double lr = 0.0;
    double bce = 0.0;
};

struct refiner_train_options {
    double base_lr = 5e-3;
    double weight_decay = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
};

/// One proposal per optimizer step, shuffled per epoch from the model's
/// seed. Zero epochs leaves the model untouched.
inline std::vector<refiner_step_record> train_refiner(refiner_model& model,
                                                      std::span<const cluster_proposal> proposals,
                                                      std::span<const int> labels,
                                                      std::size_t epochs,
                                                      refiner_train_options opt = {}) {
    std::vector<refiner_step_record> history;
    if (epochs == 0) {
        return history;
    }
    if (proposals.empty()) {
        throw std::invalid_argument("train_refiner: no proposals");
    }
    model.total_steps = model.step + epochs * proposals.size();
    history.reserve(epochs * proposals.size());
    std::mt19937_64 rng(model.seed);
    std::vector<std::size_t> perm(proposals.size());
    std::iota(perm.begin(), perm.end(), 0);
    for (std::size_t e = 0; e < epochs; ++e) {
        std::shuffle(perm.begin(), perm.end(), rng);
        for (std::size_t p : perm) {
            refiner_gradients grads = zero_refiner_gradients(model);
            const double bce = refiner_loss_and_gradients(model, proposals[p], labels, grads);
            if (!std::isfinite(bce)) {
                throw train_fault("refiner step " + std::to_string(model.step) +
                                  ": non-finite loss");
            }
            const double lr = lr_schedule(model.step, model.total_steps, opt.base_lr);
            const std::size_t t = model.step + 1;
            visit_refiner_blocks(model, grads,
                                 [&](const std::string& name, std::span<double> params,
                                     std::span<double> gs, std::size_t off) {
                                     for (double gv : gs) {
                                         if (!std::isfinite(gv)) {
                                             throw train_fault("refiner step " +
                                                               std::to_string(model.step) +
                                                               ": non-finite gradient in " + name);
                                         }
                                     }
                                     adamw_update(params, gs,
                                                  std::span(model.m_moments).subspan(off, params.size()),
                                                  std::span(model.v_moments).subspan(off, params.size()),
                                                  t, lr, opt.beta1, opt.beta2, opt.adam_eps,
                                                  opt.weight_decay);
                                 });
            history.push_back({model.step, lr, bce});
            ++model.step;
        }
    }
    return history;
}

// ---------------------------------------------------------------------------
// cluster assembly

namespace detail {

struct union_find {
    std::vector<std::size_t> parent;
    explicit union_find(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    std::size_t find(std::size_t x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    }
    void unite(std::size_t a, std::size_t b) { parent[find(a)] = find(b); }
};

} // namespace detail

/// Members scoring at or above the threshold stay linked to their proposal's
/// center; connected components of the link graph become predicted clusters
/// and everything unlinked is its own singleton. Ids are dense, assigned in
/// first-appearance order.
inline std::vector<int> assemble_clusters(std::span<const cluster_proposal> proposals,
                                          std::span<const std::vector<double>> keep_probs,
                                          std::size_t n_samples, double threshold = 0.5) {
    if (proposals.size() != keep_probs.size()) {
        throw std::invalid_argument("assemble_clusters: one probability row per proposal");
    }
    detail::union_find uf(n_samples);
    for (std::size_t p = 0; p < proposals.size(); ++p) {
        const cluster_proposal& prop = proposals[p];
        if (keep_probs[p].size() != prop.member_indices.size()) {
            throw std::invalid_argument("assemble_clusters: probability row length mismatch");
        }
        for (std::size_t t = 0; t < prop.member_indices.size(); ++t) {
            const std::size_t idx = prop.member_indices[t];
            if (idx >= n_samples || prop.center_index >= n_samples) {
                throw std::invalid_argument("assemble_clusters: sample index out of range");
            }
            if (keep_probs[p][t] >= threshold) {
                uf.unite(prop.center_index, idx);
            }
        }
    }
    std::vector<int> labels(n_samples, -1);
    int next = 0;
    std::vector<int> root_label(n_samples, -1);
    for (std::size_t i = 0; i < n_samples; ++i) {
        const std::size_t r = uf.find(i);
        if (root_label[r] < 0) {
            root_label[r] = next++;
        }
        labels[i] = root_label[r];
    }
    return labels;
}

// ---------------------------------------------------------------------------
// metrics

struct pair_metrics {
    double precision = 0.0;
    double recall = 0.0;
    double f_p = 0.0;             // harmonic mean, the headline score
    double fowlkes_mallows = 0.0; // geometric-mean variant
    bool degenerate = false;      // no same-pred or no same-true pairs
};

/// Pairwise precision / recall / F over all unordered sample pairs, via the
/// contingency table (validated against brute-force pair enumeration).
inline pair_metrics pairwise_f(std::span<const int> pred, std::span<const int> truth) {
    if (pred.size() != truth.size() || pred.size() < 2) {
        throw std::invalid_argument("pairwise_f: need two equal-length labelings, N >= 2");
    }
    std::map<std::pair<int, int>, std::uint64_t> cells;
    std::map<int, std::uint64_t> pred_sizes;
    std::map<int, std::uint64_t> true_sizes;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        ++cells[{pred[i], truth[i]}];
        ++pred_sizes[pred[i]];
        ++true_sizes[truth[i]];
    }
    const auto choose2 = [](std::uint64_t n) { return n * (n - 1) / 2; };
    std::uint64_t both = 0;
    for (const auto& [key, count] : cells) {
        both += choose2(count);
    }
    std::uint64_t same_pred = 0;
    for (const auto& [key, count] : pred_sizes) {
        same_pred += choose2(count);
    }
    std::uint64_t same_true = 0;
    for (const auto& [key, count] : true_sizes) {
        same_true += choose2(count);
    }
    pair_metrics out;
    if (same_pred == 0 || same_true == 0) {
        out.degenerate = true;
        return out; // all fields pinned to 0
    }
    out.precision = static_cast<double>(both) / static_cast<double>(same_pred);
    out.recall = static_cast<double>(both) / static_cast<double>(same_true);
    if (out.precision + out.recall > 0.0) {
        out.f_p = 2.0 * out.precision * out.recall / (out.precision + out.recall);
    }
    out.fowlkes_mallows = std::sqrt(out.precision * out.recall);
    return out;
}

struct bcubed_metrics {
    double precision = 0.0;
    double recall = 0.0;
    double f_b = 0.0;
};

/// BCubed: per-item precision and recall averaged over items, combined
/// harmonically.
inline bcubed_metrics bcubed_f(std::span<const int> pred, std::span<const int> truth) {
    if (pred.size() != truth.size() || pred.empty()) {
        throw std::invalid_argument("bcubed_f: need two equal-length labelings, N >= 1");
    }
    std::map<std::pair<int, int>, std::uint64_t> cells;
    std::map<int, std::uint64_t> pred_sizes;
    std::map<int, std::uint64_t> true_sizes;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        ++cells[{pred[i], truth[i]}];
        ++pred_sizes[pred[i]];
        ++true_sizes[truth[i]];
    }
    double p_acc = 0.0;
    double r_acc = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double same = static_cast<double>(cells[{pred[i], truth[i]}]);
        p_acc += same / static_cast<double>(pred_sizes[pred[i]]);
        r_acc += same / static_cast<double>(true_sizes[truth[i]]);
    }
    bcubed_metrics out;
    out.precision = p_acc / static_cast<double>(pred.size());
    out.recall = r_acc / static_cast<double>(pred.size());
    if (out.precision + out.recall > 0.0) {
        out.f_b = 2.0 * out.precision * out.recall / (out.precision + out.recall);
    }
    return out;
}

} // namespace qip
