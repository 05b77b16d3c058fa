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
 * @file train.hpp
 * Feature extractor, classifier head, and the information-preserving
 * training step.
 *
 * One step computes, for a batch x with labels y:
 *   v_i = M(x_i)                      unit-norm MLP features
 *   q_i = Q(v_i), S_j = Q(W_j)        quantum maps of features and of the
 *                                     column-normalized class prototypes
 *   w_i = softmax(s W^T v_i)          classical class posterior
 *   u_i = softmax(s S^T q_i)          quantum class posterior
 *   L   = cross-entropy(w, y)
 *   K   = mean_i KL(w_i || u_i)
 *   loss = L + lambda K
 * and backpropagates through every stage by hand: softmax/KL closed forms,
 * the L2-normalization Jacobians, the quantum maps (adjoint pass), and the
 * MLP. Gradients reach the MLP weights, W, and the u3 block angles; W is
 * used only through its normalized columns and is re-normalized after each
 * optimizer step.
 *
 * All reductions run in a fixed order, so a (seed, data, config) triple
 * reproduces checkpoints and histories bitwise on one machine.
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

#include "qip/encode.hpp"
#include "qip/errors.hpp"
#include "qip/io.hpp"
#include "qip/matrix.hpp"
#include "qip/numeric.hpp"
#include "qip/observe.hpp"

namespace qip {

// ---------------------------------------------------------------------------
// feature extractor

struct mlp_layer {
    matrix w; // out x in
    std::vector<double> b;
};

struct mlp {
    std::vector<std::size_t> dims; // input, hidden..., output
    std::vector<mlp_layer> layers;

    /// He-normal weights, zero biases. Draw order (layer-major, weights
    /// row-major, then biases) is part of the determinism contract.
    static mlp init(std::vector<std::size_t> layer_dims, std::mt19937_64& rng) {
        if (layer_dims.size() < 2) {
            throw config_error("mlp: need at least input and output dims");
        }
        for (std::size_t d : layer_dims) {
            if (d == 0) {
                throw config_error("mlp: zero layer width");
            }
        }
        mlp net;
        net.dims = std::move(layer_dims);
        for (std::size_t l = 0; l + 1 < net.dims.size(); ++l) {
            const std::size_t fan_in = net.dims[l];
            const std::size_t fan_out = net.dims[l + 1];
            std::normal_distribution<double> he(0.0, std::sqrt(2.0 / static_cast<double>(fan_in)));
            mlp_layer layer;
            layer.w = matrix(fan_out, fan_in);
            for (double& x : layer.w.data) {
                x = he(rng);
            }
            layer.b.assign(fan_out, 0.0);
            net.layers.push_back(std::move(layer));
        }
        return net;
    }

    [[nodiscard]] std::size_t input_dim() const { return dims.front(); }
    [[nodiscard]] std::size_t output_dim() const { return dims.back(); }
};

struct mlp_cache {
    std::vector<matrix> inputs; // inputs[l]: batch input to layer l
    std::vector<matrix> pre;    // pre[l]: layer l output before nonlinearity
    matrix features;            // unit-norm rows
    std::vector<double> out_norm; // pre-normalization row norms
};

/// Row-wise MLP: rectifier after every layer but the last, then L2
/// normalization with the shared norm floor.
inline mlp_cache forward_features_cached(const mlp& net, const matrix& x) {
    if (x.cols != net.input_dim()) {
        throw std::invalid_argument("forward_features: input dim mismatch");
    }
    mlp_cache cache;
    cache.inputs.reserve(net.layers.size());
    cache.pre.reserve(net.layers.size());
    matrix cur = x;
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        const mlp_layer& layer = net.layers[l];
        const bool last = l + 1 == net.layers.size();
        matrix out(cur.rows, layer.w.rows);
        for (std::size_t i = 0; i < cur.rows; ++i) {
            for (std::size_t o = 0; o < layer.w.rows; ++o) {
                double acc = layer.b[o];
                for (std::size_t t = 0; t < layer.w.cols; ++t) {
                    acc += layer.w(o, t) * cur(i, t);
                }
                out(i, o) = acc;
            }
        }
        for (double vxx : out.data) {
            if (!std::isfinite(vxx)) {
                throw train_fault("forward_features: non-finite activation in layer " +
                                  std::to_string(l));
            }
        }
        cache.inputs.push_back(std::move(cur));
        cache.pre.push_back(out);
        if (!last) {
            for (double& vxx : out.data) {
                vxx = vxx > 0.0 ? vxx : 0.0;
            }
        }
        cur = std::move(out);
    }
    cache.out_norm.resize(cur.rows);
    for (std::size_t i = 0; i < cur.rows; ++i) {
        cache.out_norm[i] = normalize_in_place(cur.row(i), feature_norm_floor);
    }
    cache.features = std::move(cur);
    return cache;
}

inline matrix forward_features(const mlp& net, const matrix& x) {
    return forward_features_cached(net, x).features;
}

using mlp_gradients = std::vector<mlp_layer>; // same shapes as mlp::layers

inline mlp_gradients zero_gradients(const mlp& net) {
    mlp_gradients g;
    g.reserve(net.layers.size());
    for (const mlp_layer& layer : net.layers) {
        mlp_layer z;
        z.w = matrix(layer.w.rows, layer.w.cols);
        z.b.assign(layer.b.size(), 0.0);
        g.push_back(std::move(z));
    }
    return g;
}

/// Backward through normalization, linear layers, and rectifiers;
/// feat_bar is d loss / d (normalized features). Accumulates into grads.
inline void backward_features(const mlp& net, const mlp_cache& cache, const matrix& feat_bar,
                              mlp_gradients& grads) {
    const std::size_t batch = cache.features.rows;
    const std::size_t d = cache.features.cols;
    // normalization: z_bar = (v_bar - v (v . v_bar)) / |z|, or v_bar/floor
    // when the norm was floored
    matrix delta(batch, d);
    for (std::size_t i = 0; i < batch; ++i) {
        const double n = cache.out_norm[i];
        if (n > feature_norm_floor) {
            double vdot = 0.0;
            for (std::size_t t = 0; t < d; ++t) {
                vdot += cache.features(i, t) * feat_bar(i, t);
            }
            for (std::size_t t = 0; t < d; ++t) {
                delta(i, t) = (feat_bar(i, t) - cache.features(i, t) * vdot) / n;
            }
        } else {
            for (std::size_t t = 0; t < d; ++t) {
                delta(i, t) = feat_bar(i, t) / feature_norm_floor;
            }
        }
    }
    for (std::size_t l = net.layers.size(); l-- > 0;) {
        const mlp_layer& layer = net.layers[l];
        const matrix& input = cache.inputs[l];
        // delta is d loss / d (layer l linear output)
        for (std::size_t i = 0; i < batch; ++i) {
            for (std::size_t o = 0; o < layer.w.rows; ++o) {
                const double dv = delta(i, o);
                grads[l].b[o] += dv;
                for (std::size_t t = 0; t < layer.w.cols; ++t) {
                    grads[l].w(o, t) += dv * input(i, t);
                }
            }
        }
        if (l == 0) {
            break;
        }
        matrix prev(batch, layer.w.cols);
        for (std::size_t i = 0; i < batch; ++i) {
            for (std::size_t t = 0; t < layer.w.cols; ++t) {
                double acc = 0.0;
                for (std::size_t o = 0; o < layer.w.rows; ++o) {
                    acc += layer.w(o, t) * delta(i, o);
                }
                // rectifier gate of the producing layer l-1
                prev(i, t) = cache.pre[l - 1](i, t) > 0.0 ? acc : 0.0;
            }
        }
        delta = std::move(prev);
    }
}

// ---------------------------------------------------------------------------
// losses

/// Mean negative log-softmax of the true class, max-shifted for stability.
inline double ce_loss(const matrix& logits, std::span<const int> labels) {
    if (logits.rows != labels.size() || logits.rows == 0) {
        throw std::invalid_argument("ce_loss: batch size mismatch");
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < logits.rows; ++i) {
        const int y = labels[i];
        if (y < 0 || static_cast<std::size_t>(y) >= logits.cols) {
            throw std::out_of_range("ce_loss: label out of range");
        }
        acc += log_sum_exp(logits.row(i)) - logits(i, static_cast<std::size_t>(y));
    }
    return acc / static_cast<double>(logits.rows);
}

struct loss_report {
    double l = 0.0;     // cross-entropy
    double k = 0.0;     // mean KL(w || u)
    double l_qip = 0.0; // l + lambda k (== l exactly when lambda is 0)
};

// ---------------------------------------------------------------------------
// training state

struct train_options {
    double lambda = 0.5;
    double scale_s = 16.0;
    bool normalize_quantum = true;
    bool detach_targets = false;
    double base_lr = 1e-3;
    double weight_decay = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;

    void validate() const {
        if (lambda < 0.0) {
            throw config_error("train: lambda must be >= 0");
        }
        if (scale_s <= 0.0) {
            throw config_error("train: scale_s must be > 0");
        }
        if (base_lr <= 0.0) {
            throw config_error("train: base_lr must be > 0");
        }
    }
};

struct train_state {
    mlp net;
    matrix head; // d x C, unit columns
    encoding_spec enc;
    observable_spec obs;
    train_options opt;
    std::vector<double> m_moments; // flat, parameter-block order
    std::vector<double> v_moments;
    std::size_t step = 0;
    std::size_t total_steps = 0;
    std::uint64_t seed = 0;

    [[nodiscard]] std::size_t n_classes() const { return head.cols; }
    [[nodiscard]] std::size_t feature_dim() const { return head.rows; }
};

inline std::size_t parameter_count(const train_state& st) {
    std::size_t n = 0;
    for (const mlp_layer& layer : st.net.layers) {
        n += layer.w.data.size() + layer.b.size();
    }
    return n + st.head.data.size() + st.enc.pqc_params.size();
}

/// Fresh state: He MLP, random unit-column head, seeded u3 block angles,
/// zero moments. All draws come from one generator seeded with `seed`.
inline train_state init_train_state(std::vector<std::size_t> mlp_dims, std::size_t n_classes,
                                    encoding_spec enc, observable_spec obs, train_options opt,
                                    std::uint64_t seed) {
    opt.validate();
    enc.validate();
    if (n_classes < 1) {
        throw config_error("train: need at least one class");
    }
    if (mlp_dims.back() != enc.feature_dim) {
        throw config_error("train: MLP output dim must equal the encoder feature dim");
    }
    std::mt19937_64 rng(seed);
    train_state st;
    st.net = mlp::init(std::move(mlp_dims), rng);
    const std::size_t d = st.net.output_dim();
    st.head = matrix(d, n_classes);
    std::normal_distribution<double> g(0.0, 1.0);
    for (double& x : st.head.data) {
        x = g(rng);
    }
    for (std::size_t j = 0; j < n_classes; ++j) {
        double n2 = 0.0;
        for (std::size_t t = 0; t < d; ++t) {
            n2 += st.head(t, j) * st.head(t, j);
        }
        const double div = std::max(std::sqrt(n2), feature_norm_floor);
        for (std::size_t t = 0; t < d; ++t) {
            st.head(t, j) /= div;
        }
    }
    seed_pqc_params(enc, rng());
    st.enc = std::move(enc);
    st.obs = std::move(obs);
    st.opt = opt;
    st.seed = seed;
    st.m_moments.assign(parameter_count(st), 0.0);
    st.v_moments.assign(parameter_count(st), 0.0);
    return st;
}

struct qip_gradients {
    mlp_gradients net;
    matrix head;
    std::vector<double> pqc;
};

inline qip_gradients zero_qip_gradients(const train_state& st) {
    qip_gradients g;
    g.net = zero_gradients(st.net);
    g.head = matrix(st.head.rows, st.head.cols);
    g.pqc.assign(st.enc.pqc_params.size(), 0.0);
    return g;
}

/// Visits (name, params, grads, flat offset) for every trainable block in
/// the pinned order: MLP layers (w then b), head, block angles.
template <typename State, typename Grads, typename F>
void visit_parameter_blocks(State& st, Grads& grads, F&& f) {
    std::size_t off = 0;
    for (std::size_t l = 0; l < st.net.layers.size(); ++l) {
        auto& w = st.net.layers[l].w.data;
        f("mlp.layer" + std::to_string(l) + ".w", std::span(w), std::span(grads.net[l].w.data),
          off);
        off += w.size();
        auto& b = st.net.layers[l].b;
        f("mlp.layer" + std::to_string(l) + ".b", std::span(b), std::span(grads.net[l].b), off);
        off += b.size();
    }
    f("head.w", std::span(st.head.data), std::span(grads.head.data), off);
    off += st.head.data.size();
    f("enc.pqc", std::span(st.enc.pqc_params), std::span(grads.pqc), off);
}

namespace detail {

/// The full forward pass of one step, keeping everything the backward pass
/// needs. When lambda is 0 the quantum path is skipped entirely.
struct qip_forward {
    mlp_cache cache;
    matrix what;                 // d x C
    std::vector<double> w_norms; // raw head column norms
    matrix logits_c;             // N x C
    matrix logw;                 // log softmax rows
    bool quantum = false;
    matrix q;    // N x m raw measurements
    matrix qhat; // N x m (normalized when the flag is on, else == q)
    std::vector<double> q_norms;
    matrix s;    // m x C prototype measurements
    matrix shat; // m x C
    std::vector<double> s_norms;
    matrix logits_q; // N x C
    matrix logu;
    loss_report report;
};

inline qip_forward qip_forward_pass(const train_state& st, const matrix& x,
                                    std::span<const int> labels) {
    if (x.rows == 0) {
        throw std::invalid_argument("qip step: empty batch");
    }
    if (x.rows != labels.size()) {
        throw std::invalid_argument("qip step: labels do not match batch");
    }
    const std::size_t batch = x.rows;
    const std::size_t d = st.feature_dim();
    const std::size_t c = st.n_classes();
    const double s_scale = st.opt.scale_s;

    qip_forward fw;
    fw.cache = forward_features_cached(st.net, x);
    const matrix& feats = fw.cache.features;

    // column-normalized head
    fw.what = st.head;
    fw.w_norms.resize(c);
    for (std::size_t j = 0; j < c; ++j) {
        double n2 = 0.0;
        for (std::size_t t = 0; t < d; ++t) {
            n2 += fw.what(t, j) * fw.what(t, j);
        }
        fw.w_norms[j] = std::sqrt(n2);
        const double div = std::max(fw.w_norms[j], feature_norm_floor);
        for (std::size_t t = 0; t < d; ++t) {
            fw.what(t, j) /= div;
        }
    }

    fw.logits_c = matrix(batch, c);
    for (std::size_t i = 0; i < batch; ++i) {
        for (std::size_t j = 0; j < c; ++j) {
            double acc = 0.0;
            for (std::size_t t = 0; t < d; ++t) {
                acc += fw.what(t, j) * feats(i, t);
            }
            fw.logits_c(i, j) = s_scale * acc;
        }
    }
    fw.logw = matrix(batch, c);
    for (std::size_t i = 0; i < batch; ++i) {
        const double lse = log_sum_exp(fw.logits_c.row(i));
        for (std::size_t j = 0; j < c; ++j) {
            fw.logw(i, j) = fw.logits_c(i, j) - lse;
        }
    }
    fw.report.l = ce_loss(fw.logits_c, labels);

    if (st.opt.lambda == 0.0) {
        fw.report.k = 0.0;
        fw.report.l_qip = fw.report.l;
        return fw;
    }

    fw.quantum = true;
    const std::size_t m = st.obs.output_dim(st.enc.n_qubits);

    fw.q = matrix(batch, m);
    for (std::size_t i = 0; i < batch; ++i) {
        const quantum_feature qf = quantum_map(feats.row(i), st.enc, st.obs);
        for (std::size_t k = 0; k < m; ++k) {
            fw.q(i, k) = qf.values[k];
        }
    }
    fw.qhat = fw.q;
    fw.q_norms.assign(batch, 0.0);
    if (st.opt.normalize_quantum) {
        for (std::size_t i = 0; i < batch; ++i) {
            fw.q_norms[i] = normalize_in_place(fw.qhat.row(i), feature_norm_floor);
        }
    }

    fw.s = matrix(m, c);
    for (std::size_t j = 0; j < c; ++j) {
        const quantum_feature sf = quantum_map(column_of(fw.what, j), st.enc, st.obs);
        for (std::size_t k = 0; k < m; ++k) {
            fw.s(k, j) = sf.values[k];
        }
    }
    fw.shat = fw.s;
    fw.s_norms.assign(c, 0.0);
    if (st.opt.normalize_quantum) {
        for (std::size_t j = 0; j < c; ++j) {
            std::vector<double> col = column_of(fw.shat, j);
            fw.s_norms[j] = normalize_in_place(col, feature_norm_floor);
            for (std::size_t k = 0; k < m; ++k) {
                fw.shat(k, j) = col[k];
            }
        }
    }

    fw.logits_q = matrix(batch, c);
    for (std::size_t i = 0; i < batch; ++i) {
        for (std::size_t j = 0; j < c; ++j) {
            double acc = 0.0;
            for (std::size_t k = 0; k < m; ++k) {
                acc += fw.shat(k, j) * fw.qhat(i, k);
            }
            fw.logits_q(i, j) = s_scale * acc;
        }
    }
    fw.logu = matrix(batch, c);
    for (std::size_t i = 0; i < batch; ++i) {
        const double lse = log_sum_exp(fw.logits_q.row(i));
        for (std::size_t j = 0; j < c; ++j) {
            fw.logu(i, j) = fw.logits_q(i, j) - lse;
        }
    }

    // K in log space; the floor on u enters as max(log u, log eps)
    const double log_eps = std::log(kl_epsilon);
    double k_acc = 0.0;
    for (std::size_t i = 0; i < batch; ++i) {
        double ki = 0.0;
        for (std::size_t j = 0; j < c; ++j) {
            const double w = std::exp(fw.logw(i, j));
            if (w > 0.0) {
                ki += w * (fw.logw(i, j) - std::max(fw.logu(i, j), log_eps));
            }
        }
        k_acc += ki;
    }
    fw.report.k = k_acc / static_cast<double>(batch);
    fw.report.l_qip = fw.report.l + st.opt.lambda * fw.report.k;
    return fw;
}

/// Pulls a gradient on normalized columns back through col / max(|col|,
/// floor).
inline void unnormalize_column_grad(std::span<const double> hat, double norm,
                                    std::span<const double> hat_bar, std::span<double> out) {
    if (norm > feature_norm_floor) {
        double hdot = 0.0;
        for (std::size_t t = 0; t < hat.size(); ++t) {
            hdot += hat[t] * hat_bar[t];
        }
        for (std::size_t t = 0; t < hat.size(); ++t) {
            out[t] = (hat_bar[t] - hat[t] * hdot) / norm;
        }
    } else {
        for (std::size_t t = 0; t < hat.size(); ++t) {
            out[t] = hat_bar[t] / feature_norm_floor;
        }
    }
}

} // namespace detail

/// Forward-only loss evaluation (used by reporting and by the
/// finite-difference oracles, which perturb raw parameters).
inline loss_report qip_loss(const train_state& st, const matrix& x, std::span<const int> labels) {
    return detail::qip_forward_pass(st, x, labels).report;
}

/// Loss plus gradients for every trainable parameter. Reverse accumulation
/// throughout; see the file comment for the path structure.
inline loss_report qip_loss_and_gradients(const train_state& st, const matrix& x,
                                          std::span<const int> labels, qip_gradients& grads) {
    const detail::qip_forward fw = detail::qip_forward_pass(st, x, labels);
    const std::size_t batch = x.rows;
    const std::size_t d = st.feature_dim();
    const std::size_t c = st.n_classes();
    const double s_scale = st.opt.scale_s;
    const double lambda = st.opt.lambda;
    const double inv_n = 1.0 / static_cast<double>(batch);
    const matrix& feats = fw.cache.features;

    // d loss / d classical logits and, when quantum, d loss / d quantum
    // logits
    matrix a_bar(batch, c);
    for (std::size_t i = 0; i < batch; ++i) {
        for (std::size_t j = 0; j < c; ++j) {
            const double w = std::exp(fw.logw(i, j));
            const double onehot = static_cast<std::size_t>(labels[i]) == j ? 1.0 : 0.0;
            a_bar(i, j) = (w - onehot) * inv_n;
        }
    }

    matrix b_bar;
    if (fw.quantum) {
        const double log_eps = std::log(kl_epsilon);
        b_bar = matrix(batch, c);
        for (std::size_t i = 0; i < batch; ++i) {
            // per-sample KL value and the clamp-active bookkeeping
            double ki = 0.0;
            double w_active = 0.0;
            for (std::size_t j = 0; j < c; ++j) {
                const double w = std::exp(fw.logw(i, j));
                const bool active = fw.logu(i, j) > log_eps;
                const double t = fw.logw(i, j) - std::max(fw.logu(i, j), log_eps);
                if (w > 0.0) {
                    ki += w * t;
                }
                if (active) {
                    w_active += w;
                }
            }
            for (std::size_t j = 0; j < c; ++j) {
                const double w = std::exp(fw.logw(i, j));
                const double u = std::exp(fw.logu(i, j));
                const bool active = fw.logu(i, j) > log_eps;
                if (!st.opt.detach_targets) {
                    const double t = fw.logw(i, j) - std::max(fw.logu(i, j), log_eps);
                    a_bar(i, j) += lambda * inv_n * w * (t - ki);
                }
                b_bar(i, j) = lambda * inv_n * (u * w_active - (active ? w : 0.0));
            }
        }
    }

    // classical logit path: a = s What^T v
    matrix v_bar(batch, d);
    matrix what_bar(d, c);
    for (std::size_t i = 0; i < batch; ++i) {
        for (std::size_t j = 0; j < c; ++j) {
            const double g = s_scale * a_bar(i, j);
            if (g == 0.0) {
                continue;
            }
            for (std::size_t t = 0; t < d; ++t) {
                v_bar(i, t) += g * fw.what(t, j);
                what_bar(t, j) += g * feats(i, t);
            }
        }
    }

    if (fw.quantum) {
        const std::size_t m = st.obs.output_dim(st.enc.n_qubits);
        // quantum logit path: b = s Shat^T qhat
        matrix qhat_bar(batch, m);
        matrix shat_bar(m, c);
        for (std::size_t i = 0; i < batch; ++i) {
            for (std::size_t j = 0; j < c; ++j) {
                const double g = s_scale * b_bar(i, j);
                if (g == 0.0) {
                    continue;
                }
                for (std::size_t k = 0; k < m; ++k) {
                    qhat_bar(i, k) += g * fw.shat(k, j);
                    shat_bar(k, j) += g * fw.qhat(i, k);
                }
            }
        }
        // through the optional feature normalization, then the quantum maps
        std::vector<double> row_bar(m);
        for (std::size_t i = 0; i < batch; ++i) {
            if (st.opt.normalize_quantum) {
                detail::unnormalize_column_grad(fw.qhat.row(i), fw.q_norms[i], qhat_bar.row(i),
                                                row_bar);
            } else {
                std::copy(qhat_bar.row(i).begin(), qhat_bar.row(i).end(), row_bar.begin());
            }
            const quantum_map_vjp_result vjp =
                quantum_map_vjp(feats.row(i), st.enc, st.obs, row_bar);
            for (std::size_t t = 0; t < d; ++t) {
                v_bar(i, t) += vjp.wrt_input[t];
            }
            for (std::size_t p = 0; p < grads.pqc.size(); ++p) {
                grads.pqc[p] += vjp.wrt_pqc[p];
            }
        }
        std::vector<double> col_bar(m);
        std::vector<double> col_hat(m);
        for (std::size_t j = 0; j < c; ++j) {
            for (std::size_t k = 0; k < m; ++k) {
                col_hat[k] = fw.shat(k, j);
                col_bar[k] = shat_bar(k, j);
            }
            std::vector<double> raw_bar(m);
            if (st.opt.normalize_quantum) {
                detail::unnormalize_column_grad(col_hat, fw.s_norms[j], col_bar, raw_bar);
            } else {
                raw_bar = col_bar;
            }
            const quantum_map_vjp_result vjp =
                quantum_map_vjp(column_of(fw.what, j), st.enc, st.obs, raw_bar);
            for (std::size_t t = 0; t < d; ++t) {
                what_bar(t, j) += vjp.wrt_input[t];
            }
            for (std::size_t p = 0; p < grads.pqc.size(); ++p) {
                grads.pqc[p] += vjp.wrt_pqc[p];
            }
        }
    }

    // head normalization: What_j = W_j / max(|W_j|, floor)
    std::vector<double> col_hat(d);
    std::vector<double> col_bar(d);
    std::vector<double> col_out(d);
    for (std::size_t j = 0; j < c; ++j) {
        for (std::size_t t = 0; t < d; ++t) {
            col_hat[t] = fw.what(t, j);
            col_bar[t] = what_bar(t, j);
        }
        detail::unnormalize_column_grad(col_hat, fw.w_norms[j], col_bar, col_out);
        for (std::size_t t = 0; t < d; ++t) {
            grads.head(t, j) += col_out[t];
        }
    }

    backward_features(st.net, fw.cache, v_bar, grads.net);
    return fw.report;
}

// ---------------------------------------------------------------------------
// optimizer

/// One AdamW update on a flat block: bias-corrected moments plus decoupled
/// weight decay. t is the 1-indexed step.
inline void adamw_update(std::span<double> params, std::span<const double> grads,
                         std::span<double> m, std::span<double> v, std::size_t t, double lr,
                         double beta1, double beta2, double eps, double weight_decay) {
    if (params.size() != grads.size() || params.size() != m.size() || params.size() != v.size()) {
        throw std::invalid_argument("adamw_update: shape mismatch");
    }
    if (t == 0) {
        throw std::invalid_argument("adamw_update: step must be >= 1");
    }
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
    for (std::size_t i = 0; i < params.size(); ++i) {
        m[i] = beta1 * m[i] + (1.0 - beta1) * grads[i];
        v[i] = beta2 * v[i] + (1.0 - beta2) * grads[i] * grads[i];
        const double mhat = m[i] / bc1;
        const double vhat = v[i] / bc2;
        params[i] -= lr * (mhat / (std::sqrt(vhat) + eps) + weight_decay * params[i]);
    }
}

/// Cosine decay from base_lr at step 0 to 0 at total_steps.
inline double lr_schedule(std::size_t step, std::size_t total_steps, double base_lr) {
    if (step > total_steps) {
        throw std::invalid_argument("lr_schedule: step past the horizon");
    }
    if (total_steps == 0) {
        return base_lr;
    }
    constexpr double pi = 3.14159265358979323846;
    return base_lr * 0.5 *
           (1.0 + std::cos(pi * static_cast<double>(step) / static_cast<double>(total_steps)));
}

/// One full training step: loss, gradients, fault screening, AdamW on
/// every block, head column re-normalization, step increment.
inline loss_report qip_step(train_state& st, const matrix& x, std::span<const int> labels) {
    qip_gradients grads = zero_qip_gradients(st);
    loss_report report;
    try {
        report = qip_loss_and_gradients(st, x, labels, grads);
    } catch (const train_fault& e) {
        throw train_fault("step " + std::to_string(st.step) + ": " + e.what());
    }
    if (!std::isfinite(report.l_qip)) {
        throw train_fault("step " + std::to_string(st.step) + ": non-finite loss");
    }
    const double lr = lr_schedule(st.step, st.total_steps, st.opt.base_lr);
    const std::size_t t = st.step + 1;
    visit_parameter_blocks(st, grads, [&](const std::string& name, std::span<double> p,
                                          std::span<double> g, std::size_t off) {
        for (double gv : g) {
            if (!std::isfinite(gv)) {
                throw train_fault("step " + std::to_string(st.step) + ": non-finite gradient in " +
                                  name);
            }
        }
        adamw_update(p, g, std::span(st.m_moments).subspan(off, p.size()),
                     std::span(st.v_moments).subspan(off, p.size()), t, lr, st.opt.beta1,
                     st.opt.beta2, st.opt.adam_eps, st.opt.weight_decay);
    });
    // keep the head's unit-column invariant exact after the update
    for (std::size_t j = 0; j < st.head.cols; ++j) {
        double n2 = 0.0;
        for (std::size_t tt = 0; tt < st.head.rows; ++tt) {
            n2 += st.head(tt, j) * st.head(tt, j);
        }
        const double div = std::max(std::sqrt(n2), feature_norm_floor);
        for (std::size_t tt = 0; tt < st.head.rows; ++tt) {
            st.head(tt, j) /= div;
        }
    }
    ++st.step;
    return report;
}

// ---------------------------------------------------------------------------
// fit loop

struct step_record {
    std::size_t step = 0;
    double lr = 0.0;
    double l = 0.0;
    double k = 0.0;
    double l_qip = 0.0;
};

/// Epoch loop with seeded shuffling. Extends the schedule horizon by
/// epochs * ceil(N / batch) steps and records one row per step.
inline std::vector<step_record> fit(train_state& st, const matrix& x, std::span<const int> labels,
                                    std::size_t epochs, std::size_t batch_size) {
    if (x.rows == 0 || x.rows != labels.size()) {
        throw std::invalid_argument("fit: empty dataset or label mismatch");
    }
    if (batch_size == 0) {
        throw std::invalid_argument("fit: batch_size must be >= 1");
    }
    std::vector<step_record> history;
    if (epochs == 0) {
        return history;
    }
    const std::size_t n = x.rows;
    const std::size_t batches = (n + batch_size - 1) / batch_size;
    st.total_steps = st.step + epochs * batches;
    history.reserve(epochs * batches);

    std::mt19937_64 rng(st.seed);
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    for (std::size_t e = 0; e < epochs; ++e) {
        std::shuffle(perm.begin(), perm.end(), rng);
        for (std::size_t b = 0; b < batches; ++b) {
            const std::size_t lo = b * batch_size;
            const std::size_t hi = std::min(lo + batch_size, n);
            matrix bx(hi - lo, x.cols);
            std::vector<int> by(hi - lo);
            for (std::size_t i = lo; i < hi; ++i) {
                const std::size_t src = perm[i];
                for (std::size_t t = 0; t < x.cols; ++t) {
                    bx(i - lo, t) = x(src, t);
                }
                by[i - lo] = labels[src];
            }
            const std::size_t step_index = st.step;
            const double lr = lr_schedule(step_index, st.total_steps, st.opt.base_lr);
            const loss_report rep = qip_step(st, bx, by);
            history.push_back({step_index, lr, rep.l, rep.k, rep.l_qip});
        }
    }
    return history;
}

// ---------------------------------------------------------------------------
// checkpoints

namespace detail {
inline constexpr char checkpoint_magic[4] = {'Q', 'I', 'P', '1'};
}

/// Serializes the full state: dims, encoder, observable, hyperparameters,
/// then every f64 block in visit order, moments, and counters. All fields
/// little-endian; doubles as bit patterns, so a save/load round trip is
/// bitwise exact.
inline std::string serialize_checkpoint(const train_state& st) {
    byte_writer w;
    w.bytes(detail::checkpoint_magic, 4);
    w.u32(static_cast<std::uint32_t>(st.net.dims.size()));
    for (std::size_t d : st.net.dims) {
        w.u32(static_cast<std::uint32_t>(d));
    }
    w.u32(static_cast<std::uint32_t>(st.head.cols));
    w.u32(static_cast<std::uint32_t>(st.enc.kind));
    w.u32(static_cast<std::uint32_t>(st.enc.feature_dim));
    w.u32(static_cast<std::uint32_t>(st.enc.n_qubits));
    w.u32(static_cast<std::uint32_t>(st.enc.layers));
    const std::string obs = st.obs.str();
    w.u32(static_cast<std::uint32_t>(obs.size()));
    w.bytes(obs.data(), obs.size());
    w.f64(st.opt.lambda);
    w.f64(st.opt.scale_s);
    w.f64(st.opt.base_lr);
    w.f64(st.opt.weight_decay);
    w.f64(st.opt.beta1);
    w.f64(st.opt.beta2);
    w.f64(st.opt.adam_eps);
    w.u8(st.opt.normalize_quantum ? 1 : 0);
    w.u8(st.opt.detach_targets ? 1 : 0);
    for (const mlp_layer& layer : st.net.layers) {
        for (double x : layer.w.data) {
            w.f64(x);
        }
        for (double x : layer.b) {
            w.f64(x);
        }
    }
    for (double x : st.head.data) {
        w.f64(x);
    }
    for (double x : st.enc.pqc_params) {
        w.f64(x);
    }
    for (double x : st.m_moments) {
        w.f64(x);
    }
    for (double x : st.v_moments) {
        w.f64(x);
    }
    w.u64(st.step);
    w.u64(st.total_steps);
    w.u64(st.seed);
    return w.str();
}

inline void save_checkpoint(const train_state& st, const std::string& path) {
    atomic_write_file(path, serialize_checkpoint(st));
}

inline train_state deserialize_checkpoint(const std::string& bytes) {
    byte_reader r(bytes);
    const std::string magic = r.bytes(4);
    if (magic != std::string(detail::checkpoint_magic, 4)) {
        throw data_error(data_error::kind::bad_version,
                         "checkpoint: bad magic, expected QIP1");
    }
    const std::uint32_t n_dims = r.u32();
    if (n_dims < 2 || n_dims > 64) {
        throw data_error(data_error::kind::overflow, "checkpoint: implausible layer count");
    }
    std::vector<std::size_t> dims(n_dims);
    for (auto& d : dims) {
        d = r.u32();
        if (d == 0 || d > (1u << 20)) {
            throw data_error(data_error::kind::overflow, "checkpoint: implausible layer width");
        }
    }
    const std::uint32_t n_classes = r.u32();
    const std::uint32_t enc_kind = r.u32();
    if (enc_kind > 2) {
        throw data_error(data_error::kind::bad_version, "checkpoint: unknown encoder kind");
    }
    const std::uint32_t feature_dim = r.u32();
    const std::uint32_t n_qubits = r.u32();
    const std::uint32_t enc_layers = r.u32();
    const std::uint32_t obs_len = r.u32();
    if (obs_len == 0 || obs_len > 16) {
        throw data_error(data_error::kind::overflow, "checkpoint: implausible observable");
    }
    const std::string obs_str = r.bytes(obs_len);

    train_state st;
    st.opt.lambda = r.f64();
    st.opt.scale_s = r.f64();
    st.opt.base_lr = r.f64();
    st.opt.weight_decay = r.f64();
    st.opt.beta1 = r.f64();
    st.opt.beta2 = r.f64();
    st.opt.adam_eps = r.f64();
    st.opt.normalize_quantum = r.u8() != 0;
    st.opt.detach_targets = r.u8() != 0;

    st.net.dims = dims;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        mlp_layer layer;
        layer.w = matrix(dims[l + 1], dims[l]);
        for (double& x : layer.w.data) {
            x = r.f64();
        }
        layer.b.resize(dims[l + 1]);
        for (double& x : layer.b) {
            x = r.f64();
        }
        st.net.layers.push_back(std::move(layer));
    }
    st.head = matrix(dims.back(), n_classes);
    for (double& x : st.head.data) {
        x = r.f64();
    }
    st.enc.kind = static_cast<encoding_kind>(enc_kind);
    st.enc.feature_dim = feature_dim;
    st.enc.n_qubits = n_qubits;
    st.enc.layers = enc_layers;
    st.enc.pqc_params.resize(st.enc.kind == encoding_kind::u3
                                 ? std::size_t{enc_layers} * n_qubits * 3
                                 : 0);
    for (double& x : st.enc.pqc_params) {
        x = r.f64();
    }
    st.enc.validate();
    st.obs = observable_spec::parse(obs_str);
    st.m_moments.resize(parameter_count(st));
    for (double& x : st.m_moments) {
        x = r.f64();
    }
    st.v_moments.resize(parameter_count(st));
    for (double& x : st.v_moments) {
        x = r.f64();
    }
    st.step = r.u64();
    st.total_steps = r.u64();
    st.seed = r.u64();
    if (!r.exhausted()) {
        throw data_error(data_error::kind::count_mismatch,
                         "checkpoint: trailing bytes after the parameter blocks");
    }
    return st;
}

inline train_state load_checkpoint(const std::string& path) {
    return deserialize_checkpoint(read_file_bytes(path));
}

/// Renders fit history with the pinned CSV schema.
inline std::string history_to_csv(std::span<const step_record> history) {
    std::string out = "step, lr, L, K, L_QIP\n";
    char line[192];
    for (const step_record& rec : history) {
        std::snprintf(line, sizeof(line), "%zu, %.17g, %.17g, %.17g, %.17g\n", rec.step, rec.lr,
                      rec.l, rec.k, rec.l_qip);
        out += line;
    }
    return out;
}

} // namespace qip
