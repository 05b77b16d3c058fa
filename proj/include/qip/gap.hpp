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
 * @file gap.hpp
 * The information gap between a pair of states and their measured feature
 * vectors.
 *
 * Measuring one Pauli per qubit compresses a 2^n-dimensional state into n
 * reals, and the witness matrix A = sum_i O_i |psi1><psi2| O_i certifies
 * the loss: tr(A) = n <psi2|psi1>, so whenever the states are not equal
 * (|overlap| < 1) the trace stays strictly below n and A cannot be the
 * identity. gap_pair reports the raw overlap-versus-dot-product gap along
 * with both sides of the trace identity.
 *
 * The distribution-level gap K is the mean KL divergence between class
 * posteriors computed from classical and from measured features.
 */
#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "qip/encode.hpp"
#include "qip/errors.hpp"
#include "qip/matrix.hpp"
#include "qip/numeric.hpp"
#include "qip/observe.hpp"
#include "qip/qsim.hpp"

namespace qip {

struct gap_report {
    cplx state_overlap;   // <psi1|psi2>
    double q_dot = 0.0;   // q1 . q2
    double abs_gap = 0.0; // | |<psi1|psi2>| - q1 . q2 |
    cplx witness_trace;   // tr(A)
    cplx predicted_trace; // n <psi2|psi1>
};

/// Compares one pair of states under a single-Pauli observable. The
/// witness matrix is materialized densely for n <= 6; above that its trace
/// is accumulated as sum_i <O_i psi2 | O_i psi1> without building A.
inline gap_report gap_pair(const state_vector& psi1, const state_vector& psi2,
                           const observable_spec& obs) {
    if (psi1.n_qubits() != psi2.n_qubits()) {
        throw std::invalid_argument("gap_pair: states have different qubit counts");
    }
    if (obs.passes.size() != 1) {
        throw std::invalid_argument("gap_pair: the witness is defined for a single-pass "
                                    "observable (one Pauli per qubit)");
    }
    const std::size_t n = psi1.n_qubits();
    const std::size_t dim = psi1.dim();
    const pauli_axis axis = obs.passes[0];

    gap_report rep;
    rep.state_overlap = inner_product(psi1, psi2);

    const quantum_feature q1 = measure(psi1, obs);
    const quantum_feature q2 = measure(psi2, obs);
    rep.q_dot = dot(q1.values, q2.values);
    rep.abs_gap = std::abs(std::abs(rep.state_overlap) - rep.q_dot);

    const gate2x2 pg = pauli_matrix(axis);
    std::vector<cplx> u(dim);
    std::vector<cplx> w(dim);
    if (n <= 6) {
        // A = sum_q (O_q psi1)(O_q psi2)^dagger, then trace the dense matrix.
        std::vector<cplx> a(dim * dim, cplx(0.0, 0.0));
        for (std::size_t q = 0; q < n; ++q) {
            std::copy(psi1.amplitudes().begin(), psi1.amplitudes().end(), u.begin());
            std::copy(psi2.amplitudes().begin(), psi2.amplitudes().end(), w.begin());
            detail::apply_gate_raw(u, n, q, pg);
            detail::apply_gate_raw(w, n, q, pg);
            for (std::size_t r = 0; r < dim; ++r) {
                for (std::size_t c = 0; c < dim; ++c) {
                    a[r * dim + c] += u[r] * std::conj(w[c]);
                }
            }
        }
        cplx tr(0.0, 0.0);
        for (std::size_t i = 0; i < dim; ++i) {
            tr += a[i * dim + i];
        }
        rep.witness_trace = tr;
    } else {
        cplx tr(0.0, 0.0);
        for (std::size_t q = 0; q < n; ++q) {
            std::copy(psi1.amplitudes().begin(), psi1.amplitudes().end(), u.begin());
            std::copy(psi2.amplitudes().begin(), psi2.amplitudes().end(), w.begin());
            detail::apply_gate_raw(u, n, q, pg);
            detail::apply_gate_raw(w, n, q, pg);
            tr += detail::inner_product_raw(w, u);
        }
        rep.witness_trace = tr;
    }
    rep.predicted_trace = static_cast<double>(n) * inner_product(psi2, psi1);
    return rep;
}

/// KL(p || q) = sum_j p_j log(p_j / q_j), with 0 log 0 = 0 and q floored at
/// 1e-12 inside the log. Inputs must be probability vectors (sum within
/// 1e-8 of 1).
inline double kl_divergence(std::span<const double> p, std::span<const double> q) {
    if (p.size() != q.size()) {
        throw std::invalid_argument("kl_divergence: length mismatch");
    }
    if (p.empty()) {
        throw std::invalid_argument("kl_divergence: empty input");
    }
    double sp = 0.0;
    double sq = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] < 0.0 || q[i] < 0.0) {
            throw std::invalid_argument("kl_divergence: negative entry");
        }
        sp += p[i];
        sq += q[i];
    }
    if (std::abs(sp - 1.0) > 1e-8 || std::abs(sq - 1.0) > 1e-8) {
        throw std::invalid_argument("kl_divergence: inputs are not normalized");
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] > 0.0) {
            acc += p[i] * (std::log(p[i]) - std::log(std::max(q[i], kl_epsilon)));
        }
    }
    return acc;
}

/// Mean KL between classical and quantum class posteriors over a batch:
/// K = (1/N) sum_i KL(softmax(s W^T v_i), softmax(s S^T q_i)) with
/// S_j = quantum_map(W_j). W columns and v rows must be unit-norm.
inline double information_gap(const matrix& w, const matrix& v_batch, const encoding_spec& enc,
                              const observable_spec& obs, bool normalize_quantum = true,
                              double scale = 16.0) {
    const std::size_t d = w.rows;
    const std::size_t c = w.cols;
    const std::size_t n_samples = v_batch.rows;
    if (v_batch.cols != d) {
        throw std::invalid_argument("information_gap: W rows and feature dim differ");
    }
    if (d != enc.feature_dim) {
        throw std::invalid_argument("information_gap: encoder dim and feature dim differ");
    }
    for (std::size_t j = 0; j < c; ++j) {
        std::vector<double> col = column_of(w, j);
        if (std::abs(norm2(col) - 1.0) > 1e-6) {
            throw std::invalid_argument("information_gap: W column " + std::to_string(j) +
                                        " is not unit-norm");
        }
    }

    const std::size_t m = obs.output_dim(enc.n_qubits);
    matrix s_mat(m, c); // prototype features, one column per class
    for (std::size_t j = 0; j < c; ++j) {
        std::vector<double> qf = quantum_map(column_of(w, j), enc, obs).values;
        if (normalize_quantum) {
            normalize_in_place(qf, feature_norm_floor);
        }
        for (std::size_t k = 0; k < m; ++k) {
            s_mat(k, j) = qf[k];
        }
    }

    double acc = 0.0;
    std::vector<double> logits_c(c);
    std::vector<double> logits_q(c);
    for (std::size_t i = 0; i < n_samples; ++i) {
        const auto vi = v_batch.row(i);
        std::vector<double> qi = quantum_map(vi, enc, obs).values;
        if (normalize_quantum) {
            normalize_in_place(qi, feature_norm_floor);
        }
        for (std::size_t j = 0; j < c; ++j) {
            logits_c[j] = scale * dot(column_of(w, j), vi);
            double sq = 0.0;
            for (std::size_t k = 0; k < m; ++k) {
                sq += s_mat(k, j) * qi[k];
            }
            logits_q[j] = scale * sq;
        }
        acc += kl_divergence(softmax(logits_c), softmax(logits_q));
    }
    return acc / static_cast<double>(n_samples);
}

} // namespace qip
