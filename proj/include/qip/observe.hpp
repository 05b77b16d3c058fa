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
 * @file observe.hpp
 * Pauli measurement of encoded states and reverse-mode differentiation of
 * the full classical-to-quantum feature map.
 *
 * An observable set is an ordered list of Pauli passes; measuring an
 * n-qubit state yields one expectation per (pass, qubit), pass-major, so
 * "XZ" on 3 qubits gives [X0 X1 X2 Z0 Z1 Z2].
 *
 * The gradient of f = sum_k cot_k * q_k(v) is computed without finite
 * differences or parameter-shift re-simulation: with A = sum_k cot_k O_k
 * and phi = A psi, rotation-circuit gradients follow the adjoint walk
 *   d f / d theta_g = Im <bra_g | P | ket_g>,
 * peeling one gate adjoint per step off both the state and phi. Amplitude
 * encoding differentiates the normalize-and-pad map in closed form.
 */
#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qip/encode.hpp"
#include "qip/errors.hpp"
#include "qip/matrix.hpp"
#include "qip/qsim.hpp"

namespace qip {

struct observable_spec {
    std::vector<pauli_axis> passes;

    /// Parses strings like "Z" or "XZ" (one pass per character).
    static observable_spec parse(std::string_view s) {
        if (s.empty()) {
            throw config_error("observable: empty specification");
        }
        observable_spec o;
        o.passes.reserve(s.size());
        for (char c : s) {
            o.passes.push_back(axis_from_char(c));
        }
        return o;
    }

    [[nodiscard]] std::string str() const {
        std::string s;
        for (pauli_axis p : passes) {
            s += axis_to_char(p);
        }
        return s;
    }

    [[nodiscard]] std::size_t output_dim(std::size_t n_qubits) const {
        return passes.size() * n_qubits;
    }
};

/// Measured feature vector, pass-major over (pass, qubit).
struct quantum_feature {
    std::vector<double> values;
};

inline quantum_feature measure(const state_vector& psi, const observable_spec& obs) {
    if (obs.passes.empty()) {
        throw config_error("measure: observable has no passes");
    }
    quantum_feature out;
    out.values.reserve(obs.output_dim(psi.n_qubits()));
    for (pauli_axis p : obs.passes) {
        for (std::size_t q = 0; q < psi.n_qubits(); ++q) {
            out.values.push_back(expectation(psi, q, p));
        }
    }
    return out;
}

/// Full feature map: encode then measure.
inline quantum_feature quantum_map(std::span<const double> v, const encoding_spec& enc,
                                   const observable_spec& obs) {
    return measure(encode(v, enc), obs);
}

struct quantum_map_vjp_result {
    std::vector<double> wrt_input; // d(cot . q) / d v, length feature_dim
    std::vector<double> wrt_pqc;   // same for block angles; empty unless u3
};

namespace detail {

/// phi = sum_k cot_k O_k psi, with O_k the embedded single-qubit Pauli of
/// output slot k (pass-major).
inline std::vector<cplx> observable_image(const state_vector& psi, const observable_spec& obs,
                                          std::span<const double> cotangent) {
    const std::size_t n = psi.n_qubits();
    const std::size_t dim = psi.dim();
    std::vector<cplx> phi(dim, cplx(0.0, 0.0));
    std::vector<cplx> tmp(dim);
    std::size_t k = 0;
    for (pauli_axis p : obs.passes) {
        const gate2x2 pg = pauli_matrix(p);
        for (std::size_t q = 0; q < n; ++q, ++k) {
            const double w = cotangent[k];
            if (w == 0.0) {
                continue;
            }
            std::copy(psi.amplitudes().begin(), psi.amplitudes().end(), tmp.begin());
            apply_gate_raw(tmp, n, q, pg);
            for (std::size_t i = 0; i < dim; ++i) {
                phi[i] += w * tmp[i];
            }
        }
    }
    return phi;
}

} // namespace detail

/// Vector-Jacobian product of the quantum feature map at v: gradients of
/// sum_k cotangent_k * q_k with respect to v and, for u3, the block angles.
inline quantum_map_vjp_result quantum_map_vjp(std::span<const double> v, const encoding_spec& enc,
                                              const observable_spec& obs,
                                              std::span<const double> cotangent) {
    enc.validate();
    if (cotangent.size() != obs.output_dim(enc.n_qubits)) {
        throw std::invalid_argument("quantum_map_vjp: cotangent length mismatch");
    }
    quantum_map_vjp_result out;
    out.wrt_input.assign(enc.feature_dim, 0.0);
    out.wrt_pqc.assign(enc.pqc_size(), 0.0);

    const std::size_t n = enc.n_qubits;

    if (enc.kind == encoding_kind::amplitude) {
        const state_vector psi = encode(v, enc);
        const std::vector<cplx> phi = detail::observable_image(psi, obs, cotangent);
        // psi = pad(v / |v|); differentiating the normalization gives
        //   grad = (2/|v|) (r - vhat (vhat . r)),  r = Re(phi)[0:d]
        double norm = 0.0;
        for (double x : v) {
            norm += x * x;
        }
        norm = std::sqrt(norm);
        const std::size_t d = enc.feature_dim;
        std::vector<double> r(d);
        for (std::size_t i = 0; i < d; ++i) {
            r[i] = phi[i].real();
        }
        double vr = 0.0; // vhat . r
        for (std::size_t i = 0; i < d; ++i) {
            vr += (v[i] / norm) * r[i];
        }
        for (std::size_t i = 0; i < d; ++i) {
            out.wrt_input[i] = (2.0 / norm) * (r[i] - (v[i] / norm) * vr);
        }
        return out;
    }

    const std::vector<circuit_op> ops = build_encoding_circuit(v, enc);
    state_vector psi = zero_state(n);
    apply_circuit(psi, ops);
    std::vector<cplx> bra = detail::observable_image(psi, obs, cotangent);
    std::span<cplx> ket = psi.amplitudes();
    std::vector<cplx> tmp(psi.dim());

    // Walk the circuit backwards. At the step for gate g, ket holds the
    // state just after g and bra holds phi with all later gate adjoints
    // peeled off, so d f / d theta_g = Im <bra | P | ket>.
    for (auto it = ops.rbegin(); it != ops.rend(); ++it) {
        const circuit_op& op = *it;
        if (op.op == circuit_op::kind::cnot) {
            detail::apply_cnot_raw(ket, n, op.qubit, op.qubit2);
            detail::apply_cnot_raw(bra, n, op.qubit, op.qubit2);
            continue;
        }
        const pauli_axis axis = rotation_axis(op.op);
        if (op.bind != circuit_op::binding::fixed) {
            std::copy(ket.begin(), ket.end(), tmp.begin());
            detail::apply_gate_raw(tmp, n, op.qubit, pauli_matrix(axis));
            const double g = detail::inner_product_raw(bra, tmp).imag();
            if (op.bind == circuit_op::binding::data) {
                out.wrt_input[op.param_index] += g;
            } else {
                out.wrt_pqc[op.param_index] += g;
            }
        }
        const gate2x2 undo = rotation_gate(axis, -op.angle);
        detail::apply_gate_raw(ket, n, op.qubit, undo);
        detail::apply_gate_raw(bra, n, op.qubit, undo);
    }
    return out;
}

struct quantum_map_jacobians {
    matrix wrt_input; // m x d
    matrix wrt_pqc;   // m x pqc_size (zero columns unless u3)
};

/// Full Jacobians of the feature map, one VJP per output slot. Intended for
/// small m; training uses quantum_map_vjp directly.
inline quantum_map_jacobians quantum_map_jacobian(std::span<const double> v,
                                                  const encoding_spec& enc,
                                                  const observable_spec& obs) {
    const std::size_t m = obs.output_dim(enc.n_qubits);
    quantum_map_jacobians out;
    out.wrt_input = matrix(m, enc.feature_dim);
    out.wrt_pqc = matrix(m, enc.pqc_size());
    std::vector<double> onehot(m, 0.0);
    for (std::size_t k = 0; k < m; ++k) {
        onehot[k] = 1.0;
        const quantum_map_vjp_result row = quantum_map_vjp(v, enc, obs, onehot);
        onehot[k] = 0.0;
        for (std::size_t j = 0; j < enc.feature_dim; ++j) {
            out.wrt_input(k, j) = row.wrt_input[j];
        }
        for (std::size_t j = 0; j < out.wrt_pqc.cols; ++j) {
            out.wrt_pqc(k, j) = row.wrt_pqc[j];
        }
    }
    return out;
}

} // namespace qip
