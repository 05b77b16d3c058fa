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
 * @file encode.hpp
 * Classical-to-quantum feature encoders.
 *
 * Three maps from R^d to an n-qubit state:
 *  - amplitude: normalize, zero-pad to 2^n, load as amplitudes
 *    (n = ceil(log2 d), at least 1);
 *  - phase: R_Y data rotations, one feature per (layer, qubit) slot with
 *    data re-uploading over ceil(d / n) layers, each layer closed by a
 *    CNOT ring control j -> target (j+1) mod n (no ring on one qubit);
 *  - u3: the phase circuit where each layer's ring is followed by a
 *    trainable per-qubit U3 block R_X, R_Y, R_Z. With all block angles
 *    zero this reduces to the phase encoder exactly.
 *
 * Rotation circuits are also exposed as an op list so the gradient pass can
 * walk the same gates in reverse.
 */
#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "qip/errors.hpp"
#include "qip/matrix.hpp"
#include "qip/qsim.hpp"

namespace qip {

enum class encoding_kind : std::uint8_t { amplitude, phase, u3 };

inline std::string to_string(encoding_kind k) {
    switch (k) {
    case encoding_kind::amplitude:
        return "amplitude";
    case encoding_kind::phase:
        return "phase";
    case encoding_kind::u3:
        return "u3";
    }
    return "?";
}

inline encoding_kind encoding_kind_from_string(const std::string& s) {
    if (s == "amplitude") {
        return encoding_kind::amplitude;
    }
    if (s == "phase") {
        return encoding_kind::phase;
    }
    if (s == "u3") {
        return encoding_kind::u3;
    }
    throw config_error("unknown encoder '" + s + "'");
}

/// Qubits needed to hold d amplitudes: ceil(log2 d), clamped to >= 1.
inline std::size_t qubits_for_amplitude(std::size_t d) {
    std::size_t n = 1;
    while ((std::size_t{1} << n) < d) {
        ++n;
    }
    return n;
}

/// Data re-uploading layers: ceil(d / n).
inline std::size_t layers_for(std::size_t d, std::size_t n_qubits) {
    return (d + n_qubits - 1) / n_qubits;
}

struct encoding_spec {
    encoding_kind kind = encoding_kind::amplitude;
    std::size_t feature_dim = 1;
    std::size_t n_qubits = 1;
    std::size_t layers = 0;               // rotation encoders only
    std::vector<double> pqc_params;       // u3 only: layers * n_qubits * 3,
                                          // indexed [layer][qubit][x, y, z]

    static encoding_spec amplitude(std::size_t d) {
        encoding_spec s;
        s.kind = encoding_kind::amplitude;
        s.feature_dim = d;
        s.n_qubits = qubits_for_amplitude(d);
        s.validate();
        return s;
    }

    static encoding_spec phase(std::size_t d, std::size_t n_qubits) {
        encoding_spec s;
        s.kind = encoding_kind::phase;
        s.feature_dim = d;
        s.n_qubits = n_qubits;
        s.layers = layers_for(d, n_qubits);
        s.validate();
        return s;
    }

    /// U3 spec with all block angles zero (equal to phase until seeded or
    /// trained).
    static encoding_spec u3(std::size_t d, std::size_t n_qubits) {
        encoding_spec s;
        s.kind = encoding_kind::u3;
        s.feature_dim = d;
        s.n_qubits = n_qubits;
        s.layers = layers_for(d, n_qubits);
        s.pqc_params.assign(s.layers * n_qubits * 3, 0.0);
        s.validate();
        return s;
    }

    [[nodiscard]] std::size_t pqc_size() const noexcept {
        return kind == encoding_kind::u3 ? layers * n_qubits * 3 : 0;
    }

    void validate() const {
        if (feature_dim < 1) {
            throw config_error("encoding_spec: feature_dim must be >= 1");
        }
        if (n_qubits < 1 || n_qubits > max_qubits) {
            throw config_error("encoding_spec: n_qubits " + std::to_string(n_qubits) +
                               " outside [1, " + std::to_string(max_qubits) + "]");
        }
        switch (kind) {
        case encoding_kind::amplitude:
            if (n_qubits != qubits_for_amplitude(feature_dim)) {
                throw config_error("encoding_spec: amplitude encoder for d = " +
                                   std::to_string(feature_dim) + " requires n = " +
                                   std::to_string(qubits_for_amplitude(feature_dim)));
            }
            if (!pqc_params.empty()) {
                throw config_error("encoding_spec: amplitude encoder has no block parameters");
            }
            break;
        case encoding_kind::phase:
            if (layers != layers_for(feature_dim, n_qubits)) {
                throw config_error("encoding_spec: phase encoder needs ceil(d / n) layers");
            }
            if (!pqc_params.empty()) {
                throw config_error("encoding_spec: phase encoder has no block parameters");
            }
            break;
        case encoding_kind::u3:
            if (layers != layers_for(feature_dim, n_qubits)) {
                throw config_error("encoding_spec: u3 encoder needs ceil(d / n) layers");
            }
            if (pqc_params.size() != layers * n_qubits * 3) {
                throw config_error("encoding_spec: u3 encoder needs layers * n * 3 parameters");
            }
            break;
        }
    }
};

/// Seeds the trainable block angles uniformly in [-pi/8, pi/8]. No-op for
/// encoders without blocks.
inline void seed_pqc_params(encoding_spec& spec, std::uint64_t seed) {
    if (spec.pqc_params.empty()) {
        return;
    }
    std::mt19937_64 rng(seed);
    constexpr double bound = 3.14159265358979323846 / 8.0;
    std::uniform_real_distribution<double> u(-bound, bound);
    for (double& p : spec.pqc_params) {
        p = u(rng);
    }
}

/// One gate of a rotation-encoder circuit. Rotations carry a binding that
/// says where the angle came from, which is what the reverse-mode pass
/// needs to route gradients.
struct circuit_op {
    enum class kind : std::uint8_t { rx, ry, rz, cnot };
    enum class binding : std::uint8_t { fixed, data, pqc };

    kind op = kind::ry;
    std::size_t qubit = 0;       // rotation target, or CNOT control
    std::size_t qubit2 = 0;      // CNOT target
    double angle = 0.0;          // rotations only
    binding bind = binding::fixed;
    std::size_t param_index = 0; // index into v (data) or pqc_params (pqc)
};

inline pauli_axis rotation_axis(circuit_op::kind k) {
    switch (k) {
    case circuit_op::kind::rx:
        return pauli_axis::x;
    case circuit_op::kind::ry:
        return pauli_axis::y;
    case circuit_op::kind::rz:
        return pauli_axis::z;
    case circuit_op::kind::cnot:
        break;
    }
    throw std::invalid_argument("rotation_axis: op is not a rotation");
}

/// Builds the gate list for a rotation encoder (phase or u3) bound to a
/// concrete input. Feature slot (layer, qubit) reads v[layer * n + qubit];
/// slots past d rotate by a fixed 0. Amplitude encoding has no circuit.
inline std::vector<circuit_op> build_encoding_circuit(std::span<const double> v,
                                                      const encoding_spec& spec) {
    if (spec.kind == encoding_kind::amplitude) {
        throw std::invalid_argument("build_encoding_circuit: amplitude encoding has no circuit");
    }
    spec.validate();
    if (v.size() != spec.feature_dim) {
        throw encoding_error("encode: feature has dimension " + std::to_string(v.size()) +
                             ", spec expects " + std::to_string(spec.feature_dim));
    }
    const std::size_t n = spec.n_qubits;
    std::vector<circuit_op> ops;
    ops.reserve(spec.layers * (n * 5));
    for (std::size_t layer = 0; layer < spec.layers; ++layer) {
        for (std::size_t q = 0; q < n; ++q) {
            const std::size_t slot = layer * n + q;
            circuit_op op;
            op.op = circuit_op::kind::ry;
            op.qubit = q;
            if (slot < spec.feature_dim) {
                op.angle = v[slot];
                op.bind = circuit_op::binding::data;
                op.param_index = slot;
            }
            ops.push_back(op);
        }
        if (n >= 2) {
            for (std::size_t q = 0; q < n; ++q) {
                circuit_op op;
                op.op = circuit_op::kind::cnot;
                op.qubit = q;
                op.qubit2 = (q + 1) % n;
                ops.push_back(op);
            }
        }
        if (spec.kind == encoding_kind::u3) {
            constexpr circuit_op::kind axes[3] = {circuit_op::kind::rx, circuit_op::kind::ry,
                                                  circuit_op::kind::rz};
            for (std::size_t q = 0; q < n; ++q) {
                for (std::size_t a = 0; a < 3; ++a) {
                    const std::size_t pi = (layer * n + q) * 3 + a;
                    circuit_op op;
                    op.op = axes[a];
                    op.qubit = q;
                    op.angle = spec.pqc_params[pi];
                    op.bind = circuit_op::binding::pqc;
                    op.param_index = pi;
                    ops.push_back(op);
                }
            }
        }
    }
    return ops;
}

inline void apply_circuit(state_vector& psi, std::span<const circuit_op> ops) {
    for (const circuit_op& op : ops) {
        if (op.op == circuit_op::kind::cnot) {
            apply_cnot(psi, op.qubit, op.qubit2);
        } else {
            apply_gate(psi, op.qubit, rotation_gate(rotation_axis(op.op), op.angle));
        }
    }
}

namespace detail {
inline void check_encodable(std::span<const double> v, const encoding_spec& spec) {
    if (v.size() != spec.feature_dim) {
        throw encoding_error("encode: feature has dimension " + std::to_string(v.size()) +
                             ", spec expects " + std::to_string(spec.feature_dim));
    }
    for (double x : v) {
        if (!std::isfinite(x)) {
            throw encoding_error("encode: feature has a non-finite entry");
        }
    }
}
} // namespace detail

inline state_vector encode(std::span<const double> v, const encoding_spec& spec) {
    spec.validate();
    detail::check_encodable(v, spec);
    if (spec.kind == encoding_kind::amplitude) {
        double norm2 = 0.0;
        for (double x : v) {
            norm2 += x * x;
        }
        if (norm2 == 0.0) {
            throw encoding_error("encode: amplitude encoding of the zero vector is undefined");
        }
        const double inv = 1.0 / std::sqrt(norm2);
        std::vector<cplx> amps(std::size_t{1} << spec.n_qubits, cplx(0.0, 0.0));
        for (std::size_t i = 0; i < v.size(); ++i) {
            amps[i] = cplx(v[i] * inv, 0.0);
        }
        return state_vector::from_amplitudes(spec.n_qubits, std::move(amps));
    }
    state_vector psi = zero_state(spec.n_qubits);
    const std::vector<circuit_op> ops = build_encoding_circuit(v, spec);
    apply_circuit(psi, ops);
    return psi;
}

/// Encodes each row of a feature matrix; failures rethrow with the row
/// index prepended so batch callers can report the offending sample.
inline std::vector<state_vector> encode_batch(const matrix& rows, const encoding_spec& spec) {
    std::vector<state_vector> out;
    out.reserve(rows.rows);
    for (std::size_t r = 0; r < rows.rows; ++r) {
        try {
            out.push_back(encode(rows.row(r), spec));
        } catch (const encoding_error& e) {
            throw encoding_error("row " + std::to_string(r) + ": " + e.what());
        }
    }
    return out;
}

} // namespace qip
