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
 * @file qsim.hpp
 * Dense statevector simulator.
 *
 * Basis ordering is big-endian: qubit 0 maps to the most significant bit
 * of the basis index, so on n qubits the index bit of qubit q is
 * (n - 1 - q) and a single-qubit gate on q pairs amplitudes at stride
 * 1 << (n - 1 - q). Gates are applied in place via stride iteration; dense
 * matrices never materialize outside test oracles.
 */
#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "qip/errors.hpp"

namespace qip {

using cplx = std::complex<double>;

/// Hard cap on register width; 2^14 doubles-pairs keeps every state cache
/// friendly and bounds worst-case memory for batched encodes.
inline constexpr std::size_t max_qubits = 14;

enum class pauli_axis : std::uint8_t { x, y, z };

inline char axis_to_char(pauli_axis a) {
    switch (a) {
    case pauli_axis::x:
        return 'X';
    case pauli_axis::y:
        return 'Y';
    case pauli_axis::z:
        return 'Z';
    }
    throw std::invalid_argument("axis_to_char: bad axis");
}

inline pauli_axis axis_from_char(char c) {
    switch (c) {
    case 'X':
    case 'x':
        return pauli_axis::x;
    case 'Y':
    case 'y':
        return pauli_axis::y;
    case 'Z':
    case 'z':
        return pauli_axis::z;
    default:
        throw config_error(std::string("unknown Pauli axis '") + c + "'");
    }
}

/// 2x2 complex matrix validated unitary at construction (U U+ = I within
/// 1e-10 elementwise), so every gate application preserves the state norm
/// by construction.
class gate2x2 {
  public:
    gate2x2(cplx a00, cplx a01, cplx a10, cplx a11) : e_{a00, a01, a10, a11} {
        constexpr double tol = 1e-10;
        // rows of U dotted against conjugated rows of U give U U+.
        const cplx d00 = e_[0] * std::conj(e_[0]) + e_[1] * std::conj(e_[1]);
        const cplx d01 = e_[0] * std::conj(e_[2]) + e_[1] * std::conj(e_[3]);
        const cplx d11 = e_[2] * std::conj(e_[2]) + e_[3] * std::conj(e_[3]);
        if (std::abs(d00 - 1.0) > tol || std::abs(d11 - 1.0) > tol || std::abs(d01) > tol) {
            throw std::invalid_argument("gate2x2: matrix is not unitary");
        }
    }

    cplx operator()(std::size_t r, std::size_t c) const { return e_[r * 2 + c]; }

    [[nodiscard]] gate2x2 adjoint() const {
        return {std::conj(e_[0]), std::conj(e_[2]), std::conj(e_[1]), std::conj(e_[3])};
    }

  private:
    std::array<cplx, 4> e_;
};

inline gate2x2 pauli_matrix(pauli_axis p) {
    switch (p) {
    case pauli_axis::x:
        return {0.0, 1.0, 1.0, 0.0};
    case pauli_axis::y:
        return {0.0, cplx(0.0, -1.0), cplx(0.0, 1.0), 0.0};
    case pauli_axis::z:
        return {1.0, 0.0, 0.0, -1.0};
    }
    throw std::invalid_argument("pauli_matrix: bad axis");
}

/// R_P(theta) = cos(theta/2) I - i sin(theta/2) P.
inline gate2x2 rotation_gate(pauli_axis p, double theta) {
    const double c = std::cos(theta / 2.0);
    const double s = std::sin(theta / 2.0);
    const cplx mis(0.0, -s); // -i sin(theta/2)
    switch (p) {
    case pauli_axis::x:
        return {cplx(c, 0.0), mis, mis, cplx(c, 0.0)};
    case pauli_axis::y:
        return {cplx(c, 0.0), cplx(-s, 0.0), cplx(s, 0.0), cplx(c, 0.0)};
    case pauli_axis::z:
        return {cplx(c, -s), 0.0, 0.0, cplx(c, s)};
    }
    throw std::invalid_argument("rotation_gate: bad axis");
}

class state_vector {
  public:
    /// |0...0> on n qubits. Register width is capped: 1 <= n <= max_qubits.
    explicit state_vector(std::size_t n_qubits) : n_(n_qubits) {
        if (n_qubits < 1 || n_qubits > max_qubits) {
            throw config_error("state_vector: qubit count " + std::to_string(n_qubits) +
                               " outside [1, " + std::to_string(max_qubits) + "]");
        }
        amp_.assign(std::size_t{1} << n_, cplx(0.0, 0.0));
        amp_[0] = 1.0;
    }

    /// Adopts explicit amplitudes; requires |amps| = 2^n and unit norm
    /// within 1e-10.
    static state_vector from_amplitudes(std::size_t n_qubits, std::vector<cplx> amps) {
        state_vector psi(n_qubits);
        if (amps.size() != psi.dim()) {
            throw std::invalid_argument("state_vector: amplitude count does not match 2^n");
        }
        double norm2 = 0.0;
        for (const cplx& a : amps) {
            norm2 += std::norm(a);
        }
        if (std::abs(std::sqrt(norm2) - 1.0) > 1e-10) {
            throw std::invalid_argument("state_vector: amplitudes are not normalized");
        }
        psi.amp_ = std::move(amps);
        return psi;
    }

    [[nodiscard]] std::size_t n_qubits() const noexcept { return n_; }
    [[nodiscard]] std::size_t dim() const noexcept { return amp_.size(); }

    [[nodiscard]] std::span<cplx> amplitudes() noexcept { return amp_; }
    [[nodiscard]] std::span<const cplx> amplitudes() const noexcept { return amp_; }

    cplx& operator[](std::size_t i) { return amp_[i]; }
    const cplx& operator[](std::size_t i) const { return amp_[i]; }

    [[nodiscard]] double norm() const {
        double s = 0.0;
        for (const cplx& a : amp_) {
            s += std::norm(a);
        }
        return std::sqrt(s);
    }

    /// Index stride between the |0> and |1> branches of qubit q.
    [[nodiscard]] std::size_t stride(std::size_t qubit) const {
        if (qubit >= n_) {
            throw std::out_of_range("state_vector: qubit index out of range");
        }
        return std::size_t{1} << (n_ - 1 - qubit);
    }

  private:
    std::size_t n_;
    std::vector<cplx> amp_;
};

inline state_vector zero_state(std::size_t n_qubits) { return state_vector(n_qubits); }

namespace detail {

/// Gate kernels on raw amplitude spans. The gradient pass runs these on
/// unnormalized vectors (observable images), which must bypass the
/// state_vector norm invariant.
inline void apply_gate_raw(std::span<cplx> amps, std::size_t n_qubits, std::size_t qubit,
                           const gate2x2& g) {
    const std::size_t st = std::size_t{1} << (n_qubits - 1 - qubit);
    const std::size_t dim = amps.size();
    const cplx g00 = g(0, 0), g01 = g(0, 1), g10 = g(1, 0), g11 = g(1, 1);
    for (std::size_t base = 0; base < dim; base += 2 * st) {
        for (std::size_t k = 0; k < st; ++k) {
            const std::size_t i0 = base + k;
            const std::size_t i1 = i0 + st;
            const cplx a0 = amps[i0];
            const cplx a1 = amps[i1];
            amps[i0] = g00 * a0 + g01 * a1;
            amps[i1] = g10 * a0 + g11 * a1;
        }
    }
}

inline void apply_cnot_raw(std::span<cplx> amps, std::size_t n_qubits, std::size_t control,
                           std::size_t target) {
    const std::size_t cbit = std::size_t{1} << (n_qubits - 1 - control);
    const std::size_t tbit = std::size_t{1} << (n_qubits - 1 - target);
    const std::size_t dim = amps.size();
    for (std::size_t i = 0; i < dim; ++i) {
        if ((i & cbit) != 0 && (i & tbit) == 0) {
            std::swap(amps[i], amps[i | tbit]);
        }
    }
}

inline cplx inner_product_raw(std::span<const cplx> a, std::span<const cplx> b) {
    cplx s(0.0, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i) {
        s += std::conj(a[i]) * b[i];
    }
    return s;
}

} // namespace detail

/// Applies a single-qubit gate in place by iterating amplitude pairs at the
/// qubit's stride.
inline void apply_gate(state_vector& psi, std::size_t qubit, const gate2x2& g) {
    if (qubit >= psi.n_qubits()) {
        throw std::out_of_range("apply_gate: qubit index out of range");
    }
    detail::apply_gate_raw(psi.amplitudes(), psi.n_qubits(), qubit, g);
}

/// CNOT with the given control and target. Self-inverse.
inline void apply_cnot(state_vector& psi, std::size_t control, std::size_t target) {
    if (control == target) {
        throw std::invalid_argument("apply_cnot: control equals target");
    }
    if (control >= psi.n_qubits() || target >= psi.n_qubits()) {
        throw std::out_of_range("apply_cnot: qubit index out of range");
    }
    detail::apply_cnot_raw(psi.amplitudes(), psi.n_qubits(), control, target);
}

/// <a|b> = sum_i conj(a_i) b_i.
inline cplx inner_product(const state_vector& a, const state_vector& b) {
    if (a.dim() != b.dim()) {
        throw std::invalid_argument("inner_product: dimension mismatch");
    }
    cplx s(0.0, 0.0);
    auto av = a.amplitudes();
    auto bv = b.amplitudes();
    for (std::size_t i = 0; i < av.size(); ++i) {
        s += std::conj(av[i]) * bv[i];
    }
    return s;
}

/// <psi| P_q |psi> for a single-qubit Pauli on qubit q, via the closed
/// forms over stride pairs:
///   Z: sum_i (+-)|a_i|^2,  X: 2 sum Re(conj(a0) a1),  Y: 2 sum Im(conj(a0) a1).
/// The result is clamped to [-1, 1] against accumulated rounding.
inline double expectation(const state_vector& psi, std::size_t qubit, pauli_axis p) {
    const std::size_t st = psi.stride(qubit);
    const std::size_t dim = psi.dim();
    auto amps = psi.amplitudes();
    double acc = 0.0;
    if (p == pauli_axis::z) {
        for (std::size_t i = 0; i < dim; ++i) {
            const double w = std::norm(amps[i]);
            acc += ((i & st) == 0) ? w : -w;
        }
    } else {
        for (std::size_t base = 0; base < dim; base += 2 * st) {
            for (std::size_t k = 0; k < st; ++k) {
                const cplx cross = std::conj(amps[base + k]) * amps[base + k + st];
                acc += (p == pauli_axis::x) ? 2.0 * cross.real() : 2.0 * cross.imag();
            }
        }
    }
    if (acc > 1.0) {
        return 1.0;
    }
    if (acc < -1.0) {
        return -1.0;
    }
    return acc;
}

} // namespace qip
