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

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "qip/encode.hpp"
#include "support/oracle.hpp"

using namespace qip;
using Catch::Approx;

namespace {

/// Replays an encoder circuit through dense embedded matrices.
std::vector<cplx> dense_replay(std::span<const circuit_op> ops, std::size_t n) {
    std::vector<cplx> psi(std::size_t{1} << n, cplx(0.0, 0.0));
    psi[0] = 1.0;
    for (const circuit_op& op : ops) {
        const oracle::dense m =
            op.op == circuit_op::kind::cnot
                ? oracle::dense_cnot(op.qubit, op.qubit2, n)
                : oracle::embed_single(rotation_gate(rotation_axis(op.op), op.angle), op.qubit, n);
        psi = oracle::matvec(m, psi);
    }
    return psi;
}

} // namespace

TEST_CASE("qubit count for amplitude encoding is ceil(log2 d), minimum 1", "[encode]") {
    CHECK(qubits_for_amplitude(1) == 1);
    CHECK(qubits_for_amplitude(2) == 1);
    CHECK(qubits_for_amplitude(3) == 2);
    CHECK(qubits_for_amplitude(4) == 2);
    CHECK(qubits_for_amplitude(5) == 3);
    CHECK(qubits_for_amplitude(16) == 4);
    CHECK(qubits_for_amplitude(17) == 5);
}

TEST_CASE("layer count for rotation encoders is ceil(d / n)", "[encode]") {
    CHECK(layers_for(8, 4) == 2);
    CHECK(layers_for(5, 4) == 2);
    CHECK(layers_for(4, 4) == 1);
    CHECK(layers_for(1, 3) == 1);
}

TEST_CASE("amplitude encoding normalizes and zero-pads", "[encode]") {
    const encoding_spec spec = encoding_spec::amplitude(2);
    const std::vector<double> v{3.0, 4.0};
    const state_vector psi = encode(v, spec);
    CHECK(psi.n_qubits() == 1);
    CHECK(psi[0].real() == Approx(0.6).margin(1e-15));
    CHECK(psi[1].real() == Approx(0.8).margin(1e-15));

    const encoding_spec spec5 = encoding_spec::amplitude(5);
    CHECK(spec5.n_qubits == 3);
    const std::vector<double> e1{2.0, 0.0, 0.0, 0.0, 0.0};
    const state_vector phi = encode(e1, spec5);
    CHECK(phi.dim() == 8);
    CHECK(phi[0].real() == Approx(1.0).margin(1e-15));
    for (std::size_t i = 1; i < 8; ++i) {
        CHECK(std::abs(phi[i]) == 0.0);
    }
}

TEST_CASE("amplitude encoding is invariant under positive scaling", "[encode]") {
    std::mt19937_64 rng(31);
    const encoding_spec spec = encoding_spec::amplitude(6);
    const std::vector<double> v = oracle::random_vector(6, rng);
    std::vector<double> scaled = v;
    for (double& x : scaled) {
        x *= 37.5;
    }
    const state_vector a = encode(v, spec);
    const state_vector b = encode(scaled, spec);
    for (std::size_t i = 0; i < a.dim(); ++i) {
        REQUIRE(std::abs(a[i] - b[i]) < 1e-14);
    }

    // negating the input negates the state (a global sign, same ray)
    std::vector<double> neg = v;
    for (double& x : neg) {
        x = -x;
    }
    const state_vector c = encode(neg, spec);
    for (std::size_t i = 0; i < a.dim(); ++i) {
        REQUIRE(std::abs(a[i] + c[i]) < 1e-14);
    }
}

TEST_CASE("amplitude encoding rejects bad inputs", "[encode]") {
    const encoding_spec spec = encoding_spec::amplitude(4);
    CHECK_THROWS_AS(encode(std::vector<double>{0.0, 0.0, 0.0, 0.0}, spec), encoding_error);
    CHECK_THROWS_AS(encode(std::vector<double>{1.0, 2.0}, spec), encoding_error);
    CHECK_THROWS_AS(encode(std::vector<double>{1.0, 2.0, std::nan(""), 0.0}, spec),
                    encoding_error);
}

TEST_CASE("encoding_spec factories validate shape relations", "[encode]") {
    CHECK_NOTHROW(encoding_spec::amplitude(16));
    encoding_spec bad = encoding_spec::amplitude(16);
    bad.n_qubits = 3; // 16 amplitudes need 4 qubits
    CHECK_THROWS_AS(bad.validate(), config_error);

    encoding_spec ph = encoding_spec::phase(8, 4);
    CHECK(ph.layers == 2);
    ph.layers = 3;
    CHECK_THROWS_AS(ph.validate(), config_error);

    encoding_spec u = encoding_spec::u3(8, 4);
    CHECK(u.pqc_params.size() == 2 * 4 * 3);
    u.pqc_params.pop_back();
    CHECK_THROWS_AS(u.validate(), config_error);
}

TEST_CASE("phase encoding on one qubit is a bare R_Y rotation", "[encode]") {
    const encoding_spec spec = encoding_spec::phase(1, 1);
    const double v0 = 0.8765;
    const state_vector psi = encode(std::vector<double>{v0}, spec);
    CHECK(psi[0].real() == Approx(std::cos(v0 / 2.0)).margin(1e-15));
    CHECK(psi[1].real() == Approx(std::sin(v0 / 2.0)).margin(1e-15));
    CHECK(psi[0].imag() == 0.0);
    CHECK(psi[1].imag() == 0.0);
}

TEST_CASE("phase-encoded states have exactly real amplitudes", "[encode]") {
    std::mt19937_64 rng(41);
    const encoding_spec spec = encoding_spec::phase(7, 3);
    const std::vector<double> v = oracle::random_vector(7, rng);
    const state_vector psi = encode(v, spec);
    for (std::size_t i = 0; i < psi.dim(); ++i) {
        // R_Y and CNOT have real matrices, so no imaginary part can appear
        REQUIRE(psi[i].imag() == 0.0);
    }
    for (std::size_t q = 0; q < 3; ++q) {
        REQUIRE(expectation(psi, q, pauli_axis::y) == 0.0);
    }
}

TEST_CASE("circuit structure: slots, padding, ring", "[encode]") {
    // d = 3 on 2 qubits: 2 layers, slot 3 is padding (fixed angle 0)
    const encoding_spec spec = encoding_spec::phase(3, 2);
    const std::vector<double> v{0.1, 0.2, 0.3};
    const std::vector<circuit_op> ops = build_encoding_circuit(v, spec);
    // layer 0: ry(0), ry(1), cnot(0,1), cnot(1,0); layer 1: same again
    REQUIRE(ops.size() == 8);
    CHECK(ops[0].bind == circuit_op::binding::data);
    CHECK(ops[0].param_index == 0);
    CHECK(ops[0].angle == 0.1);
    CHECK(ops[1].param_index == 1);
    CHECK(ops[2].op == circuit_op::kind::cnot);
    CHECK(ops[2].qubit == 0);
    CHECK(ops[2].qubit2 == 1);
    CHECK(ops[3].qubit == 1);
    CHECK(ops[3].qubit2 == 0);
    CHECK(ops[4].param_index == 2);
    CHECK(ops[5].bind == circuit_op::binding::fixed);
    CHECK(ops[5].angle == 0.0);

    // single qubit: no ring at all
    const encoding_spec one = encoding_spec::phase(2, 1);
    const std::vector<circuit_op> ops1 =
        build_encoding_circuit(std::vector<double>{0.4, 0.5}, one);
    REQUIRE(ops1.size() == 2);
    CHECK(ops1[0].op == circuit_op::kind::ry);
    CHECK(ops1[1].op == circuit_op::kind::ry);

    CHECK_THROWS_AS(build_encoding_circuit(v, encoding_spec::amplitude(3)),
                    std::invalid_argument);
}

TEST_CASE("u3 circuit interleaves trainable blocks after each ring", "[encode]") {
    encoding_spec spec = encoding_spec::u3(2, 2);
    seed_pqc_params(spec, 99);
    const std::vector<double> v{0.3, -0.4};
    const std::vector<circuit_op> ops = build_encoding_circuit(v, spec);
    // ry, ry, cnot, cnot, then per qubit rx/ry/rz
    REQUIRE(ops.size() == 2 + 2 + 6);
    CHECK(ops[4].op == circuit_op::kind::rx);
    CHECK(ops[4].bind == circuit_op::binding::pqc);
    CHECK(ops[4].param_index == 0);
    CHECK(ops[5].op == circuit_op::kind::ry);
    CHECK(ops[6].op == circuit_op::kind::rz);
    CHECK(ops[7].param_index == 3);
    CHECK(ops[7].qubit == 1);
}

TEST_CASE("u3 with zero block angles equals the phase encoder", "[encode]") {
    std::mt19937_64 rng(55);
    for (auto [d, n] : {std::pair<std::size_t, std::size_t>{4, 2}, {7, 3}, {5, 1}}) {
        const std::vector<double> v = oracle::random_vector(d, rng);
        const state_vector a = encode(v, encoding_spec::phase(d, n));
        const state_vector b = encode(v, encoding_spec::u3(d, n));
        for (std::size_t i = 0; i < a.dim(); ++i) {
            REQUIRE(std::abs(a[i] - b[i]) < 1e-15);
        }
    }
}

TEST_CASE("rotation encoders match the dense replay oracle", "[encode][oracle]") {
    std::mt19937_64 rng(66);
    for (auto [d, n] : {std::pair<std::size_t, std::size_t>{4, 2}, {9, 3}, {6, 4}, {3, 1}}) {
        const std::vector<double> v = oracle::random_vector(d, rng);
        for (encoding_kind kind : {encoding_kind::phase, encoding_kind::u3}) {
            encoding_spec spec = kind == encoding_kind::phase ? encoding_spec::phase(d, n)
                                                              : encoding_spec::u3(d, n);
            seed_pqc_params(spec, 17);
            const state_vector fast = encode(v, spec);
            const std::vector<cplx> want = dense_replay(build_encoding_circuit(v, spec), n);
            for (std::size_t i = 0; i < fast.dim(); ++i) {
                REQUIRE(std::abs(fast[i] - want[i]) < 1e-12);
            }
        }
    }
}

TEST_CASE("block parameter seeding is deterministic and bounded", "[encode]") {
    encoding_spec a = encoding_spec::u3(8, 4);
    encoding_spec b = encoding_spec::u3(8, 4);
    seed_pqc_params(a, 123);
    seed_pqc_params(b, 123);
    CHECK(a.pqc_params == b.pqc_params);

    encoding_spec c = encoding_spec::u3(8, 4);
    seed_pqc_params(c, 124);
    CHECK(a.pqc_params != c.pqc_params);

    constexpr double bound = 3.14159265358979323846 / 8.0;
    for (double p : a.pqc_params) {
        CHECK(std::abs(p) <= bound);
    }
}

TEST_CASE("encode_batch reports the offending row", "[encode]") {
    matrix rows(3, 4);
    rows(0, 0) = 1.0;
    // row 1 stays all zero
    rows(2, 2) = 2.0;
    const encoding_spec spec = encoding_spec::amplitude(4);
    try {
        encode_batch(rows, spec);
        FAIL("expected encoding_error");
    } catch (const encoding_error& e) {
        CHECK(std::string(e.what()).find("row 1") != std::string::npos);
    }

    rows(1, 1) = 0.5;
    const std::vector<state_vector> states = encode_batch(rows, spec);
    CHECK(states.size() == 3);
}
