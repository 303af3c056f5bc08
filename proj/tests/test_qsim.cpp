// Copyright 2026 The hqnn Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "hqnn/qsim.hpp"
#include "hqnn/verify.hpp"

using namespace hqnn;
using namespace hqnn::qsim;
using Catch::Matchers::WithinAbs;

namespace {
constexpr double kPi = std::numbers::pi;

StateVector basis(std::size_t n, std::size_t index) {
    std::vector<Complex> a(std::size_t{1} << n);
    a[index] = 1.0;
    return StateVector(n, a);
}

bool same_state(const StateVector &a, const StateVector &b, double tol = 1e-15) {
    for (std::size_t k = 0; k < a.size(); ++k) {
        if (std::abs(a[k] - b[k]) > tol) {
            return false;
        }
    }
    return true;
}
} // namespace

TEST_CASE("apply_ry closed forms", "[qsim]") {
    SECTION("theta = 0 is the identity") {
        Rng rng(3);
        StateVector s(3);
        for (std::size_t q = 0; q < 3; ++q) {
            s.ry(q, rng.uniform(-kPi, kPi));
        }
        CHECK(same_state(apply_ry(s, 1, 0.0), s, 0.0));
    }
    SECTION("RY(pi)|0> = +|1>") {
        const auto s = apply_ry(StateVector(1), 0, kPi);
        CHECK_THAT(s[0].real(), WithinAbs(0.0, 1e-16));
        CHECK_THAT(s[1].real(), WithinAbs(1.0, 1e-16));
        CHECK(s[1].imag() == 0.0);
    }
    SECTION("RY(pi/2)|0> = (|0> + |1>)/sqrt2") {
        const auto s = apply_ry(StateVector(1), 0, kPi / 2);
        CHECK_THAT(s[0].real(), WithinAbs(1 / std::sqrt(2.0), 1e-15));
        CHECK_THAT(s[1].real(), WithinAbs(1 / std::sqrt(2.0), 1e-15));
    }
    SECTION("out-of-range qubit") {
        CHECK_THROWS_AS(apply_ry(StateVector(2), 2, 0.1), ArgumentError);
    }
}

TEST_CASE("qubit 0 is the most significant bit", "[qsim]") {
    // X on qubit 0 of |00> lands on |10>, which is index 2.
    const auto s = apply_ry(StateVector(2), 0, kPi);
    CHECK_THAT(s[2].real(), WithinAbs(1.0, 1e-15));
    CHECK_THAT(std::abs(s[1]), WithinAbs(0.0, 1e-15));
    CHECK(s.expectation_z(0) == Catch::Approx(-1.0));
    CHECK(s.expectation_z(1) == Catch::Approx(1.0));
}

TEST_CASE("apply_cnot", "[qsim]") {
    CHECK(same_state(apply_cnot(basis(2, 0b00), 0, 1), basis(2, 0b00)));
    CHECK(same_state(apply_cnot(basis(2, 0b10), 0, 1), basis(2, 0b11)));
    CHECK(same_state(apply_cnot(basis(2, 0b01), 0, 1), basis(2, 0b01)));

    const double r = 1 / std::sqrt(2.0);
    const StateVector plus(2, {r, 0.0, r, 0.0});
    const StateVector bell(2, {r, 0.0, 0.0, r});
    CHECK(same_state(apply_cnot(plus, 0, 1), bell));

    CHECK_THROWS_AS(apply_cnot(StateVector(2), 1, 1), ArgumentError);
    CHECK_THROWS_AS(apply_cnot(StateVector(2), 0, 2), ArgumentError);
}

TEST_CASE("norm is preserved by every gate", "[qsim][property]") {
    Rng rng(17);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 1 + rng.below(6);
        StateVector s(n);
        for (int g = 0; g < 40; ++g) {
            const std::size_t q = rng.below(n);
            switch (rng.below(3)) {
            case 0:
                s.ry(q, rng.uniform(-kPi, kPi));
                break;
            case 1:
                if (n > 1) {
                    s.cnot(q, (q + 1 + rng.below(n - 1)) % n);
                }
                break;
            default:
                s.pauli(q, static_cast<Pauli>(rng.below(3)));
            }
            REQUIRE_THAT(s.norm_squared(), WithinAbs(1.0, 1e-12));
        }
    }
}

TEST_CASE("run_circuit closed forms", "[qsim]") {
    SECTION("all-zero parameters act as identity") {
        const CircuitSpec spec{10, 4};
        for (double v : run_circuit(spec, CircuitParams::zeros(spec))) {
            CHECK(v == 1.0);
        }
    }
    SECTION("single qubit, no layers: <Z> = cos(theta)") {
        const CircuitSpec spec{1, 0};
        for (double t : {-2.5, -0.3, 0.0, 0.7, 1.9, kPi}) {
            CHECK_THAT(run_circuit(spec, {{t}, {}})[0], WithinAbs(std::cos(t), 1e-15));
        }
    }
    SECTION("shape mismatch") {
        const CircuitSpec spec{3, 2};
        CHECK_THROWS_AS(run_circuit(spec, {{0.0, 0.0}, std::vector<double>(6)}), ArgumentError);
        CHECK_THROWS_AS(run_circuit(spec, {{0.0, 0.0, 0.0}, std::vector<double>(5)}),
                        ArgumentError);
    }
}

TEST_CASE("tape layout: encoding, then RY layer and ring per layer", "[qsim]") {
    const auto tape = build_tape({3, 2});
    REQUIRE(tape.size() == 3 + 2 * 6);
    const std::vector<std::pair<std::size_t, std::size_t>> ring{{0, 1}, {1, 2}, {2, 0}};
    for (std::size_t l = 0; l < 2; ++l) {
        for (std::size_t q = 0; q < 3; ++q) {
            const auto &g = tape[3 + l * 6 + q];
            CHECK(g.kind == Gate::Kind::RY);
            CHECK(g.param == 3 + l * 3 + q);
        }
        for (std::size_t k = 0; k < 3; ++k) {
            const auto &g = tape[3 + l * 6 + 3 + k];
            CHECK(g.kind == Gate::Kind::CNOT);
            CHECK(std::pair{g.q0, g.q1} == ring[k]);
        }
    }
}

TEST_CASE("3-qubit, 1-layer circuit matches the dense Kronecker oracle", "[qsim][oracle]") {
    Rng rng(2024);
    const CircuitSpec spec{3, 1};
    for (int trial = 0; trial < 10; ++trial) {
        const auto p = verify::random_params(spec, rng);
        const auto sim = run_circuit(spec, p);
        const auto ref = verify::oracle_expectations(spec, p);
        for (std::size_t i = 0; i < 3; ++i) {
            CHECK_THAT(sim[i], WithinAbs(ref[i], 1e-12));
        }
    }
}

TEST_CASE("simulator matches the dense oracle for n <= 4 (100 seeded circuits)",
          "[qsim][oracle][property]") {
    verify::GradcheckOptions o;
    const auto r = verify::simulator_oracle_check(o);
    CHECK(r.trials == 100);
    CHECK(r.max_deviation <= 1e-12);
}

TEST_CASE("ring order matters: permuted CNOT order is detectable", "[qsim][oracle]") {
    const CircuitSpec spec{3, 1};
    const verify::RingOrder reversed{{2, 0}, {1, 2}, {0, 1}};
    Rng rng(5);
    bool witnessed = false;
    for (int trial = 0; trial < 20 && !witnessed; ++trial) {
        const auto p = verify::random_params(spec, rng);
        const auto sim = run_circuit(spec, p);
        const auto ring = verify::oracle_expectations(spec, p);
        const auto perm = verify::oracle_expectations(spec, p, &reversed);
        double sim_vs_ring = 0.0;
        double ring_vs_perm = 0.0;
        for (std::size_t i = 0; i < 3; ++i) {
            sim_vs_ring = std::max(sim_vs_ring, std::abs(sim[i] - ring[i]));
            ring_vs_perm = std::max(ring_vs_perm, std::abs(ring[i] - perm[i]));
        }
        REQUIRE(sim_vs_ring <= 1e-12);
        witnessed = ring_vs_perm > 1e-3;
    }
    CHECK(witnessed);
}

TEST_CASE("expectations stay within [-1, 1]", "[qsim][property]") {
    Rng rng(8);
    for (int trial = 0; trial < 30; ++trial) {
        const CircuitSpec spec{1 + rng.below(8), rng.below(5)};
        for (double v : run_circuit(spec, verify::random_params(spec, rng, 10.0))) {
            CHECK(v >= -1.0);
            CHECK(v <= 1.0);
        }
    }
}

TEST_CASE("adjoint gradients", "[qsim][gradients]") {
    SECTION("single qubit closed forms") {
        const CircuitSpec spec{1, 0};
        CHECK_THAT(adjoint_gradients(spec, {{0.0}, {}}).input(0, 0), WithinAbs(0.0, 1e-15));
        CHECK_THAT(adjoint_gradients(spec, {{kPi / 2}, {}}).input(0, 0), WithinAbs(-1.0, 1e-15));
    }
    SECTION("10 qubits, 4 layers: agrees with parameter shift within 1e-10") {
        Rng rng(99);
        const CircuitSpec spec{10, 4};
        for (int trial = 0; trial < 3; ++trial) {
            const auto p = verify::random_params(spec, rng);
            const auto a = adjoint_gradients(spec, p);
            const auto s = parameter_shift_gradients(spec, p);
            CHECK(verify::max_abs_diff(a, s) <= 1e-10);
        }
    }
    SECTION("entries finite and bounded by 1") {
        Rng rng(100);
        const CircuitSpec spec{5, 3};
        const auto g = adjoint_gradients(spec, verify::random_params(spec, rng));
        for (double v : g.d_theta) {
            CHECK(std::isfinite(v));
            CHECK(std::abs(v) <= 1.0 + 1e-12);
        }
        for (double v : g.d_input) {
            CHECK(std::abs(v) <= 1.0 + 1e-12);
        }
    }
    SECTION("shape mismatch") {
        CHECK_THROWS_AS(adjoint_gradients({2, 1}, {{0.0}, {0.0, 0.0}}), ArgumentError);
    }
}

TEST_CASE("parameter-shift gradients", "[qsim][gradients]") {
    SECTION("single qubit at pi/2") {
        CHECK_THAT(parameter_shift_gradients({1, 0}, {{kPi / 2}, {}}).input(0, 0),
                   WithinAbs(-1.0, 1e-15));
    }
    SECTION("all-zero parameters give zero theta gradients") {
        const CircuitSpec spec{4, 3};
        for (double v : parameter_shift_gradients(spec, CircuitParams::zeros(spec)).d_theta) {
            CHECK_THAT(v, WithinAbs(0.0, 1e-15));
        }
    }
    SECTION("3 qubits vs central finite differences") {
        Rng rng(7);
        const CircuitSpec spec{3, 2};
        for (int trial = 0; trial < 5; ++trial) {
            const auto p = verify::random_params(spec, rng);
            CHECK(verify::max_abs_diff(parameter_shift_gradients(spec, p),
                                       verify::finite_difference_gradients(spec, p, 1e-6)) <= 1e-6);
        }
    }
}

TEST_CASE("sample_expectations", "[qsim][sampling]") {
    const CircuitSpec spec{4, 2};

    SECTION("|0...0> without noise is measured exactly") {
        NoiseConfig n;
        n.shots = 37;
        for (double v : sample_expectations(spec, CircuitParams::zeros(spec), n)) {
            CHECK(v == 1.0);
        }
    }
    SECTION("readout flip 0.5 randomizes every qubit") {
        NoiseConfig n;
        n.shots = 4096;
        n.readout_flip_prob = 0.5;
        n.rng_seed = 1;
        Rng rng(3);
        const auto est = sample_expectations(spec, verify::random_params(spec, rng), n);
        for (double v : est) {
            CHECK(std::abs(v) <= 3.0 / std::sqrt(4096.0));
        }
    }
    SECTION("single qubit at pi/2: binomial 3-sigma bound over 20 seeds") {
        const CircuitSpec one{1, 0};
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            NoiseConfig n;
            n.shots = 10000;
            n.rng_seed = seed;
            const double est = sample_expectations(one, {{kPi / 2}, {}}, n)[0];
            CHECK(std::abs(est) <= 3.0 / std::sqrt(10000.0));
        }
    }
    SECTION("identical seeds give identical estimates") {
        Rng rng(4);
        const auto p = verify::random_params(spec, rng);
        NoiseConfig n;
        n.shots = 500;
        n.depolarizing_prob = 0.05;
        n.readout_flip_prob = 0.03;
        n.rng_seed = 42;
        CHECK(sample_expectations(spec, p, n) == sample_expectations(spec, p, n));
        auto m = n;
        m.rng_seed = 43;
        CHECK(sample_expectations(spec, p, n) != sample_expectations(spec, p, m));
    }
    SECTION("shot average converges to the exact expectation") {
        Rng rng(6);
        const auto p = verify::random_params(spec, rng);
        const auto exact = run_circuit(spec, p);
        NoiseConfig n;
        n.shots = 200000;
        n.rng_seed = 8;
        const auto est = sample_expectations(spec, p, n);
        for (std::size_t i = 0; i < exact.size(); ++i) {
            CHECK(std::abs(est[i] - exact[i]) <= 4.0 / std::sqrt(200000.0));
        }
    }
    SECTION("full depolarizing noise pulls expectations toward zero") {
        NoiseConfig n;
        n.shots = 4000;
        n.depolarizing_prob = 1.0;
        n.rng_seed = 2;
        for (double v : sample_expectations(spec, CircuitParams::zeros(spec), n)) {
            CHECK(std::abs(v) < 0.5);
        }
    }
    SECTION("invalid configurations") {
        NoiseConfig n;
        CHECK_THROWS_AS(sample_expectations(spec, CircuitParams::zeros(spec), n), ArgumentError);
        n.shots = 0;
        CHECK_THROWS_AS(sample_expectations(spec, CircuitParams::zeros(spec), n), ArgumentError);
        n.shots = 10;
        n.readout_flip_prob = 1.5;
        CHECK_THROWS_AS(sample_expectations(spec, CircuitParams::zeros(spec), n), ArgumentError);
    }
}

TEST_CASE("amplitude dump format", "[qsim]") {
    std::ostringstream os;
    write_amplitudes(os, apply_ry(StateVector(1), 0, kPi / 3));
    std::istringstream is(os.str());
    std::size_t idx = 0;
    double re = 0.0;
    double im = 0.0;
    is >> idx >> re >> im;
    CHECK(idx == 0);
    CHECK(re == std::cos(kPi / 6)); // 17 significant digits round-trip exactly
    CHECK(im == 0.0);
    is >> idx >> re >> im;
    CHECK(idx == 1);
    CHECK(re == std::sin(kPi / 6));
    CHECK(os.str().find("0 8.6602540378443871e-01 0.0000000000000000e+00\n") == 0);
}
