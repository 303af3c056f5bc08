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
/**
 * @file qsim.hpp
 * Statevector simulation of the angle-embedding / ring-CNOT variational
 * circuit: exact Pauli-Z expectations, adjoint and parameter-shift
 * gradients, and shot-based estimates under stochastic noise.
 *
 * Basis-state indexing puts qubit 0 in the most significant bit, so on two
 * qubits |q0 q1> = |10> is amplitude index 2.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <numbers>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "errors.hpp"
#include "rng.hpp"

namespace hqnn::qsim {

using Complex = std::complex<double>;

enum class Pauli { X, Y, Z };

class StateVector {
  public:
    /// |0...0> on n_qubits.
    explicit StateVector(std::size_t n_qubits) : n_qubits_(n_qubits) {
        detail::require(n_qubits > 0 && n_qubits < 31,
                        "StateVector: n_qubits must be in [1, 30]");
        amps_.assign(std::size_t{1} << n_qubits, Complex{0.0, 0.0});
        amps_[0] = 1.0;
    }

    StateVector(std::size_t n_qubits, std::vector<Complex> amplitudes)
        : n_qubits_(n_qubits), amps_(std::move(amplitudes)) {
        detail::require(n_qubits > 0 && n_qubits < 31,
                        "StateVector: n_qubits must be in [1, 30]");
        detail::require(amps_.size() == (std::size_t{1} << n_qubits),
                        "StateVector: amplitude count must be 2^n_qubits");
    }

    [[nodiscard]] std::size_t n_qubits() const noexcept { return n_qubits_; }
    [[nodiscard]] std::size_t size() const noexcept { return amps_.size(); }
    [[nodiscard]] std::span<const Complex> amplitudes() const noexcept {
        return amps_;
    }
    [[nodiscard]] const Complex &operator[](std::size_t i) const {
        return amps_[i];
    }

    /// Bit mask selecting `qubit` in a basis-state index.
    [[nodiscard]] std::size_t mask(std::size_t qubit) const {
        check_qubit(qubit);
        return std::size_t{1} << (n_qubits_ - 1 - qubit);
    }

    void ry(std::size_t qubit, double theta) {
        const std::size_t m = mask(qubit);
        const double c = std::cos(theta / 2.0);
        const double s = std::sin(theta / 2.0);
        for_each_pair(m, [&](std::size_t i0, std::size_t i1) {
            const Complex a0 = amps_[i0];
            const Complex a1 = amps_[i1];
            amps_[i0] = c * a0 - s * a1;
            amps_[i1] = s * a0 + c * a1;
        });
    }

    void cnot(std::size_t control, std::size_t target) {
        detail::require(control != target,
                        "cnot: control and target must differ");
        const std::size_t mc = mask(control);
        const std::size_t mt = mask(target);
        for_each_pair(mt, [&](std::size_t i0, std::size_t i1) {
            if ((i0 & mc) != 0) {
                std::swap(amps_[i0], amps_[i1]);
            }
        });
    }

    void pauli(std::size_t qubit, Pauli p) {
        const std::size_t m = mask(qubit);
        const Complex i{0.0, 1.0};
        for_each_pair(m, [&](std::size_t i0, std::size_t i1) {
            const Complex a0 = amps_[i0];
            const Complex a1 = amps_[i1];
            switch (p) {
            case Pauli::X:
                amps_[i0] = a1;
                amps_[i1] = a0;
                break;
            case Pauli::Y:
                amps_[i0] = -i * a1;
                amps_[i1] = i * a0;
                break;
            case Pauli::Z:
                amps_[i1] = -a1;
                break;
            }
        });
    }

    /// <psi| Z_qubit |psi>
    [[nodiscard]] double expectation_z(std::size_t qubit) const {
        const std::size_t m = mask(qubit);
        double acc = 0.0;
        for (std::size_t k = 0; k < amps_.size(); ++k) {
            const double p = std::norm(amps_[k]);
            acc += (k & m) ? -p : p;
        }
        return acc;
    }

    [[nodiscard]] double norm_squared() const {
        double acc = 0.0;
        for (const auto &a : amps_) {
            acc += std::norm(a);
        }
        return acc;
    }

    [[nodiscard]] std::vector<double> probabilities() const {
        std::vector<double> p(amps_.size());
        std::transform(amps_.begin(), amps_.end(), p.begin(),
                       [](const Complex &a) { return std::norm(a); });
        return p;
    }

    /// <this|other>
    [[nodiscard]] Complex inner(const StateVector &other) const {
        Complex acc{0.0, 0.0};
        for (std::size_t k = 0; k < amps_.size(); ++k) {
            acc += std::conj(amps_[k]) * other.amps_[k];
        }
        return acc;
    }

  private:
    void check_qubit(std::size_t qubit) const {
        if (qubit >= n_qubits_) {
            throw ArgumentError("qubit index " + std::to_string(qubit) +
                                " out of range for " +
                                std::to_string(n_qubits_) + " qubits");
        }
    }

    // Visits (i0, i1) index pairs that differ only in the bits of `m`,
    // with i0 having the bit clear.
    template <class F> void for_each_pair(std::size_t m, F &&f) {
        const std::size_t n = amps_.size();
        for (std::size_t block = 0; block < n; block += 2 * m) {
            for (std::size_t off = 0; off < m; ++off) {
                const std::size_t i0 = block + off;
                f(i0, i0 + m);
            }
        }
    }

    std::size_t n_qubits_;
    std::vector<Complex> amps_;
};

inline StateVector apply_ry(StateVector state, std::size_t qubit,
                            double theta) {
    state.ry(qubit, theta);
    return state;
}

inline StateVector apply_cnot(StateVector state, std::size_t control,
                              std::size_t target) {
    state.cnot(control, target);
    return state;
}

/// One line per amplitude: `index real imag`, 17 significant digits.
inline void write_amplitudes(std::ostream &os, const StateVector &state) {
    char buf[96];
    for (std::size_t k = 0; k < state.size(); ++k) {
        std::snprintf(buf, sizeof buf, "%zu %.16e %.16e\n", k,
                      state[k].real(), state[k].imag());
        os << buf;
    }
}

// ---------------------------------------------------------------------------
// Circuit description

enum class Entanglement { Ring };

struct CircuitSpec {
    std::size_t n_qubits = 10;
    std::size_t n_layers = 4;
    Entanglement entanglement = Entanglement::Ring;

    [[nodiscard]] std::size_t parameter_count() const noexcept {
        return n_layers * n_qubits;
    }
    void validate() const {
        detail::require(n_qubits > 0 && n_qubits < 31,
                        "CircuitSpec: n_qubits must be in [1, 30]");
    }
    friend bool operator==(const CircuitSpec &, const CircuitSpec &) = default;
};

struct CircuitParams {
    std::vector<double> inputs; ///< encoding angles, one per qubit
    std::vector<double> thetas; ///< row-major [layer][qubit]

    static CircuitParams zeros(const CircuitSpec &spec) {
        return {std::vector<double>(spec.n_qubits, 0.0),
                std::vector<double>(spec.parameter_count(), 0.0)};
    }
    [[nodiscard]] double theta(const CircuitSpec &spec, std::size_t layer,
                               std::size_t qubit) const {
        return thetas[layer * spec.n_qubits + qubit];
    }
};

inline void check_shapes(const CircuitSpec &spec, const CircuitParams &p) {
    spec.validate();
    if (p.inputs.size() != spec.n_qubits) {
        throw ArgumentError("circuit inputs: expected " +
                            std::to_string(spec.n_qubits) + " angles, got " +
                            std::to_string(p.inputs.size()));
    }
    if (p.thetas.size() != spec.parameter_count()) {
        throw ArgumentError("circuit thetas: expected " +
                            std::to_string(spec.parameter_count()) +
                            " angles, got " + std::to_string(p.thetas.size()));
    }
}

/// Gate on the flattened tape. `param` indexes the flattened parameter
/// vector [inputs..., thetas...]; CNOTs carry no parameter.
struct Gate {
    enum class Kind { RY, CNOT } kind;
    std::size_t q0;
    std::size_t q1 = 0;
    std::size_t param = 0;
};

/// Encoding RY(z_i) on every qubit, then per layer RY(theta_{l,i}) on every
/// qubit followed by CNOT(0,1), CNOT(1,2), ..., CNOT(n-1,0).
inline std::vector<Gate> build_tape(const CircuitSpec &spec) {
    spec.validate();
    const std::size_t n = spec.n_qubits;
    std::vector<Gate> tape;
    tape.reserve(n + spec.n_layers * 2 * n);
    for (std::size_t q = 0; q < n; ++q) {
        tape.push_back({Gate::Kind::RY, q, 0, q});
    }
    for (std::size_t l = 0; l < spec.n_layers; ++l) {
        for (std::size_t q = 0; q < n; ++q) {
            tape.push_back({Gate::Kind::RY, q, 0, n + l * n + q});
        }
        if (n > 1) {
            for (std::size_t q = 0; q < n; ++q) {
                tape.push_back({Gate::Kind::CNOT, q, (q + 1) % n, 0});
            }
        }
    }
    return tape;
}

inline std::vector<double> flatten(const CircuitParams &p) {
    std::vector<double> flat(p.inputs);
    flat.insert(flat.end(), p.thetas.begin(), p.thetas.end());
    return flat;
}

inline CircuitParams unflatten(const CircuitSpec &spec,
                               std::span<const double> flat) {
    CircuitParams p;
    p.inputs.assign(flat.begin(), flat.begin() + spec.n_qubits);
    p.thetas.assign(flat.begin() + spec.n_qubits, flat.end());
    return p;
}

inline void apply_gate(StateVector &state, const Gate &g,
                       std::span<const double> flat, bool inverse = false) {
    if (g.kind == Gate::Kind::RY) {
        state.ry(g.q0, inverse ? -flat[g.param] : flat[g.param]);
    } else {
        state.cnot(g.q0, g.q1);
    }
}

inline StateVector prepare_state(const CircuitSpec &spec,
                                 const CircuitParams &params) {
    check_shapes(spec, params);
    const auto flat = flatten(params);
    StateVector state(spec.n_qubits);
    for (const Gate &g : build_tape(spec)) {
        apply_gate(state, g, flat);
    }
    return state;
}

inline std::vector<double> expectations(const StateVector &state) {
    std::vector<double> out(state.n_qubits());
    for (std::size_t q = 0; q < out.size(); ++q) {
        out[q] = std::clamp(state.expectation_z(q), -1.0, 1.0);
    }
    return out;
}

/// <Z_i> for every qubit of U(z, Theta)|0...0>.
inline std::vector<double> run_circuit(const CircuitSpec &spec,
                                       const CircuitParams &params) {
    return expectations(prepare_state(spec, params));
}

// ---------------------------------------------------------------------------
// Gradients

struct QuantumGradients {
    std::size_t n_qubits = 0;
    std::size_t n_layers = 0;
    std::vector<double> d_theta; ///< [output][layer][qubit]
    std::vector<double> d_input; ///< [output][input]

    static QuantumGradients zeros(const CircuitSpec &spec) {
        return {spec.n_qubits, spec.n_layers,
                std::vector<double>(spec.n_qubits * spec.parameter_count()),
                std::vector<double>(spec.n_qubits * spec.n_qubits)};
    }
    [[nodiscard]] double theta(std::size_t out, std::size_t layer,
                               std::size_t qubit) const {
        return d_theta[(out * n_layers + layer) * n_qubits + qubit];
    }
    [[nodiscard]] double input(std::size_t out, std::size_t j) const {
        return d_input[out * n_qubits + j];
    }
    /// d<Z_out>/d(flat parameter p), p over [inputs..., thetas...].
    double &flat(std::size_t out, std::size_t p) {
        if (p < n_qubits) {
            return d_input[out * n_qubits + p];
        }
        return d_theta[out * n_layers * n_qubits + (p - n_qubits)];
    }
};

/**
 * Exact Jacobian of every <Z_i> with respect to every circuit parameter from
 * one forward pass and one backward sweep. One bra per observable is swept
 * back through the tape alongside the ket; at each RY gate the derivative is
 * 2 Re <bra| dRY |ket> with dRY(t)/dt = RY(t + pi) / 2.
 */
inline QuantumGradients adjoint_gradients(const CircuitSpec &spec,
                                          const CircuitParams &params) {
    check_shapes(spec, params);
    const auto flat = flatten(params);
    const auto tape = build_tape(spec);
    const std::size_t n = spec.n_qubits;

    StateVector ket(n);
    for (const Gate &g : tape) {
        apply_gate(ket, g, flat);
    }
    std::vector<StateVector> bras(n, ket);
    for (std::size_t i = 0; i < n; ++i) {
        bras[i].pauli(i, Pauli::Z);
    }

    auto grads = QuantumGradients::zeros(spec);
    for (auto it = tape.rbegin(); it != tape.rend(); ++it) {
        const Gate &g = *it;
        apply_gate(ket, g, flat, /*inverse=*/true);
        if (g.kind == Gate::Kind::RY) {
            StateVector mu = ket;
            mu.ry(g.q0, flat[g.param] + std::numbers::pi);
            for (std::size_t i = 0; i < n; ++i) {
                grads.flat(i, g.param) = bras[i].inner(mu).real();
            }
        }
        for (auto &bra : bras) {
            apply_gate(bra, g, flat, /*inverse=*/true);
        }
    }
    return grads;
}

/// Two-term shift rule, (f(p + pi/2) - f(p - pi/2)) / 2, per parameter.
inline QuantumGradients parameter_shift_gradients(const CircuitSpec &spec,
                                                  const CircuitParams &params) {
    check_shapes(spec, params);
    auto flat = flatten(params);
    auto grads = QuantumGradients::zeros(spec);
    const double shift = std::numbers::pi / 2.0;
    for (std::size_t p = 0; p < flat.size(); ++p) {
        const double saved = flat[p];
        flat[p] = saved + shift;
        const auto plus = run_circuit(spec, unflatten(spec, flat));
        flat[p] = saved - shift;
        const auto minus = run_circuit(spec, unflatten(spec, flat));
        flat[p] = saved;
        for (std::size_t i = 0; i < spec.n_qubits; ++i) {
            grads.flat(i, p) = (plus[i] - minus[i]) / 2.0;
        }
    }
    return grads;
}

// ---------------------------------------------------------------------------
// Shot sampling and noise

struct NoiseConfig {
    std::optional<std::uint64_t> shots;
    double depolarizing_prob = 0.0; ///< Pauli insertion per gate and qubit
    double readout_flip_prob = 0.0; ///< per qubit per shot
    std::uint64_t rng_seed = 0;

    void validate() const {
        detail::require(depolarizing_prob >= 0.0 && depolarizing_prob <= 1.0,
                        "NoiseConfig: depolarizing_prob must be in [0, 1]");
        detail::require(readout_flip_prob >= 0.0 && readout_flip_prob <= 1.0,
                        "NoiseConfig: readout_flip_prob must be in [0, 1]");
    }
};

namespace impl {

inline std::size_t sample_index(std::span<const double> cdf, Rng &rng) {
    const double u = rng.uniform() * cdf.back();
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    return std::min<std::size_t>(static_cast<std::size_t>(it - cdf.begin()),
                                 cdf.size() - 1);
}

inline std::vector<double> cumulative(const StateVector &state) {
    std::vector<double> cdf(state.size());
    double acc = 0.0;
    for (std::size_t k = 0; k < cdf.size(); ++k) {
        acc += std::norm(state[k]);
        cdf[k] = acc;
    }
    return cdf;
}

// Runs the tape once, inserting a uniformly chosen Pauli on each qubit a
// gate touched with probability p. Returns false when nothing was inserted.
inline bool noisy_trajectory(StateVector &state, const std::vector<Gate> &tape,
                             std::span<const double> flat, double p, Rng &rng) {
    bool any = false;
    auto maybe_insert = [&](std::size_t q) {
        if (rng.bernoulli(p)) {
            state.pauli(q, static_cast<Pauli>(rng.below(3)));
            any = true;
        }
    };
    for (const Gate &g : tape) {
        apply_gate(state, g, flat);
        maybe_insert(g.q0);
        if (g.kind == Gate::Kind::CNOT) {
            maybe_insert(g.q1);
        }
    }
    return any;
}

} // namespace impl

/**
 * Estimates <Z_i> from `noise.shots` measured bitstrings. With depolarizing
 * noise each shot runs its own Pauli trajectory; readout flips are applied
 * to every qubit of every shot. Identical seeds give identical estimates.
 */
inline std::vector<double> sample_expectations(const CircuitSpec &spec,
                                               const CircuitParams &params,
                                               const NoiseConfig &noise) {
    check_shapes(spec, params);
    noise.validate();
    if (!noise.shots || *noise.shots == 0) {
        throw ArgumentError("sample_expectations: shots must be positive");
    }
    const std::size_t n = spec.n_qubits;
    const std::uint64_t shots = *noise.shots;
    const auto flat = flatten(params);
    const auto tape = build_tape(spec);
    Rng rng(noise.rng_seed);

    StateVector ideal(n);
    for (const Gate &g : tape) {
        apply_gate(ideal, g, flat);
    }
    const auto ideal_cdf = impl::cumulative(ideal);

    std::vector<std::uint64_t> ones(n, 0);
    std::vector<double> noisy_cdf;
    for (std::uint64_t s = 0; s < shots; ++s) {
        std::size_t outcome = 0;
        if (noise.depolarizing_prob > 0.0) {
            StateVector traj(n);
            if (impl::noisy_trajectory(traj, tape, flat,
                                         noise.depolarizing_prob, rng)) {
                noisy_cdf = impl::cumulative(traj);
                outcome = impl::sample_index(noisy_cdf, rng);
            } else {
                outcome = impl::sample_index(ideal_cdf, rng);
            }
        } else {
            outcome = impl::sample_index(ideal_cdf, rng);
        }
        for (std::size_t q = 0; q < n; ++q) {
            bool bit = (outcome >> (n - 1 - q)) & 1U;
            if (noise.readout_flip_prob > 0.0 &&
                rng.bernoulli(noise.readout_flip_prob)) {
                bit = !bit;
            }
            ones[q] += bit ? 1 : 0;
        }
    }
    std::vector<double> est(n);
    for (std::size_t q = 0; q < n; ++q) {
        const auto zeros = static_cast<double>(shots - ones[q]);
        est[q] = (zeros - static_cast<double>(ones[q])) /
                 static_cast<double>(shots);
    }
    return est;
}

} // namespace hqnn::qsim
