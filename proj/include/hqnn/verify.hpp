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
 * @file verify.hpp
 * Independent oracles and the verification suites built on them.
 *
 * The dense oracle never touches the statevector kernels: it assembles the
 * full 2^n x 2^n unitary from explicit Kronecker products of 2 x 2 matrices
 * and multiplies it out. Finite differences only call run_circuit or the
 * model forward pass.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "model.hpp"
#include "nn.hpp"
#include "qsim.hpp"
#include "rng.hpp"

namespace hqnn::verify {

using qsim::Complex;

/// Square complex matrix, row-major.
struct DenseMatrix {
    std::size_t dim = 0;
    std::vector<Complex> a;

    explicit DenseMatrix(std::size_t d = 0) : dim(d), a(d * d, Complex{0.0, 0.0}) {}
    Complex &operator()(std::size_t r, std::size_t c) { return a[r * dim + c]; }
    [[nodiscard]] const Complex &operator()(std::size_t r, std::size_t c) const {
        return a[r * dim + c];
    }
    static DenseMatrix identity(std::size_t d) {
        DenseMatrix m(d);
        for (std::size_t i = 0; i < d; ++i) {
            m(i, i) = 1.0;
        }
        return m;
    }
    static DenseMatrix two_by_two(Complex a00, Complex a01, Complex a10, Complex a11) {
        DenseMatrix m(2);
        m.a = {a00, a01, a10, a11};
        return m;
    }
};

inline DenseMatrix operator*(const DenseMatrix &x, const DenseMatrix &y) {
    DenseMatrix out(x.dim);
    for (std::size_t r = 0; r < x.dim; ++r) {
        for (std::size_t k = 0; k < x.dim; ++k) {
            const Complex v = x(r, k);
            if (v == Complex{0.0, 0.0}) {
                continue;
            }
            for (std::size_t c = 0; c < x.dim; ++c) {
                out(r, c) += v * y(k, c);
            }
        }
    }
    return out;
}

inline DenseMatrix operator+(DenseMatrix x, const DenseMatrix &y) {
    for (std::size_t i = 0; i < x.a.size(); ++i) {
        x.a[i] += y.a[i];
    }
    return x;
}

inline DenseMatrix kron(const DenseMatrix &x, const DenseMatrix &y) {
    DenseMatrix out(x.dim * y.dim);
    for (std::size_t r1 = 0; r1 < x.dim; ++r1) {
        for (std::size_t c1 = 0; c1 < x.dim; ++c1) {
            for (std::size_t r2 = 0; r2 < y.dim; ++r2) {
                for (std::size_t c2 = 0; c2 < y.dim; ++c2) {
                    out(r1 * y.dim + r2, c1 * y.dim + c2) = x(r1, c1) * y(r2, c2);
                }
            }
        }
    }
    return out;
}

/// Kronecker product of one 2x2 factor per qubit, qubit 0 leftmost.
inline DenseMatrix kron_all(const std::vector<DenseMatrix> &factors) {
    DenseMatrix out = factors.front();
    for (std::size_t q = 1; q < factors.size(); ++q) {
        out = kron(out, factors[q]);
    }
    return out;
}

inline DenseMatrix ry_matrix(double theta) {
    const double c = std::cos(theta / 2.0);
    const double s = std::sin(theta / 2.0);
    return DenseMatrix::two_by_two(c, -s, s, c);
}

inline DenseMatrix cnot_matrix(std::size_t n, std::size_t control, std::size_t target) {
    const auto eye = DenseMatrix::identity(2);
    const auto p0 = DenseMatrix::two_by_two(1.0, 0.0, 0.0, 0.0);
    const auto p1 = DenseMatrix::two_by_two(0.0, 0.0, 0.0, 1.0);
    const auto x = DenseMatrix::two_by_two(0.0, 1.0, 1.0, 0.0);
    std::vector<DenseMatrix> keep(n, eye);
    std::vector<DenseMatrix> flip(n, eye);
    keep[control] = p0;
    flip[control] = p1;
    flip[target] = x;
    return kron_all(keep) + kron_all(flip);
}

/// CNOT pairs of one entangling layer, in application order.
using RingOrder = std::vector<std::pair<std::size_t, std::size_t>>;

inline RingOrder ring_order(std::size_t n) {
    RingOrder order;
    if (n > 1) {
        for (std::size_t q = 0; q < n; ++q) {
            order.emplace_back(q, (q + 1) % n);
        }
    }
    return order;
}

inline DenseMatrix circuit_unitary(const qsim::CircuitSpec &spec,
                                   const qsim::CircuitParams &params,
                                   const RingOrder &order) {
    const std::size_t n = spec.n_qubits;
    std::vector<DenseMatrix> enc;
    for (std::size_t q = 0; q < n; ++q) {
        enc.push_back(ry_matrix(params.inputs[q]));
    }
    DenseMatrix u = kron_all(enc);
    for (std::size_t l = 0; l < spec.n_layers; ++l) {
        std::vector<DenseMatrix> rot;
        for (std::size_t q = 0; q < n; ++q) {
            rot.push_back(ry_matrix(params.theta(spec, l, q)));
        }
        u = kron_all(rot) * u;
        for (const auto &[c, t] : order) {
            u = cnot_matrix(n, c, t) * u;
        }
    }
    return u;
}

/// <Z_i> from the dense unitary; `order` defaults to the ring.
inline std::vector<double> oracle_expectations(const qsim::CircuitSpec &spec,
                                               const qsim::CircuitParams &params,
                                               const RingOrder *order = nullptr) {
    const auto ring = ring_order(spec.n_qubits);
    const auto u = circuit_unitary(spec, params, order ? *order : ring);
    const std::size_t dim = u.dim;
    std::vector<Complex> psi(dim);
    for (std::size_t r = 0; r < dim; ++r) {
        psi[r] = u(r, 0);
    }
    const auto eye = DenseMatrix::identity(2);
    const auto z = DenseMatrix::two_by_two(1.0, 0.0, 0.0, -1.0);
    std::vector<double> out(spec.n_qubits);
    for (std::size_t i = 0; i < spec.n_qubits; ++i) {
        std::vector<DenseMatrix> f(spec.n_qubits, eye);
        f[i] = z;
        const auto zi = kron_all(f);
        Complex acc{0.0, 0.0};
        for (std::size_t r = 0; r < dim; ++r) {
            for (std::size_t c = 0; c < dim; ++c) {
                acc += std::conj(psi[r]) * zi(r, c) * psi[c];
            }
        }
        out[i] = acc.real();
    }
    return out;
}

/// Central differences of run_circuit, one parameter at a time.
inline qsim::QuantumGradients finite_difference_gradients(const qsim::CircuitSpec &spec,
                                                          const qsim::CircuitParams &params,
                                                          double step = 1e-6) {
    auto flat = qsim::flatten(params);
    auto grads = qsim::QuantumGradients::zeros(spec);
    for (std::size_t p = 0; p < flat.size(); ++p) {
        const double saved = flat[p];
        flat[p] = saved + step;
        const auto plus = qsim::run_circuit(spec, qsim::unflatten(spec, flat));
        flat[p] = saved - step;
        const auto minus = qsim::run_circuit(spec, qsim::unflatten(spec, flat));
        flat[p] = saved;
        for (std::size_t i = 0; i < spec.n_qubits; ++i) {
            grads.flat(i, p) = (plus[i] - minus[i]) / (2.0 * step);
        }
    }
    return grads;
}

inline double max_abs_diff(const qsim::QuantumGradients &a, const qsim::QuantumGradients &b) {
    double m = 0.0;
    for (std::size_t k = 0; k < a.d_theta.size(); ++k) {
        m = std::max(m, std::abs(a.d_theta[k] - b.d_theta[k]));
    }
    for (std::size_t k = 0; k < a.d_input.size(); ++k) {
        m = std::max(m, std::abs(a.d_input[k] - b.d_input[k]));
    }
    return m;
}

inline qsim::CircuitParams random_params(const qsim::CircuitSpec &spec, Rng &rng,
                                         double range = std::numbers::pi) {
    auto p = qsim::CircuitParams::zeros(spec);
    for (double &v : p.inputs) {
        v = rng.uniform(-range, range);
    }
    for (double &v : p.thetas) {
        v = rng.uniform(-range, range);
    }
    return p;
}

/// |a - b| / max(|a|, |b|, floor). The floor sits above the roundoff noise of
/// a 1e-6 central difference, so near-zero entries are compared absolutely.
inline double relative_error(double a, double b, double floor = 1e-3) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

// ---------------------------------------------------------------------------
// Suites

struct CheckResult {
    std::string name;
    double max_deviation = 0.0;
    double tolerance = 0.0;
    std::size_t trials = 0;
    [[nodiscard]] bool passed() const { return max_deviation <= tolerance; }
};

struct GradcheckOptions {
    std::uint64_t seed = 20240601;
    std::size_t sim_trials = 100;
    std::size_t max_sim_qubits = 4;
    std::size_t grad_trials = 50;
    std::size_t grad_qubits = 10;
    std::size_t grad_layers = 4;
    std::size_t nn_trials = 100;
    std::size_t model_trials = 3;
};

using GradientFn =
    std::function<qsim::QuantumGradients(const qsim::CircuitSpec &, const qsim::CircuitParams &)>;

/// Statevector expectations vs the dense oracle over random small circuits.
inline CheckResult simulator_oracle_check(const GradcheckOptions &o) {
    Rng rng(derive_seed(o.seed, 11));
    CheckResult r{"simulator vs dense oracle", 0.0, 1e-12, o.sim_trials};
    for (std::size_t t = 0; t < o.sim_trials; ++t) {
        const qsim::CircuitSpec spec{1 + rng.below(o.max_sim_qubits), rng.below(4)};
        const auto params = random_params(spec, rng);
        const auto sim = qsim::run_circuit(spec, params);
        const auto ref = oracle_expectations(spec, params);
        for (std::size_t i = 0; i < sim.size(); ++i) {
            r.max_deviation = std::max(r.max_deviation, std::abs(sim[i] - ref[i]));
        }
    }
    return r;
}

/// Adjoint vs parameter shift (1e-10) and both vs central differences (1e-6).
inline std::vector<CheckResult> gradient_checks(const GradcheckOptions &o,
                                                const GradientFn &adjoint) {
    Rng rng(derive_seed(o.seed, 12));
    CheckResult vs_shift{"adjoint vs parameter shift", 0.0, 1e-10, o.grad_trials};
    CheckResult adj_fd{"adjoint vs finite differences", 0.0, 1e-6, o.grad_trials};
    CheckResult shift_fd{"parameter shift vs finite differences", 0.0, 1e-6, o.grad_trials};
    const qsim::CircuitSpec spec{o.grad_qubits, o.grad_layers};
    for (std::size_t t = 0; t < o.grad_trials; ++t) {
        const auto params = random_params(spec, rng);
        const auto a = adjoint(spec, params);
        const auto s = qsim::parameter_shift_gradients(spec, params);
        const auto f = finite_difference_gradients(spec, params);
        vs_shift.max_deviation = std::max(vs_shift.max_deviation, max_abs_diff(a, s));
        adj_fd.max_deviation = std::max(adj_fd.max_deviation, max_abs_diff(a, f));
        shift_fd.max_deviation = std::max(shift_fd.max_deviation, max_abs_diff(s, f));
    }
    return {vs_shift, adj_fd, shift_fd};
}

/**
 * x -> dense -> tanh -> dense -> relu -> dense -> focal loss; analytic
 * gradients for every weight and for x against central differences.
 */
inline CheckResult nn_gradient_check(const GradcheckOptions &o) {
    Rng rng(derive_seed(o.seed, 13));
    CheckResult r{"nn layers vs finite differences (relative)", 0.0, 1e-5, o.nn_trials};
    for (std::size_t t = 0; t < o.nn_trials; ++t) {
        const std::size_t d_in = 2 + rng.below(5);
        const std::size_t d_hid = 2 + rng.below(5);
        const std::size_t c = 2 + rng.below(4);
        std::vector<nn::DenseLayer> layers{nn::DenseLayer(d_hid, d_in), nn::DenseLayer(d_hid, d_hid),
                                           nn::DenseLayer(c, d_hid)};
        for (auto &l : layers) {
            for (double &w : l.weights) {
                w = rng.uniform(-1.5, 1.5);
            }
            for (double &b : l.bias) {
                b = rng.uniform(-0.5, 0.5);
            }
        }
        nn::Vector x(d_in);
        for (double &v : x) {
            v = rng.uniform(-2.0, 2.0);
        }
        const std::size_t target = rng.below(c);
        const nn::LossConfig cfg{rng.uniform(0.0, 3.0), rng.uniform(0.0, 0.3)};

        auto loss_of = [&](const std::vector<nn::DenseLayer> &ls, const nn::Vector &in) {
            const auto a = nn::tanh(nn::dense_forward(ls[0], in));
            const auto b = nn::relu(nn::dense_forward(ls[1], a));
            return nn::focal_loss(nn::dense_forward(ls[2], b), target, cfg).loss;
        };

        // analytic
        const auto pre0 = nn::dense_forward(layers[0], x);
        const auto a = nn::tanh(pre0);
        const auto pre1 = nn::dense_forward(layers[1], a);
        const auto b = nn::relu(pre1);
        const auto logits = nn::dense_forward(layers[2], b);
        const auto lr = nn::focal_loss(logits, target, cfg);
        std::vector<nn::DenseLayer> grads{nn::DenseLayer(d_hid, d_in), nn::DenseLayer(d_hid, d_hid),
                                          nn::DenseLayer(c, d_hid)};
        const auto db = nn::dense_backward(layers[2], b, lr.grad, grads[2]);
        const auto dpre1 = nn::relu_backward(pre1, db);
        const auto da = nn::dense_backward(layers[1], a, dpre1, grads[1]);
        const auto dpre0 = nn::tanh_backward(a, da);
        const auto dx = nn::dense_backward(layers[0], x, dpre0, grads[0]);

        const double h = 1e-6;
        auto probe = [&](double &slot, double analytic) {
            const double saved = slot;
            slot = saved + h;
            const double up = loss_of(layers, x);
            slot = saved - h;
            const double down = loss_of(layers, x);
            slot = saved;
            const double fd = (up - down) / (2.0 * h);
            r.max_deviation =
                std::max(r.max_deviation, relative_error(analytic, fd));
        };
        for (std::size_t l = 0; l < layers.size(); ++l) {
            for (std::size_t k = 0; k < layers[l].weights.size(); ++k) {
                probe(layers[l].weights[k], grads[l].weights[k]);
            }
            for (std::size_t k = 0; k < layers[l].bias.size(); ++k) {
                probe(layers[l].bias[k], grads[l].bias[k]);
            }
        }
        for (std::size_t k = 0; k < x.size(); ++k) {
            probe(x[k], dx[k]);
        }
    }
    return r;
}

/// Reduced model (4 qubits, 2 layers) for end-to-end gradient checks.
inline model::ModelConfig reduced_model_config(model::Variant v, std::uint64_t seed) {
    model::ModelConfig cfg;
    cfg.feature_dim = 6;
    cfg.bottleneck_dim = 4;
    cfg.hidden_dim = 5;
    cfg.n_classes = 3;
    cfg.variant = v;
    cfg.circuit = {4, 2};
    cfg.init_seed = seed;
    return cfg;
}

/// Full-model backward vs central differences of the scalar focal loss,
/// every parameter, relative error.
inline CheckResult model_gradient_check(model::Variant variant, const GradcheckOptions &o) {
    Rng rng(derive_seed(o.seed, 14 + static_cast<std::uint64_t>(variant)));
    CheckResult r{"model backward vs finite differences [" + std::string(model::to_string(variant)) +
                      "] (relative)",
                  0.0, 1e-5, o.model_trials};
    for (std::size_t t = 0; t < o.model_trials; ++t) {
        const auto cfg = reduced_model_config(variant, rng.next());
        auto params = model::init_model(cfg);
        if (params.q_weights) {
            for (double &w : *params.q_weights) {
                w = rng.uniform(-std::numbers::pi, std::numbers::pi);
            }
        }
        nn::Vector f(cfg.feature_dim);
        for (double &v : f) {
            v = rng.uniform(-2.0, 2.0);
        }
        const std::size_t target = rng.below(cfg.n_classes);
        const nn::LossConfig loss_cfg{2.0, 0.1};

        const auto fw = model::forward(params, cfg, f);
        const auto lr = nn::focal_loss(fw.logits, target, loss_cfg);
        const auto grads = model::backward(params, cfg, fw.cache, lr.grad);

        auto values = model::named_tensors(params, cfg);
        const auto analytic = model::named_tensors(grads, cfg);
        const double h = 1e-6;
        for (std::size_t k = 0; k < values.size(); ++k) {
            for (std::size_t i = 0; i < values[k].values.size(); ++i) {
                double &slot = values[k].values[i];
                const double saved = slot;
                slot = saved + h;
                const double up =
                    nn::focal_loss(model::forward(params, cfg, f).logits, target, loss_cfg).loss;
                slot = saved - h;
                const double down =
                    nn::focal_loss(model::forward(params, cfg, f).logits, target, loss_cfg).loss;
                slot = saved;
                r.max_deviation = std::max(
                    r.max_deviation, relative_error(analytic[k].values[i], (up - down) / (2.0 * h)));
            }
        }
    }
    return r;
}

/// Every suite; `adjoint` is the Jacobian routine under test.
inline std::vector<CheckResult> run_gradcheck(const GradcheckOptions &o,
                                              const GradientFn &adjoint = qsim::adjoint_gradients) {
    std::vector<CheckResult> out{simulator_oracle_check(o)};
    for (auto &c : gradient_checks(o, adjoint)) {
        out.push_back(std::move(c));
    }
    out.push_back(nn_gradient_check(o));
    for (auto v : {model::Variant::Hqnn, model::Variant::ClassicalMatched, model::Variant::Baseline}) {
        out.push_back(model_gradient_check(v, o));
    }
    return out;
}

} // namespace hqnn::verify
