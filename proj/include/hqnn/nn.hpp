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
 * @file nn.hpp
 * Dense layers, activations, focal loss, Adam with parameter groups, cosine
 * annealing and global-norm clipping. Every forward op has a hand-written
 * backward counterpart.
 */
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "errors.hpp"
#include "rng.hpp"

namespace hqnn::nn {

using Vector = std::vector<double>;

/// y = W x + b with W stored row-major [out][in].
struct DenseLayer {
    std::size_t in_dim = 0;
    std::size_t out_dim = 0;
    Vector weights;
    Vector bias;

    DenseLayer() = default;
    DenseLayer(std::size_t out, std::size_t in)
        : in_dim(in), out_dim(out), weights(out * in, 0.0), bias(out, 0.0) {}

    [[nodiscard]] std::size_t parameter_count() const noexcept {
        return out_dim * in_dim + out_dim;
    }
    double &w(std::size_t o, std::size_t i) { return weights[o * in_dim + i]; }
    [[nodiscard]] double w(std::size_t o, std::size_t i) const {
        return weights[o * in_dim + i];
    }
    friend bool operator==(const DenseLayer &, const DenseLayer &) = default;
};

inline Vector dense_forward(const DenseLayer &layer,
                            std::span<const double> x) {
    if (x.size() != layer.in_dim) {
        throw ArgumentError("dense_forward: input has " +
                            std::to_string(x.size()) + " entries, layer expects " +
                            std::to_string(layer.in_dim));
    }
    Vector y(layer.bias);
    for (std::size_t o = 0; o < layer.out_dim; ++o) {
        const double *row = layer.weights.data() + o * layer.in_dim;
        double acc = 0.0;
        for (std::size_t i = 0; i < layer.in_dim; ++i) {
            acc += row[i] * x[i];
        }
        y[o] += acc;
    }
    return y;
}

/// Accumulates dL/dW and dL/db into `grad`; returns dL/dx when asked.
inline Vector dense_backward(const DenseLayer &layer, std::span<const double> x,
                             std::span<const double> dy, DenseLayer &grad,
                             bool want_dx = true) {
    detail::require(x.size() == layer.in_dim && dy.size() == layer.out_dim,
                    "dense_backward: shape mismatch");
    detail::require(grad.in_dim == layer.in_dim && grad.out_dim == layer.out_dim,
                    "dense_backward: gradient buffer shape mismatch");
    Vector dx(want_dx ? layer.in_dim : 0, 0.0);
    for (std::size_t o = 0; o < layer.out_dim; ++o) {
        const double g = dy[o];
        grad.bias[o] += g;
        if (g == 0.0) {
            continue;
        }
        double *grow = grad.weights.data() + o * layer.in_dim;
        const double *row = layer.weights.data() + o * layer.in_dim;
        for (std::size_t i = 0; i < layer.in_dim; ++i) {
            grow[i] += g * x[i];
        }
        if (want_dx) {
            for (std::size_t i = 0; i < layer.in_dim; ++i) {
                dx[i] += g * row[i];
            }
        }
    }
    return dx;
}

// ---------------------------------------------------------------------------
// Activations

inline Vector tanh(std::span<const double> x) {
    Vector y(x.size());
    std::transform(x.begin(), x.end(), y.begin(),
                   [](double v) { return std::tanh(v); });
    return y;
}

/// Backward through tanh given its output y.
inline Vector tanh_backward(std::span<const double> y,
                            std::span<const double> dy) {
    Vector dx(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
        dx[i] = dy[i] * (1.0 - y[i] * y[i]);
    }
    return dx;
}

/// NaN passes through unchanged.
inline Vector relu(std::span<const double> x) {
    Vector y(x.size());
    std::transform(x.begin(), x.end(), y.begin(),
                   [](double v) { return v < 0.0 ? 0.0 : v; });
    return y;
}

/// Subgradient 0 at x == 0.
inline Vector relu_backward(std::span<const double> x,
                            std::span<const double> dy) {
    Vector dx(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        dx[i] = x[i] > 0.0 ? dy[i] : 0.0;
    }
    return dx;
}

inline Vector softmax(std::span<const double> logits) {
    detail::require(!logits.empty(), "softmax: empty input");
    const double peak = *std::max_element(logits.begin(), logits.end());
    Vector p(logits.size());
    double sum = 0.0;
    for (std::size_t k = 0; k < logits.size(); ++k) {
        p[k] = std::exp(logits[k] - peak);
        sum += p[k];
    }
    for (auto &v : p) {
        v /= sum;
    }
    return p;
}

struct DropoutResult {
    Vector output;
    Vector mask; ///< 0 or 1/(1-rate) per unit; all ones in evaluation
};

/// Inverted dropout: survivors are scaled by 1/(1-rate) during training so
/// evaluation is the identity.
inline DropoutResult dropout(std::span<const double> x, double rate, Rng &rng,
                             bool training) {
    if (!(rate >= 0.0 && rate < 1.0)) {
        throw ArgumentError("dropout: rate must be in [0, 1)");
    }
    DropoutResult r{Vector(x.begin(), x.end()), Vector(x.size(), 1.0)};
    if (!training || rate == 0.0) {
        return r;
    }
    const double keep_scale = 1.0 / (1.0 - rate);
    for (std::size_t i = 0; i < x.size(); ++i) {
        r.mask[i] = rng.bernoulli(rate) ? 0.0 : keep_scale;
        r.output[i] = x[i] * r.mask[i];
    }
    return r;
}

// ---------------------------------------------------------------------------
// Loss

struct LossConfig {
    double gamma = 2.0;     ///< focal exponent
    double smoothing = 0.1; ///< label-smoothing mass

    void validate() const {
        detail::require(gamma >= 0.0, "LossConfig: gamma must be >= 0");
        detail::require(smoothing >= 0.0 && smoothing < 1.0,
                        "LossConfig: smoothing must be in [0, 1)");
    }
};

struct LossResult {
    double loss = 0.0;          ///< focal loss
    double cross_entropy = 0.0; ///< label-smoothed cross entropy
    Vector grad;                ///< d loss / d logits
};

/**
 * Focal loss over a label-smoothed cross entropy:
 *   CE = -sum_k q_k log softmax(logits)_k,  q = (1-eps) onehot + eps/C
 *   loss = (1 - exp(-CE))^gamma * CE
 * dCE/dlogits = p - q, scaled by dloss/dCE.
 */
inline LossResult focal_loss(std::span<const double> logits, std::size_t target,
                             const LossConfig &cfg) {
    cfg.validate();
    const std::size_t c = logits.size();
    detail::require(c >= 2, "focal_loss: need at least two classes");
    detail::require(target < c, "focal_loss: target index out of range");
    for (double v : logits) {
        if (!std::isfinite(v)) {
            throw NumericError("focal_loss: non-finite logit");
        }
    }

    const double peak = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (double v : logits) {
        sum += std::exp(v - peak);
    }
    const double log_z = peak + std::log(sum);

    const double off = cfg.smoothing / static_cast<double>(c);
    const double on = 1.0 - cfg.smoothing + off;
    double ce = 0.0;
    Vector p(c);
    for (std::size_t k = 0; k < c; ++k) {
        const double log_p = logits[k] - log_z;
        p[k] = std::exp(log_p);
        ce -= (k == target ? on : off) * log_p;
    }
    ce = std::max(ce, 0.0);

    const double base = -std::expm1(-ce); // 1 - e^{-CE}
    double modulator = 1.0;
    double d_loss_d_ce = 1.0;
    if (cfg.gamma != 0.0) {
        modulator = std::pow(base, cfg.gamma);
        // d/dCE [base^g * CE] = g base^(g-1) e^{-CE} CE + base^g; the first
        // term tends to 0 as CE -> 0 for any g > 0.
        const double first =
            base > 0.0
                ? cfg.gamma * std::pow(base, cfg.gamma - 1.0) * std::exp(-ce) * ce
                : 0.0;
        d_loss_d_ce = first + modulator;
    }

    LossResult r;
    r.cross_entropy = ce;
    r.loss = modulator * ce;
    r.grad.resize(c);
    for (std::size_t k = 0; k < c; ++k) {
        r.grad[k] = d_loss_d_ce * (p[k] - (k == target ? on : off));
    }
    if (!std::isfinite(r.loss)) {
        throw NumericError("focal_loss: non-finite loss");
    }
    return r;
}

// ---------------------------------------------------------------------------
// Optimization

enum class ParamGroup : std::uint8_t { BackboneSurrogate = 0, Head = 1, Quantum = 2 };
inline constexpr std::size_t kGroupCount = 3;

inline std::string_view to_string(ParamGroup g) {
    switch (g) {
    case ParamGroup::BackboneSurrogate:
        return "backbone";
    case ParamGroup::Head:
        return "head";
    case ParamGroup::Quantum:
        return "quantum";
    }
    return "?";
}

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// One trainable tensor and its gradient, tagged with its group.
struct ParamSlot {
    std::span<double> value;
    std::span<const double> grad;
    ParamGroup group;
};

/// Bias-corrected Adam with one learning rate per parameter group. Moments
/// are allocated on the first step and tied to slot order thereafter.
class Adam {
  public:
    explicit Adam(std::array<double, kGroupCount> lrs, AdamConfig cfg = {})
        : lrs_(lrs), cfg_(cfg) {}

    void set_lr(ParamGroup g, double lr) { lrs_[index(g)] = lr; }
    [[nodiscard]] double lr(ParamGroup g) const { return lrs_[index(g)]; }
    [[nodiscard]] std::uint64_t steps() const noexcept { return step_; }
    [[nodiscard]] const AdamConfig &config() const noexcept { return cfg_; }
    [[nodiscard]] const std::vector<Vector> &first_moments() const { return m_; }
    [[nodiscard]] const std::vector<Vector> &second_moments() const { return v_; }

    void step(std::span<const ParamSlot> slots) {
        if (m_.empty()) {
            for (const auto &s : slots) {
                m_.emplace_back(s.value.size(), 0.0);
                v_.emplace_back(s.value.size(), 0.0);
            }
        }
        if (slots.size() != m_.size()) {
            throw ArgumentError("Adam::step: slot count changed between steps");
        }
        for (std::size_t k = 0; k < slots.size(); ++k) {
            if (slots[k].grad.size() != slots[k].value.size() ||
                slots[k].value.size() != m_[k].size()) {
                throw ArgumentError("Adam::step: gradient/parameter shape "
                                    "mismatch in slot " + std::to_string(k));
            }
        }
        ++step_;
        const double t = static_cast<double>(step_);
        const double bc1 = 1.0 - std::pow(cfg_.beta1, t);
        const double bc2 = 1.0 - std::pow(cfg_.beta2, t);
        for (std::size_t k = 0; k < slots.size(); ++k) {
            const double lr = lrs_[index(slots[k].group)];
            auto &m = m_[k];
            auto &v = v_[k];
            for (std::size_t i = 0; i < m.size(); ++i) {
                const double g = slots[k].grad[i];
                m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g;
                v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g * g;
                const double m_hat = m[i] / bc1;
                const double v_hat = v[i] / bc2;
                slots[k].value[i] -= lr * m_hat / (std::sqrt(v_hat) + cfg_.epsilon);
            }
        }
    }

  private:
    static std::size_t index(ParamGroup g) { return static_cast<std::size_t>(g); }

    std::array<double, kGroupCount> lrs_;
    AdamConfig cfg_;
    std::uint64_t step_ = 0;
    std::vector<Vector> m_;
    std::vector<Vector> v_;
};

/// Cosine annealing from base_lr at epoch 0 to eta_min at epoch t_max.
inline double cosine_lr(double base_lr, std::size_t epoch, std::size_t t_max,
                        double eta_min) {
    detail::require(t_max > 0, "cosine_lr: t_max must be positive");
    detail::require(epoch <= t_max, "cosine_lr: epoch exceeds t_max");
    if (epoch == 0) {
        return base_lr;
    }
    if (epoch == t_max) {
        return eta_min;
    }
    if (2 * epoch == t_max) {
        return (base_lr + eta_min) / 2.0;
    }
    const double phase = std::numbers::pi * static_cast<double>(epoch) /
                         static_cast<double>(t_max);
    return eta_min + (base_lr - eta_min) * (1.0 + std::cos(phase)) / 2.0;
}

/// Scales every gradient by max_norm / norm when the global L2 norm exceeds
/// max_norm. Returns the norm measured before clipping.
inline double clip_global_norm(std::span<const std::span<double>> grads,
                               double max_norm) {
    detail::require(max_norm > 0.0, "clip_global_norm: max_norm must be positive");
    double sq = 0.0;
    for (const auto &g : grads) {
        for (double v : g) {
            sq += v * v;
        }
    }
    const double norm = std::sqrt(sq);
    if (norm > max_norm) {
        const double scale = max_norm / norm;
        for (const auto &g : grads) {
            for (double &v : g) {
                v *= scale;
            }
        }
    }
    return norm;
}

} // namespace hqnn::nn
