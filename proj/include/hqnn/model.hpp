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
 * @file model.hpp
 * The three comparison architectures over a shared bottleneck and head:
 *
 *   z      = tanh(fc_reduce f)
 *   h      = <Z>(U(z, Theta))        Hqnn
 *          = tanh(classical_block z)  ClassicalMatched
 *          = z                        Baseline
 *   logits = head_2 dropout(relu(head_1 h))
 */
#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "errors.hpp"
#include "nn.hpp"
#include "qsim.hpp"
#include "rng.hpp"

namespace hqnn::model {

using nn::DenseLayer;
using nn::Vector;

enum class Variant : std::uint8_t { Hqnn, ClassicalMatched, Baseline };

inline constexpr std::string_view to_string(Variant v) {
    switch (v) {
    case Variant::Hqnn:
        return "hqnn";
    case Variant::ClassicalMatched:
        return "matched";
    case Variant::Baseline:
        return "baseline";
    }
    return "?";
}

inline std::optional<Variant> parse_variant(std::string_view s) {
    for (Variant v : {Variant::Hqnn, Variant::ClassicalMatched, Variant::Baseline}) {
        if (s == to_string(v)) {
            return v;
        }
    }
    return std::nullopt;
}

struct ModelConfig {
    std::size_t feature_dim = 2048;
    std::size_t bottleneck_dim = 10;
    std::size_t hidden_dim = 32;
    std::size_t n_classes = 8;
    Variant variant = Variant::Hqnn;
    qsim::CircuitSpec circuit{10, 4};
    double dropout_rate = 0.3;
    /// Multiply the tanh bottleneck by pi before using it as RY angles.
    bool rescale_pi = false;
    /// fc_reduce learns at the head rate unless assigned to the backbone group.
    nn::ParamGroup reduce_group = nn::ParamGroup::Head;
    std::uint64_t init_seed = 0;

    void validate() const {
        detail::require(feature_dim > 0 && bottleneck_dim > 0 && hidden_dim > 0,
                        "ModelConfig: dimensions must be positive");
        detail::require(n_classes >= 2, "ModelConfig: need at least two classes");
        detail::require(dropout_rate >= 0.0 && dropout_rate < 1.0,
                        "ModelConfig: dropout_rate must be in [0, 1)");
        if (variant == Variant::Hqnn) {
            circuit.validate();
            detail::require(bottleneck_dim == circuit.n_qubits,
                            "ModelConfig: HQNN requires bottleneck_dim == n_qubits");
        }
    }

    [[nodiscard]] double encoding_scale() const {
        return rescale_pi ? std::numbers::pi : 1.0;
    }
};

inline void to_json(nlohmann::json &j, const ModelConfig &c) {
    j = nlohmann::json{{"feature_dim", c.feature_dim},
                       {"bottleneck_dim", c.bottleneck_dim},
                       {"hidden_dim", c.hidden_dim},
                       {"n_classes", c.n_classes},
                       {"variant", std::string(to_string(c.variant))},
                       {"n_qubits", c.circuit.n_qubits},
                       {"n_layers", c.circuit.n_layers},
                       {"entanglement", "ring"},
                       {"dropout_rate", c.dropout_rate},
                       {"rescale_pi", c.rescale_pi},
                       {"reduce_group", std::string(nn::to_string(c.reduce_group))},
                       {"init_seed", c.init_seed}};
}

inline void from_json(const nlohmann::json &j, ModelConfig &c) {
    j.at("feature_dim").get_to(c.feature_dim);
    j.at("bottleneck_dim").get_to(c.bottleneck_dim);
    j.at("hidden_dim").get_to(c.hidden_dim);
    j.at("n_classes").get_to(c.n_classes);
    const auto v = parse_variant(j.at("variant").get<std::string>());
    if (!v) {
        throw ArgumentError("ModelConfig: unknown variant");
    }
    c.variant = *v;
    j.at("n_qubits").get_to(c.circuit.n_qubits);
    j.at("n_layers").get_to(c.circuit.n_layers);
    j.at("dropout_rate").get_to(c.dropout_rate);
    j.at("rescale_pi").get_to(c.rescale_pi);
    const auto group = j.at("reduce_group").get<std::string>();
    c.reduce_group = group == "backbone" ? nn::ParamGroup::BackboneSurrogate
                                         : nn::ParamGroup::Head;
    j.at("init_seed").get_to(c.init_seed);
}

// ---------------------------------------------------------------------------
// Parameter accounting

struct ParameterCounts {
    std::size_t fc_reduce = 0;
    std::size_t classical_block = 0;
    std::size_t q_layer = 0;
    std::size_t head = 0;
    std::size_t total = 0; ///< trainable, backbone excluded
};

inline ParameterCounts count_parameters(const ModelConfig &cfg) {
    cfg.validate();
    ParameterCounts c;
    const std::size_t b = cfg.bottleneck_dim;
    c.fc_reduce = cfg.feature_dim * b + b;
    if (cfg.variant == Variant::ClassicalMatched) {
        c.classical_block = b * b + b;
    }
    if (cfg.variant == Variant::Hqnn) {
        c.q_layer = cfg.circuit.n_layers * cfg.circuit.n_qubits;
    }
    c.head = b * cfg.hidden_dim + cfg.hidden_dim +
             cfg.hidden_dim * cfg.n_classes + cfg.n_classes;
    c.total = c.fc_reduce + c.classical_block + c.q_layer + c.head;
    return c;
}

// ---------------------------------------------------------------------------
// Parameters

struct ModelParams {
    DenseLayer fc_reduce;
    std::optional<DenseLayer> classical_block;
    std::optional<Vector> q_weights; ///< row-major [layer][qubit]
    DenseLayer head_1;
    DenseLayer head_2;

    friend bool operator==(const ModelParams &, const ModelParams &) = default;
};

/// Zero-valued parameters with the shapes `cfg` implies; doubles as a
/// gradient accumulator.
inline ModelParams zero_params(const ModelConfig &cfg) {
    cfg.validate();
    ModelParams p;
    p.fc_reduce = DenseLayer(cfg.bottleneck_dim, cfg.feature_dim);
    if (cfg.variant == Variant::ClassicalMatched) {
        p.classical_block = DenseLayer(cfg.bottleneck_dim, cfg.bottleneck_dim);
    }
    if (cfg.variant == Variant::Hqnn) {
        p.q_weights = Vector(cfg.circuit.parameter_count(), 0.0);
    }
    p.head_1 = DenseLayer(cfg.hidden_dim, cfg.bottleneck_dim);
    p.head_2 = DenseLayer(cfg.n_classes, cfg.hidden_dim);
    return p;
}

/// Dense weights and biases ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in));
/// circuit angles ~ U(-0.01, 0.01).
inline ModelParams init_model(const ModelConfig &cfg) {
    ModelParams p = zero_params(cfg);
    Rng rng(cfg.init_seed);
    auto fill = [&rng](DenseLayer &layer) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(layer.in_dim));
        for (double &w : layer.weights) {
            w = rng.uniform(-bound, bound);
        }
        for (double &b : layer.bias) {
            b = rng.uniform(-bound, bound);
        }
    };
    fill(p.fc_reduce);
    if (p.classical_block) {
        fill(*p.classical_block);
    }
    if (p.q_weights) {
        for (double &t : *p.q_weights) {
            t = rng.uniform(-0.01, 0.01);
        }
    }
    fill(p.head_1);
    fill(p.head_2);
    return p;
}

template <class T> struct BasicNamedTensor {
    std::string name;
    std::span<T> values;
    nn::ParamGroup group;
};
using NamedTensor = BasicNamedTensor<double>;
using ConstNamedTensor = BasicNamedTensor<const double>;

namespace impl {
template <class P, class T>
std::vector<BasicNamedTensor<T>> named_tensors_impl(P &p, const ModelConfig &cfg) {
    using nn::ParamGroup;
    std::vector<BasicNamedTensor<T>> out;
    auto dense = [&out](auto &layer, const std::string &name, ParamGroup g) {
        out.push_back({name + ".weight", std::span<T>(layer.weights), g});
        out.push_back({name + ".bias", std::span<T>(layer.bias), g});
    };
    dense(p.fc_reduce, "fc_reduce", cfg.reduce_group);
    if (p.classical_block) {
        dense(*p.classical_block, "classical_block", ParamGroup::Head);
    }
    if (p.q_weights) {
        out.push_back({"q_layer.weights", std::span<T>(*p.q_weights),
                       ParamGroup::Quantum});
    }
    dense(p.head_1, "head.0", ParamGroup::Head);
    dense(p.head_2, "head.3", ParamGroup::Head);
    return out;
}
} // namespace impl

/// Every trainable tensor in a fixed order, with its optimizer group.
inline std::vector<NamedTensor> named_tensors(ModelParams &p, const ModelConfig &cfg) {
    return impl::named_tensors_impl<ModelParams, double>(p, cfg);
}
inline std::vector<ConstNamedTensor> named_tensors(const ModelParams &p,
                                                   const ModelConfig &cfg) {
    return impl::named_tensors_impl<const ModelParams, const double>(p, cfg);
}

inline std::size_t parameter_total(const ModelParams &p, const ModelConfig &cfg) {
    std::size_t n = 0;
    for (const auto &t : named_tensors(p, cfg)) {
        n += t.values.size();
    }
    return n;
}

// ---------------------------------------------------------------------------
// Forward / backward

struct ForwardOptions {
    bool training = false;
    Rng *rng = nullptr; ///< dropout source; required when training
    /// When set (with shots), quantum features come from shot sampling.
    const qsim::NoiseConfig *noise = nullptr;
    /// Replace the variant transform by the identity (h = z).
    bool identity_transform = false;
};

struct ForwardCache {
    Vector features;
    Vector z;      ///< bottleneck output
    Vector angles; ///< encoding angles (Hqnn)
    Vector h;      ///< head input
    Vector hidden_pre;
    Vector dropout_mask;
    Vector hidden_out; ///< relu + dropout
    bool identity_transform = false;
    bool sampled = false;
};

struct ForwardResult {
    Vector logits;
    ForwardCache cache;
};

inline ForwardResult forward(const ModelParams &params, const ModelConfig &cfg,
                             std::span<const double> f, const ForwardOptions &opts = {}) {
    if (f.size() != cfg.feature_dim) {
        throw ArgumentError("forward: feature vector has " + std::to_string(f.size()) +
                            " entries, model expects " + std::to_string(cfg.feature_dim));
    }
    ForwardResult r;
    auto &c = r.cache;
    c.features.assign(f.begin(), f.end());
    c.z = nn::tanh(nn::dense_forward(params.fc_reduce, f));
    c.identity_transform = opts.identity_transform;

    if (opts.identity_transform || cfg.variant == Variant::Baseline) {
        c.h = c.z;
    } else if (cfg.variant == Variant::ClassicalMatched) {
        c.h = nn::tanh(nn::dense_forward(*params.classical_block, c.z));
    } else {
        c.angles = c.z;
        const double scale = cfg.encoding_scale();
        for (double &a : c.angles) {
            a *= scale;
        }
        const qsim::CircuitParams cp{c.angles, *params.q_weights};
        if (opts.noise != nullptr && opts.noise->shots) {
            c.h = qsim::sample_expectations(cfg.circuit, cp, *opts.noise);
            c.sampled = true;
        } else {
            c.h = qsim::run_circuit(cfg.circuit, cp);
        }
    }

    c.hidden_pre = nn::dense_forward(params.head_1, c.h);
    const Vector act = nn::relu(c.hidden_pre);
    if (opts.training) {
        detail::require(opts.rng != nullptr, "forward: training mode needs an rng");
        auto d = nn::dropout(act, cfg.dropout_rate, *opts.rng, true);
        c.hidden_out = std::move(d.output);
        c.dropout_mask = std::move(d.mask);
    } else {
        c.hidden_out = act;
        c.dropout_mask.assign(act.size(), 1.0);
    }
    r.logits = nn::dense_forward(params.head_2, c.hidden_out);
    return r;
}

/// Accumulates dL/dparams into `grads` (shaped like `params`).
inline void backward(const ModelParams &params, const ModelConfig &cfg,
                     const ForwardCache &c, std::span<const double> d_logits,
                     ModelParams &grads) {
    if (c.sampled) {
        throw ArgumentError("backward: shot-sampled forward passes are not differentiable");
    }
    detail::require(d_logits.size() == cfg.n_classes, "backward: d_logits size mismatch");

    Vector d_hidden = nn::dense_backward(params.head_2, c.hidden_out, d_logits, grads.head_2);
    for (std::size_t i = 0; i < d_hidden.size(); ++i) {
        d_hidden[i] *= c.dropout_mask[i];
    }
    const Vector d_pre = nn::relu_backward(c.hidden_pre, d_hidden);
    const Vector d_h = nn::dense_backward(params.head_1, c.h, d_pre, grads.head_1);

    Vector d_z;
    if (c.identity_transform || cfg.variant == Variant::Baseline) {
        d_z = d_h;
    } else if (cfg.variant == Variant::ClassicalMatched) {
        const Vector d_block = nn::tanh_backward(c.h, d_h);
        d_z = nn::dense_backward(*params.classical_block, c.z, d_block,
                                 *grads.classical_block);
    } else {
        const auto &spec = cfg.circuit;
        const auto qg = qsim::adjoint_gradients(spec, {c.angles, *params.q_weights});
        auto &dq = *grads.q_weights;
        const std::size_t n = spec.n_qubits;
        const std::size_t p_count = spec.parameter_count();
        d_z.assign(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            const double up = d_h[i];
            if (up == 0.0) {
                continue;
            }
            for (std::size_t p = 0; p < p_count; ++p) {
                dq[p] += up * qg.d_theta[i * p_count + p];
            }
            for (std::size_t j = 0; j < n; ++j) {
                d_z[j] += up * qg.d_input[i * n + j];
            }
        }
        const double scale = cfg.encoding_scale();
        for (double &v : d_z) {
            v *= scale;
        }
    }

    const Vector d_reduce = nn::tanh_backward(c.z, d_z);
    nn::dense_backward(params.fc_reduce, c.features, d_reduce, grads.fc_reduce,
                       /*want_dx=*/false);
}

inline ModelParams backward(const ModelParams &params, const ModelConfig &cfg,
                            const ForwardCache &c, std::span<const double> d_logits) {
    ModelParams grads = zero_params(cfg);
    backward(params, cfg, c, d_logits, grads);
    return grads;
}

} // namespace hqnn::model
