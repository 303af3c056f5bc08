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
 * @file train.hpp
 * Deterministic training loop: seeded shuffling, mean focal loss per batch,
 * global-norm clipping, Adam with per-group rates, per-epoch cosine
 * annealing, and early stopping on validation macro F1 with best-epoch
 * restoration.
 */
#pragma once

#include <array>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <numeric>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "data.hpp"
#include "errors.hpp"
#include "metrics.hpp"
#include "model.hpp"
#include "nn.hpp"
#include "qsim.hpp"
#include "rng.hpp"

namespace hqnn::train {

/// Training stopped on a non-finite loss; the message names the batch.
class TrainingError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

struct TrainConfig {
    std::size_t batch_size = 16;
    std::size_t max_epochs = 70;
    std::size_t patience = 15;
    double lr_backbone_surrogate = 1e-5;
    double lr_head = 5e-5;
    double lr_quantum = 1e-4;
    nn::LossConfig loss;
    double clip_norm = 1.0;
    std::uint64_t seed = 0;
    double eta_min = 0.0;

    void validate() const {
        detail::require(batch_size > 0, "TrainConfig: batch_size must be positive");
        detail::require(max_epochs > 0, "TrainConfig: max_epochs must be positive");
        detail::require(patience <= max_epochs, "TrainConfig: patience exceeds max_epochs");
        detail::require(lr_backbone_surrogate > 0 && lr_head > 0 && lr_quantum > 0,
                              "TrainConfig: learning rates must be positive");
        detail::require(clip_norm > 0, "TrainConfig: clip_norm must be positive");
        detail::require(eta_min >= 0, "TrainConfig: eta_min must be >= 0");
        loss.validate();
    }

    [[nodiscard]] std::array<double, nn::kGroupCount> base_rates() const {
        return {lr_backbone_surrogate, lr_head, lr_quantum};
    }
};

inline void to_json(nlohmann::json &j, const TrainConfig &c) {
    j = {{"batch_size", c.batch_size},   {"max_epochs", c.max_epochs},
         {"patience", c.patience},       {"lr_backbone", c.lr_backbone_surrogate},
         {"lr_head", c.lr_head},         {"lr_quantum", c.lr_quantum},
         {"gamma", c.loss.gamma},        {"smoothing", c.loss.smoothing},
         {"clip_norm", c.clip_norm},     {"seed", c.seed},
         {"eta_min", c.eta_min}};
}

struct EpochRecord {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double train_accuracy = 0.0;
    double val_loss = 0.0;
    double val_accuracy = 0.0;
    double val_macro_f1 = 0.0;
    std::array<double, nn::kGroupCount> lr{}; ///< backbone, head, quantum

    friend bool operator==(const EpochRecord &, const EpochRecord &) = default;
};

struct TrainHistory {
    std::vector<EpochRecord> epochs;
    std::size_t best_epoch = 0;
    bool stopped_early = false;

    friend bool operator==(const TrainHistory &, const TrainHistory &) = default;
};

inline constexpr const char *kHistorySchema = "hqnn-history/1";

/// Comma-separated, one row per epoch, `#` lines document the columns.
inline void write_history(std::ostream &os, const TrainHistory &h) {
    os << "# " << kHistorySchema << "\n"
       << "# epoch: zero-based epoch index\n"
       << "# train_loss: mean focal loss over training batches (dropout active)\n"
       << "# train_acc: training accuracy from the same forward passes\n"
       << "# val_loss: mean focal loss on the validation set (dropout off)\n"
       << "# val_acc, val_macro_f1: validation accuracy and macro F1\n"
       << "# lr_backbone, lr_head, lr_quantum: group learning rates used this epoch\n"
       << "# best_epoch=" << h.best_epoch << " stopped_early=" << (h.stopped_early ? 1 : 0)
       << "\n"
       << "epoch,train_loss,train_acc,val_loss,val_acc,val_macro_f1,lr_backbone,lr_head,"
          "lr_quantum\n";
    char buf[512];
    for (const auto &e : h.epochs) {
        std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                      e.epoch, e.train_loss, e.train_accuracy, e.val_loss, e.val_accuracy,
                      e.val_macro_f1, e.lr[0], e.lr[1], e.lr[2]);
        os << buf;
    }
}

// ---------------------------------------------------------------------------
// Evaluation

struct EvalResult {
    std::vector<std::size_t> labels;
    std::vector<double> probabilities; ///< row-major [N x C], dataset order
    double mean_loss = 0.0;
    metrics::MetricsReport report;
};

/**
 * Dropout-free pass over `ds` in order. With `noise` (and shots set) the
 * quantum features are shot estimates; sample i uses seed
 * derive_seed(noise->rng_seed, i).
 */
inline EvalResult evaluate_full(const model::ModelParams &params, const model::ModelConfig &cfg,
                                const data::Dataset &ds, const nn::LossConfig &loss = {},
                                const qsim::NoiseConfig *noise = nullptr) {
    detail::require(ds.size() > 0, "evaluate: empty dataset");
    EvalResult out;
    out.labels.reserve(ds.size());
    out.probabilities.reserve(ds.size() * cfg.n_classes);
    qsim::NoiseConfig sample_noise;
    double loss_sum = 0.0;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        model::ForwardOptions opts;
        if (noise != nullptr) {
            sample_noise = *noise;
            sample_noise.rng_seed = derive_seed(noise->rng_seed, i);
            opts.noise = &sample_noise;
        }
        const auto fw = model::forward(params, cfg, ds.samples[i].features, opts);
        const auto p = nn::softmax(fw.logits);
        loss_sum += nn::focal_loss(fw.logits, ds.samples[i].label, loss).loss;
        out.labels.push_back(ds.samples[i].label);
        out.probabilities.insert(out.probabilities.end(), p.begin(), p.end());
    }
    out.mean_loss = loss_sum / static_cast<double>(ds.size());
    out.report = metrics::compute_report(out.labels, out.probabilities, cfg.n_classes);
    return out;
}

inline metrics::MetricsReport evaluate(const model::ModelParams &params,
                                       const model::ModelConfig &cfg, const data::Dataset &ds,
                                       const qsim::NoiseConfig *noise = nullptr) {
    return evaluate_full(params, cfg, ds, {}, noise).report;
}

// ---------------------------------------------------------------------------
// Training

/// Owns parameters, optimizer and RNG for one run; `train` drives it.
class Trainer {
  public:
    Trainer(model::ModelConfig model_cfg, model::ModelParams params, TrainConfig cfg)
        : model_cfg_(std::move(model_cfg)), params_(std::move(params)), cfg_(cfg),
          adam_(cfg.base_rates()), rng_(cfg.seed) {
        model_cfg_.validate();
        cfg_.validate();
        grads_ = model::zero_params(model_cfg_);
    }

    /// Sets this epoch's cosine-annealed rates; returns them.
    std::array<double, nn::kGroupCount> begin_epoch(std::size_t epoch) {
        const auto base = cfg_.base_rates();
        std::array<double, nn::kGroupCount> lr{};
        for (std::size_t g = 0; g < nn::kGroupCount; ++g) {
            lr[g] = nn::cosine_lr(base[g], epoch, cfg_.max_epochs, cfg_.eta_min);
            adam_.set_lr(static_cast<nn::ParamGroup>(g), lr[g]);
        }
        return lr;
    }

    struct BatchStats {
        double loss = 0.0;
        std::size_t correct = 0;
        double grad_norm = 0.0;
    };

    /// Forward/backward over the batch (in order), mean loss, clip, Adam.
    BatchStats train_batch(std::span<const data::Sample *const> batch, std::size_t batch_id) {
        zero(grads_);
        BatchStats stats;
        const double inv_b = 1.0 / static_cast<double>(batch.size());
        for (const data::Sample *s : batch) {
            model::ForwardOptions opts;
            opts.training = true;
            opts.rng = &rng_;
            const auto fw = model::forward(params_, model_cfg_, s->features, opts);
            nn::LossResult lr;
            try {
                lr = nn::focal_loss(fw.logits, s->label, cfg_.loss);
            } catch (const NumericError &e) {
                throw TrainingError("non-finite loss in batch " + std::to_string(batch_id) +
                                    ": " + e.what());
            }
            stats.loss += lr.loss * inv_b;
            stats.correct += metrics::argmax(fw.logits) == s->label ? 1 : 0;
            for (double &g : lr.grad) {
                g *= inv_b;
            }
            model::backward(params_, model_cfg_, fw.cache, lr.grad, grads_);
        }
        if (!std::isfinite(stats.loss)) {
            throw TrainingError("non-finite loss in batch " + std::to_string(batch_id));
        }

        auto grad_tensors = model::named_tensors(grads_, model_cfg_);
        std::vector<std::span<double>> grad_spans;
        for (auto &t : grad_tensors) {
            grad_spans.push_back(t.values);
        }
        stats.grad_norm = nn::clip_global_norm(grad_spans, cfg_.clip_norm);
        if (!std::isfinite(stats.grad_norm)) {
            throw TrainingError("non-finite gradient in batch " + std::to_string(batch_id));
        }

        auto value_tensors = model::named_tensors(params_, model_cfg_);
        std::vector<nn::ParamSlot> slots;
        for (std::size_t k = 0; k < value_tensors.size(); ++k) {
            slots.push_back({value_tensors[k].values, grad_tensors[k].values,
                             value_tensors[k].group});
        }
        adam_.step(slots);
        return stats;
    }

    [[nodiscard]] const model::ModelParams &params() const noexcept { return params_; }
    [[nodiscard]] const model::ModelParams &last_gradients() const noexcept { return grads_; }
    [[nodiscard]] const model::ModelConfig &model_config() const noexcept { return model_cfg_; }
    [[nodiscard]] const TrainConfig &config() const noexcept { return cfg_; }
    [[nodiscard]] const nn::Adam &optimizer() const noexcept { return adam_; }
    Rng &rng() noexcept { return rng_; }

  private:
    static void zero(model::ModelParams &p) {
        auto clear = [](nn::DenseLayer &l) {
            std::fill(l.weights.begin(), l.weights.end(), 0.0);
            std::fill(l.bias.begin(), l.bias.end(), 0.0);
        };
        clear(p.fc_reduce);
        if (p.classical_block) {
            clear(*p.classical_block);
        }
        if (p.q_weights) {
            std::fill(p.q_weights->begin(), p.q_weights->end(), 0.0);
        }
        clear(p.head_1);
        clear(p.head_2);
    }

    model::ModelConfig model_cfg_;
    model::ModelParams params_;
    model::ModelParams grads_;
    TrainConfig cfg_;
    nn::Adam adam_;
    Rng rng_;
};

struct TrainResult {
    model::ModelParams best;
    model::ModelParams last;
    TrainHistory history;
    std::string rng_state; ///< trainer RNG after the final epoch
};

using EpochCallback = std::function<void(const EpochRecord &)>;

/**
 * Runs up to max_epochs epochs. An epoch improves when its validation macro
 * F1 strictly exceeds the best so far; training stops once `patience`
 * epochs pass without improvement. Returns the best epoch's parameters.
 */
inline TrainResult train(const model::ModelConfig &model_cfg, model::ModelParams init,
                         const data::Dataset &train_set, const data::Dataset &val_set,
                         const TrainConfig &cfg, const EpochCallback &on_epoch = {}) {
    detail::require(train_set.size() > 0 && val_set.size() > 0,
                          "train: datasets must be nonempty");
    detail::require(train_set.feature_dim == model_cfg.feature_dim &&
                              val_set.feature_dim == model_cfg.feature_dim,
                          "train: dataset feature_dim does not match the model");
    detail::require(train_set.n_classes() == model_cfg.n_classes &&
                              val_set.n_classes() == model_cfg.n_classes,
                          "train: dataset class count does not match the model");

    Trainer trainer(model_cfg, std::move(init), cfg);
    TrainResult result;
    double best_f1 = -std::numeric_limits<double>::infinity();

    std::vector<std::size_t> order(train_set.size());
    std::vector<const data::Sample *> batch;
    std::size_t batch_id = 0;
    for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        EpochRecord rec;
        rec.epoch = epoch;
        rec.lr = trainer.begin_epoch(epoch);

        std::iota(order.begin(), order.end(), 0);
        data::shuffle(order, trainer.rng());
        double loss_sum = 0.0;
        std::size_t n_batches = 0;
        std::size_t correct = 0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
            batch.clear();
            for (std::size_t k = start; k < stop; ++k) {
                batch.push_back(&train_set.samples[order[k]]);
            }
            const auto stats = trainer.train_batch(batch, batch_id++);
            loss_sum += stats.loss;
            correct += stats.correct;
            ++n_batches;
        }
        rec.train_loss = loss_sum / static_cast<double>(n_batches);
        rec.train_accuracy = static_cast<double>(correct) / static_cast<double>(order.size());

        const auto val = evaluate_full(trainer.params(), model_cfg, val_set, cfg.loss);
        rec.val_loss = val.mean_loss;
        rec.val_accuracy = val.report.accuracy;
        rec.val_macro_f1 = val.report.macro_f1;
        result.history.epochs.push_back(rec);
        if (on_epoch) {
            on_epoch(rec);
        }

        if (rec.val_macro_f1 > best_f1) {
            best_f1 = rec.val_macro_f1;
            result.history.best_epoch = epoch;
            result.best = trainer.params();
        } else if (epoch - result.history.best_epoch >= cfg.patience) {
            result.history.stopped_early = true;
            break;
        }
    }
    result.last = trainer.params();
    result.rng_state = trainer.rng().state();
    return result;
}

} // namespace hqnn::train
