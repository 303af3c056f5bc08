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
 * @file metrics.hpp
 * Confusion matrix, one-vs-rest precision/recall/F1, macro averages and
 * multiclass ROC-AUC (Mann-Whitney statistic with mid-rank ties).
 *
 * Conventions: undefined precision, recall or F1 (zero denominator) is 0;
 * argmax ties go to the lowest class index; a class with no positives or
 * no negatives has no AUC and is left out of both AUC averages.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <memory>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "errors.hpp"

namespace hqnn::metrics {

struct ClassMetrics {
    std::size_t support = 0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double accuracy = 0.0; ///< one-vs-rest (tp + tn) / N
    std::optional<double> roc_auc;
};

struct MetricsReport {
    std::size_t n_samples = 0;
    std::vector<std::vector<std::size_t>> confusion; ///< [true][predicted]
    std::vector<ClassMetrics> per_class;
    double accuracy = 0.0;
    double macro_precision = 0.0;
    double macro_recall = 0.0;
    double macro_f1 = 0.0;
    double roc_auc_macro = 0.0;
    double roc_auc_weighted = 0.0;
};

inline double safe_ratio(double num, double den) { return den == 0.0 ? 0.0 : num / den; }

/// 2tp / (2tp + fp + fn), 0 when the denominator is 0.
inline double f1_from_counts(std::size_t tp, std::size_t fp, std::size_t fn) {
    return safe_ratio(2.0 * static_cast<double>(tp),
                      static_cast<double>(2 * tp + fp + fn));
}

inline std::size_t argmax(std::span<const double> row) {
    return static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
}

/// Mid-ranks (1-based) of `scores`; tied values share their average rank.
inline std::vector<double> mid_ranks(std::span<const double> scores) {
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
    std::vector<double> ranks(scores.size());
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) {
            ++j;
        }
        const double r = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
        for (std::size_t k = i; k <= j; ++k) {
            ranks[order[k]] = r;
        }
        i = j + 1;
    }
    return ranks;
}

/// P(score_pos > score_neg) + P(tie)/2. Empty optional when either side is empty.
inline std::optional<double> binary_auc(std::span<const double> scores,
                                        std::span<const bool> positive) {
    detail::require(scores.size() == positive.size(), "binary_auc: length mismatch");
    const auto ranks = mid_ranks(scores);
    double n_pos = 0.0;
    double rank_sum = 0.0;
    for (std::size_t i = 0; i < ranks.size(); ++i) {
        if (positive[i]) {
            n_pos += 1.0;
            rank_sum += ranks[i];
        }
    }
    const double n_neg = static_cast<double>(scores.size()) - n_pos;
    if (n_pos == 0.0 || n_neg == 0.0) {
        return std::nullopt;
    }
    return (rank_sum - n_pos * (n_pos + 1.0) / 2.0) / (n_pos * n_neg);
}

/**
 * Builds the report from true labels and a row-major [N x C] matrix of
 * class probabilities.
 */
inline MetricsReport compute_report(std::span<const std::size_t> labels,
                                    std::span<const double> probs, std::size_t n_classes) {
    const std::size_t n = labels.size();
    detail::require(n >= 1, "compute_report: empty input");
    detail::require(n_classes >= 2, "compute_report: need at least two classes");
    detail::require(probs.size() == n * n_classes,
                    "compute_report: probability matrix must be N x C");
    for (std::size_t i = 0; i < n; ++i) {
        detail::require(labels[i] < n_classes, "compute_report: label out of range");
        const auto row = probs.subspan(i * n_classes, n_classes);
        const double sum = std::accumulate(row.begin(), row.end(), 0.0);
        if (!(std::abs(sum - 1.0) <= 1e-6)) {
            throw ArgumentError("compute_report: row " + std::to_string(i) +
                                " does not sum to 1");
        }
    }

    MetricsReport r;
    r.n_samples = n;
    r.confusion.assign(n_classes, std::vector<std::size_t>(n_classes, 0));
    for (std::size_t i = 0; i < n; ++i) {
        ++r.confusion[labels[i]][argmax(probs.subspan(i * n_classes, n_classes))];
    }

    std::size_t correct = 0;
    for (std::size_t k = 0; k < n_classes; ++k) {
        correct += r.confusion[k][k];
    }
    r.accuracy = static_cast<double>(correct) / static_cast<double>(n);

    std::vector<double> scores(n);
    std::unique_ptr<bool[]> positive(new bool[n]);
    r.per_class.resize(n_classes);
    double auc_sum = 0.0;
    double auc_weighted = 0.0;
    double auc_count = 0.0;
    double auc_support = 0.0;
    for (std::size_t k = 0; k < n_classes; ++k) {
        std::size_t tp = r.confusion[k][k];
        std::size_t fn = 0;
        std::size_t fp = 0;
        for (std::size_t j = 0; j < n_classes; ++j) {
            if (j != k) {
                fn += r.confusion[k][j];
                fp += r.confusion[j][k];
            }
        }
        auto &m = r.per_class[k];
        m.support = tp + fn;
        m.precision = safe_ratio(static_cast<double>(tp), static_cast<double>(tp + fp));
        m.recall = safe_ratio(static_cast<double>(tp), static_cast<double>(tp + fn));
        m.f1 = f1_from_counts(tp, fp, fn);
        m.accuracy = static_cast<double>(n - fp - fn) / static_cast<double>(n);

        for (std::size_t i = 0; i < n; ++i) {
            scores[i] = probs[i * n_classes + k];
            positive[i] = labels[i] == k;
        }
        m.roc_auc = binary_auc(scores, std::span<const bool>(positive.get(), n));
        if (m.roc_auc) {
            auc_sum += *m.roc_auc;
            auc_count += 1.0;
            auc_weighted += *m.roc_auc * static_cast<double>(m.support);
            auc_support += static_cast<double>(m.support);
        }
    }

    const double c = static_cast<double>(n_classes);
    for (const auto &m : r.per_class) {
        r.macro_precision += m.precision;
        r.macro_recall += m.recall;
        r.macro_f1 += m.f1;
    }
    r.macro_precision /= c;
    r.macro_recall /= c;
    r.macro_f1 /= c;
    r.roc_auc_macro = safe_ratio(auc_sum, auc_count);
    r.roc_auc_weighted = safe_ratio(auc_weighted, auc_support);
    return r;
}

// ---------------------------------------------------------------------------
// Serialization

inline constexpr const char *kReportSchema = "hqnn-metrics/1";

inline nlohmann::json to_json(const MetricsReport &r, const std::vector<std::string> &class_names) {
    nlohmann::json per_class = nlohmann::json::array();
    for (std::size_t k = 0; k < r.per_class.size(); ++k) {
        const auto &m = r.per_class[k];
        per_class.push_back({{"class", k < class_names.size() ? class_names[k] : std::to_string(k)},
                             {"support", m.support},
                             {"precision", m.precision},
                             {"recall", m.recall},
                             {"f1", m.f1},
                             {"accuracy", m.accuracy},
                             {"roc_auc", m.roc_auc ? nlohmann::json(*m.roc_auc) : nlohmann::json()}});
    }
    return {{"schema", kReportSchema},
            {"n_samples", r.n_samples},
            {"class_names", class_names},
            {"confusion", r.confusion},
            {"per_class", per_class},
            {"accuracy", r.accuracy},
            {"macro_precision", r.macro_precision},
            {"macro_recall", r.macro_recall},
            {"macro_f1", r.macro_f1},
            {"roc_auc_macro", r.roc_auc_macro},
            {"roc_auc_weighted", r.roc_auc_weighted}};
}

/// Rows are true classes, columns predicted classes.
inline void write_confusion_table(std::ostream &os, const MetricsReport &r,
                                  const std::vector<std::string> &class_names) {
    std::size_t width = 10;
    for (const auto &name : class_names) {
        width = std::max(width, name.size() + 2);
    }
    auto cell = [&](const std::string &s) {
        os << s << std::string(width > s.size() ? width - s.size() : 1, ' ');
    };
    cell("true\\pred");
    for (const auto &name : class_names) {
        cell(name);
    }
    os << '\n';
    for (std::size_t k = 0; k < r.confusion.size(); ++k) {
        cell(class_names.at(k));
        for (auto v : r.confusion[k]) {
            cell(std::to_string(v));
        }
        os << '\n';
    }
}

} // namespace hqnn::metrics
