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
#include <algorithm>
#include <cmath>
#include <memory>
#include <sstream>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "hqnn/metrics.hpp"
#include "hqnn/nn.hpp"
#include "hqnn/rng.hpp"

using namespace hqnn;
using namespace hqnn::metrics;

namespace {
// Straight pairwise count: P(pos > neg) + P(tie) / 2.
double pairwise_auc(const std::vector<double> &s, const std::vector<bool> &pos) {
    double wins = 0.0, pairs = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        for (std::size_t j = 0; j < s.size(); ++j) {
            if (pos[i] && !pos[j]) {
                pairs += 1.0;
                wins += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
            }
        }
    }
    return wins / pairs;
}

std::optional<double> auc_of(const std::vector<double> &s, const std::vector<bool> &pos) {
    std::unique_ptr<bool[]> flags(new bool[pos.size()]);
    std::copy(pos.begin(), pos.end(), flags.get());
    return binary_auc(s, std::span<const bool>(flags.get(), pos.size()));
}

struct RandomProblem {
    std::vector<std::size_t> labels;
    std::vector<double> probs;
};

RandomProblem random_problem(std::size_t n, std::size_t c, std::uint64_t seed) {
    Rng rng(seed);
    RandomProblem p;
    for (std::size_t i = 0; i < n; ++i) {
        p.labels.push_back(rng.below(c));
        nn::Vector logits(c);
        for (double &v : logits) {
            v = 2.0 * rng.normal();
        }
        logits[p.labels.back()] += 1.0;
        const auto row = nn::softmax(logits);
        p.probs.insert(p.probs.end(), row.begin(), row.end());
    }
    return p;
}
} // namespace

TEST_CASE("closed-form metric cases", "[metrics]") {
    SECTION("perfect predictions") {
        const std::vector<std::size_t> labels{0, 1, 2, 1};
        const std::vector<double> probs{0.9, 0.05, 0.05, 0.1, 0.8, 0.1,
                                        0.0, 0.3, 0.7, 0.2, 0.6, 0.2};
        const auto r = compute_report(labels, probs, 3);
        CHECK(r.accuracy == 1.0);
        CHECK(r.macro_precision == 1.0);
        CHECK(r.macro_recall == 1.0);
        CHECK(r.macro_f1 == 1.0);
        CHECK(r.roc_auc_macro == 1.0);
        CHECK(r.roc_auc_weighted == 1.0);
    }
    SECTION("constant scores give chance AUC") {
        const std::vector<std::size_t> labels{0, 1, 0, 1, 1};
        const std::vector<double> probs(10, 0.5);
        const auto r = compute_report(labels, probs, 2);
        CHECK(r.roc_auc_macro == 0.5);
        CHECK(*r.per_class[1].roc_auc == 0.5);
    }
    SECTION("binary AUC with a known value") {
        const std::vector<double> s{0.1, 0.4, 0.35, 0.8};
        const std::vector<bool> pos{false, false, true, true};
        CHECK(pairwise_auc(s, pos) == 0.75);
        CHECK(*auc_of(s, pos) == 0.75);
    }
    SECTION("f1 from counts") {
        CHECK(f1_from_counts(5, 0, 0) == 1.0);
        CHECK(f1_from_counts(0, 4, 2) == 0.0);
        CHECK(f1_from_counts(0, 0, 0) == 0.0);
        CHECK(f1_from_counts(6, 3, 3) == Catch::Approx(12.0 / 18.0).epsilon(1e-15));
    }
    SECTION("argmax ties go to the lowest index") {
        const std::vector<double> row{0.25, 0.375, 0.375};
        CHECK(argmax(row) == 1);
    }
    SECTION("mid ranks") {
        const std::vector<double> s{3.0, 1.0, 3.0, 2.0};
        CHECK(mid_ranks(s) == std::vector<double>{3.5, 1.0, 3.5, 2.0});
    }
    SECTION("undefined AUC is excluded from averages") {
        // Class 2 never occurs.
        const std::vector<std::size_t> labels{0, 1, 0, 1};
        const std::vector<double> probs{0.7, 0.2, 0.1, 0.3, 0.6, 0.1,
                                        0.4, 0.5, 0.1, 0.6, 0.2, 0.2};
        const auto r = compute_report(labels, probs, 3);
        CHECK_FALSE(r.per_class[2].roc_auc.has_value());
        const double a0 = *r.per_class[0].roc_auc;
        const double a1 = *r.per_class[1].roc_auc;
        CHECK(r.roc_auc_macro == Catch::Approx((a0 + a1) / 2).epsilon(1e-15));
        CHECK(r.per_class[2].precision == 0.0);
        CHECK(r.per_class[2].f1 == 0.0);
    }
}

TEST_CASE("metric identities on random problems", "[metrics][property]") {
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
        const std::size_t C = 2 + seed % 5;
        const auto p = random_problem(30 + seed, C, seed);
        const auto r = compute_report(p.labels, p.probs, C);

        std::size_t trace = 0, total = 0;
        for (std::size_t k = 0; k < C; ++k) {
            trace += r.confusion[k][k];
            for (auto v : r.confusion[k]) {
                total += v;
            }
        }
        CHECK(total == p.labels.size());
        CHECK(r.accuracy == double(trace) / double(total));

        // Macro F1 recomputed from the confusion matrix.
        double f1_sum = 0.0;
        for (std::size_t k = 0; k < C; ++k) {
            double tp = double(r.confusion[k][k]), row = 0.0, col = 0.0;
            for (std::size_t j = 0; j < C; ++j) {
                row += double(r.confusion[k][j]);
                col += double(r.confusion[j][k]);
            }
            const double prec = col > 0 ? tp / col : 0.0;
            const double rec = row > 0 ? tp / row : 0.0;
            f1_sum += prec + rec > 0 ? 2 * prec * rec / (prec + rec) : 0.0;
        }
        CHECK(r.macro_f1 == Catch::Approx(f1_sum / double(C)).margin(1e-12));

        for (std::size_t k = 0; k < C; ++k) {
            std::vector<double> s;
            std::vector<bool> pos;
            for (std::size_t i = 0; i < p.labels.size(); ++i) {
                s.push_back(p.probs[i * C + k]);
                pos.push_back(p.labels[i] == k);
            }
            const auto a = r.per_class[k].roc_auc;
            if (!a) {
                continue;
            }
            CHECK(*a == Catch::Approx(pairwise_auc(s, pos)).margin(1e-12));
            std::vector<double> warped;
            for (double v : s) {
                warped.push_back(std::exp(3.0 * v) - 7.0);
            }
            CHECK(*auc_of(warped, pos) == Catch::Approx(*a).margin(1e-12));
            std::vector<bool> flipped;
            for (bool b : pos) {
                flipped.push_back(!b);
            }
            CHECK(*auc_of(s, flipped) == Catch::Approx(1.0 - *a).margin(1e-12));
        }
    }
}

TEST_CASE("weighted AUC equals macro AUC when classes are balanced", "[metrics][property]") {
    auto p = random_problem(60, 3, 77);
    for (std::size_t i = 0; i < p.labels.size(); ++i) {
        p.labels[i] = i % 3;
    }
    const auto r = compute_report(p.labels, p.probs, 3);
    CHECK(r.roc_auc_weighted == Catch::Approx(r.roc_auc_macro).margin(1e-12));
}

TEST_CASE("compute_report rejects bad input", "[metrics]") {
    const std::vector<std::size_t> labels{0, 1};
    CHECK_THROWS_AS(compute_report(labels, std::vector<double>{0.5, 0.5, 0.7, 0.7}, 2),
                    ArgumentError);
    CHECK_THROWS_AS(compute_report(labels, std::vector<double>{0.5, 0.5}, 2), ArgumentError);
    CHECK_THROWS_AS(compute_report(std::vector<std::size_t>{0, 2},
                                   std::vector<double>{0.5, 0.5, 0.5, 0.5}, 2),
                    ArgumentError);
    CHECK_THROWS_AS(compute_report(std::vector<std::size_t>{}, std::vector<double>{}, 2),
                    ArgumentError);
}

TEST_CASE("report serialization", "[metrics]") {
    const std::vector<std::size_t> labels{0, 1, 1};
    const std::vector<double> probs{0.8, 0.2, 0.6, 0.4, 0.1, 0.9};
    const auto r = compute_report(labels, probs, 2);
    const auto j = to_json(r, {"mono", "eos"});
    CHECK(j.at("schema") == "hqnn-metrics/1");
    for (const char *key : {"accuracy", "macro_precision", "macro_recall", "macro_f1",
                            "roc_auc_macro", "roc_auc_weighted", "confusion", "per_class"}) {
        CHECK(j.contains(key));
    }
    CHECK(j.at("confusion") == nlohmann::json{{1, 0}, {1, 1}});
    CHECK(j.at("per_class").at(1).at("class") == "eos");

    std::ostringstream os;
    write_confusion_table(os, r, {"mono", "eos"});
    const auto table = os.str();
    CHECK(table.find("true\\pred") != std::string::npos);
    CHECK(table.find("eos") != std::string::npos);
}
