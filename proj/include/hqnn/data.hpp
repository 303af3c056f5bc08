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
 * @file data.hpp
 * Labeled feature-vector datasets: file I/O, synthetic generation and
 * deterministic stratified splitting.
 *
 * Text feature file (v1):
 *   HQNN-FEATURES v1 <feature_dim> <n_classes> <name0,name1,...>
 *   <label>,<v1>,...,<vD>        one record per line
 *
 * Binary feature file (v1), little-endian:
 *   "HQNNFEAT" u32 version u64 feature_dim u32 n_classes
 *   n_classes x (u32 length, name bytes) u64 n_samples
 *   n_samples x (u32 label, feature_dim x f64)
 */
#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "checkpoint.hpp"
#include "errors.hpp"
#include "rng.hpp"

namespace hqnn::data {

struct Sample {
    std::vector<double> features;
    std::size_t label = 0;
    friend bool operator==(const Sample &, const Sample &) = default;
};

struct Dataset {
    std::vector<Sample> samples;
    std::vector<std::string> class_names;
    std::size_t feature_dim = 0;

    [[nodiscard]] std::size_t size() const noexcept { return samples.size(); }
    [[nodiscard]] std::size_t n_classes() const noexcept { return class_names.size(); }
    [[nodiscard]] std::vector<std::size_t> class_counts() const {
        std::vector<std::size_t> counts(n_classes(), 0);
        for (const auto &s : samples) {
            ++counts[s.label];
        }
        return counts;
    }

    /// Throws ArgumentError naming the first record that breaks an invariant.
    void validate() const {
        detail::require(feature_dim > 0, "Dataset: feature_dim must be positive");
        detail::require(!class_names.empty(), "Dataset: no class names");
        for (std::size_t i = 0; i < samples.size(); ++i) {
            const auto &s = samples[i];
            if (s.label >= class_names.size()) {
                throw ArgumentError("Dataset: record " + std::to_string(i) +
                                    " has unknown label " + std::to_string(s.label));
            }
            if (s.features.size() != feature_dim) {
                throw ArgumentError("Dataset: record " + std::to_string(i) +
                                    " has wrong feature length");
            }
            for (double v : s.features) {
                if (!std::isfinite(v)) {
                    throw ArgumentError("Dataset: record " + std::to_string(i) +
                                        " has a non-finite feature");
                }
            }
        }
    }

    friend bool operator==(const Dataset &, const Dataset &) = default;
};

inline constexpr std::string_view kTextMagic = "HQNN-FEATURES";
inline constexpr char kBinaryMagic[8] = {'H', 'Q', 'N', 'N', 'F', 'E', 'A', 'T'};

// ---------------------------------------------------------------------------
// Writers

inline void write_text(std::ostream &os, const Dataset &ds) {
    os << kTextMagic << " v1 " << ds.feature_dim << ' ' << ds.n_classes() << ' ';
    for (std::size_t k = 0; k < ds.class_names.size(); ++k) {
        os << (k ? "," : "") << ds.class_names[k];
    }
    os << '\n';
    char buf[32];
    for (const auto &s : ds.samples) {
        os << s.label;
        for (double v : s.features) {
            std::snprintf(buf, sizeof buf, ",%.17g", v);
            os << buf;
        }
        os << '\n';
    }
}

inline void write_binary(std::ostream &os, const Dataset &ds) {
    using model::io::put;
    os.write(kBinaryMagic, sizeof kBinaryMagic);
    put<std::uint32_t>(os, 1);
    put<std::uint64_t>(os, ds.feature_dim);
    put<std::uint32_t>(os, static_cast<std::uint32_t>(ds.n_classes()));
    for (const auto &name : ds.class_names) {
        model::io::put_string<std::uint32_t>(os, name);
    }
    put<std::uint64_t>(os, ds.size());
    for (const auto &s : ds.samples) {
        put<std::uint32_t>(os, static_cast<std::uint32_t>(s.label));
        for (double v : s.features) {
            put<double>(os, v);
        }
    }
}

inline void save_features(const std::string &path, const Dataset &ds, bool binary = false) {
    std::ofstream os(path, binary ? std::ios::binary : std::ios::out);
    if (!os) {
        throw std::runtime_error("cannot open '" + path + "' for writing");
    }
    binary ? write_binary(os, ds) : write_text(os, ds);
}

// ---------------------------------------------------------------------------
// Readers

namespace impl {

inline std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        out.push_back(s.substr(start, pos - start));
        if (pos == std::string_view::npos) {
            break;
        }
        start = pos + 1;
    }
    return out;
}

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    return s;
}

template <class T> bool parse_number(std::string_view s, T &out) {
    s = trim(s);
    const auto *end = s.data() + s.size();
    const auto [ptr, ec] = std::from_chars(s.data(), end, out);
    return ec == std::errc{} && ptr == end;
}

} // namespace impl

inline Dataset read_text(std::istream &is) {
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (!impl::trim(line).empty()) {
            break;
        }
    }
    if (impl::trim(line).empty()) {
        throw LoadError("no samples");
    }

    Dataset ds;
    std::istringstream header(line);
    std::string magic, version, names;
    std::size_t n_classes = 0;
    header >> magic >> version >> ds.feature_dim >> n_classes;
    std::getline(header, names);
    if (magic != kTextMagic || version != "v1" || !header.eof() || ds.feature_dim == 0) {
        throw LoadError("malformed header on line " + std::to_string(line_no));
    }
    for (auto name : impl::split(impl::trim(names), ',')) {
        ds.class_names.emplace_back(impl::trim(name));
    }
    if (ds.class_names.size() != n_classes || n_classes == 0) {
        throw LoadError("malformed header on line " + std::to_string(line_no) +
                        ": expected " + std::to_string(n_classes) + " class names");
    }

    std::size_t record = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (impl::trim(line).empty()) {
            continue;
        }
        const auto where = "record " + std::to_string(record) + " (line " +
                           std::to_string(line_no) + ")";
        const auto fields = impl::split(line, ',');
        if (fields.size() != ds.feature_dim + 1) {
            throw LoadError(where + ": expected " + std::to_string(ds.feature_dim) +
                            " features, found " + std::to_string(fields.size() - 1));
        }
        Sample s;
        if (!impl::parse_number(fields[0], s.label)) {
            throw LoadError(where + ": bad label '" + std::string(fields[0]) + "'");
        }
        if (s.label >= n_classes) {
            throw LoadError(where + ": unknown label " + std::to_string(s.label));
        }
        s.features.resize(ds.feature_dim);
        for (std::size_t d = 0; d < ds.feature_dim; ++d) {
            if (!impl::parse_number(fields[d + 1], s.features[d]) ||
                !std::isfinite(s.features[d])) {
                throw LoadError(where + ": bad value in column " + std::to_string(d + 1));
            }
        }
        ds.samples.push_back(std::move(s));
        ++record;
    }
    if (ds.samples.empty()) {
        throw LoadError("no samples");
    }
    return ds;
}

inline Dataset read_binary(std::istream &is) {
    using model::io::get;
    char magic[8];
    if (!is.read(magic, sizeof magic) || std::memcmp(magic, kBinaryMagic, sizeof magic) != 0) {
        throw LoadError("malformed header: bad binary magic");
    }
    if (get<std::uint32_t>(is) != 1) {
        throw LoadError("malformed header: unsupported version");
    }
    Dataset ds;
    ds.feature_dim = get<std::uint64_t>(is);
    const auto n_classes = get<std::uint32_t>(is);
    if (ds.feature_dim == 0 || n_classes == 0) {
        throw LoadError("malformed header: zero dimension");
    }
    for (std::uint32_t k = 0; k < n_classes; ++k) {
        ds.class_names.push_back(model::io::get_string<std::uint32_t>(is, 4096));
    }
    const auto n = get<std::uint64_t>(is);
    for (std::uint64_t r = 0; r < n; ++r) {
        Sample s;
        s.label = get<std::uint32_t>(is);
        if (s.label >= n_classes) {
            throw LoadError("record " + std::to_string(r) + ": unknown label " +
                            std::to_string(s.label));
        }
        s.features.resize(ds.feature_dim);
        for (double &v : s.features) {
            v = get<double>(is);
            if (!std::isfinite(v)) {
                throw LoadError("record " + std::to_string(r) + ": non-finite value");
            }
        }
        ds.samples.push_back(std::move(s));
    }
    if (ds.samples.empty()) {
        throw LoadError("no samples");
    }
    return ds;
}

/// Reads either file variant, chosen by its leading magic bytes.
inline Dataset load_features(const std::string &path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) {
        throw LoadError("cannot open feature file '" + path + "'");
    }
    char head[8] = {};
    is.read(head, sizeof head);
    const bool binary = is.gcount() == 8 && std::memcmp(head, kBinaryMagic, 8) == 0;
    is.clear();
    is.seekg(0);
    return binary ? read_binary(is) : read_text(is);
}

// ---------------------------------------------------------------------------
// Synthetic data

/**
 * Class k ~ N(separation * u_k, I). The directions u_k are seeded Gaussian
 * draws, Gram-Schmidt orthonormalized while n_classes <= feature_dim and
 * merely normalized beyond that.
 */
inline Dataset generate_synthetic(std::size_t n_classes, std::size_t n_per_class,
                                  std::size_t feature_dim, double separation,
                                  std::uint64_t seed) {
    detail::require(n_classes > 0 && n_per_class > 0 && feature_dim > 0,
                          "generate_synthetic: counts must be positive");
    Rng dir_rng(derive_seed(seed, 1));
    std::vector<std::vector<double>> dirs;
    for (std::size_t k = 0; k < n_classes; ++k) {
        std::vector<double> u(feature_dim);
        for (double &v : u) {
            v = dir_rng.normal();
        }
        if (k < feature_dim) {
            for (const auto &prev : dirs) {
                const double dot = std::inner_product(u.begin(), u.end(), prev.begin(), 0.0);
                for (std::size_t d = 0; d < feature_dim; ++d) {
                    u[d] -= dot * prev[d];
                }
            }
        }
        const double norm = std::sqrt(std::inner_product(u.begin(), u.end(), u.begin(), 0.0));
        for (double &v : u) {
            v /= norm;
        }
        dirs.push_back(std::move(u));
    }

    Dataset ds;
    ds.feature_dim = feature_dim;
    for (std::size_t k = 0; k < n_classes; ++k) {
        ds.class_names.push_back("class_" + std::to_string(k));
    }
    Rng rng(derive_seed(seed, 2));
    for (std::size_t k = 0; k < n_classes; ++k) {
        for (std::size_t i = 0; i < n_per_class; ++i) {
            Sample s;
            s.label = k;
            s.features.resize(feature_dim);
            for (std::size_t d = 0; d < feature_dim; ++d) {
                s.features[d] = separation * dirs[k][d] + rng.normal();
            }
            ds.samples.push_back(std::move(s));
        }
    }
    return ds;
}

// ---------------------------------------------------------------------------
// Splitting

struct SplitSpec {
    double train_fraction = 0.85;
    std::uint64_t seed = 0;
    bool stratified = true;
};

struct Split {
    Dataset train;
    Dataset val;
    std::vector<std::size_t> train_indices; ///< into the source dataset, ascending
    std::vector<std::size_t> val_indices;
};

inline Dataset subset(const Dataset &ds, std::span<const std::size_t> indices) {
    Dataset out{{}, ds.class_names, ds.feature_dim};
    out.samples.reserve(indices.size());
    for (std::size_t i : indices) {
        out.samples.push_back(ds.samples.at(i));
    }
    return out;
}

inline void shuffle(std::vector<std::size_t> &v, Rng &rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        std::swap(v[i - 1], v[rng.below(i)]);
    }
}

/// Per-class seeded shuffle, per-class cut at round(train_fraction * n_c)
/// (kept within [1, n_c - 1]). Both halves keep source order.
inline Split stratified_split(const Dataset &ds, const SplitSpec &spec) {
    detail::require(spec.train_fraction > 0.0 && spec.train_fraction < 1.0,
                          "stratified_split: train_fraction must be in (0, 1)");
    Rng rng(spec.seed);
    Split out;
    auto cut = [&](std::vector<std::size_t> idx) {
        const auto n = static_cast<double>(idx.size());
        auto n_train = static_cast<std::size_t>(std::llround(spec.train_fraction * n));
        n_train = std::clamp<std::size_t>(n_train, 1, idx.size() - 1);
        shuffle(idx, rng);
        out.train_indices.insert(out.train_indices.end(), idx.begin(),
                                 idx.begin() + static_cast<std::ptrdiff_t>(n_train));
        out.val_indices.insert(out.val_indices.end(),
                               idx.begin() + static_cast<std::ptrdiff_t>(n_train), idx.end());
    };
    if (spec.stratified) {
        std::vector<std::vector<std::size_t>> by_class(ds.n_classes());
        for (std::size_t i = 0; i < ds.size(); ++i) {
            by_class.at(ds.samples[i].label).push_back(i);
        }
        for (std::size_t k = 0; k < by_class.size(); ++k) {
            if (by_class[k].size() < 2) {
                throw ArgumentError("stratified_split: class '" + ds.class_names[k] +
                                    "' has fewer than 2 samples");
            }
            cut(std::move(by_class[k]));
        }
    } else {
        detail::require(ds.size() >= 2, "stratified_split: need at least 2 samples");
        std::vector<std::size_t> all(ds.size());
        std::iota(all.begin(), all.end(), 0);
        cut(std::move(all));
    }
    std::sort(out.train_indices.begin(), out.train_indices.end());
    std::sort(out.val_indices.begin(), out.val_indices.end());
    out.train = subset(ds, out.train_indices);
    out.val = subset(ds, out.val_indices);
    return out;
}

/// Takes per_class samples of every class (seeded choice, source order kept).
inline Dataset balanced_subset(const Dataset &ds, std::size_t per_class, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<std::vector<std::size_t>> by_class(ds.n_classes());
    for (std::size_t i = 0; i < ds.size(); ++i) {
        by_class[ds.samples[i].label].push_back(i);
    }
    std::vector<std::size_t> keep;
    for (std::size_t k = 0; k < by_class.size(); ++k) {
        if (by_class[k].size() < per_class) {
            throw ArgumentError("balanced_subset: class '" + ds.class_names[k] + "' has only " +
                                std::to_string(by_class[k].size()) + " samples");
        }
        shuffle(by_class[k], rng);
        keep.insert(keep.end(), by_class[k].begin(),
                    by_class[k].begin() + static_cast<std::ptrdiff_t>(per_class));
    }
    std::sort(keep.begin(), keep.end());
    return subset(ds, keep);
}

/// Oversamples minority classes (seeded, with replacement) up to the
/// largest class count.
inline Dataset resample_balanced(const Dataset &ds, std::uint64_t seed) {
    Rng rng(seed);
    const auto counts = ds.class_counts();
    const std::size_t target = *std::max_element(counts.begin(), counts.end());
    std::vector<std::vector<std::size_t>> by_class(ds.n_classes());
    for (std::size_t i = 0; i < ds.size(); ++i) {
        by_class[ds.samples[i].label].push_back(i);
    }
    Dataset out = ds;
    for (const auto &members : by_class) {
        for (std::size_t extra = members.size(); extra < target && !members.empty(); ++extra) {
            out.samples.push_back(ds.samples[members[rng.below(members.size())]]);
        }
    }
    return out;
}

/// 64-bit FNV-1a over index lists, rendered as hex; identifies a split.
inline std::string split_fingerprint(const Split &s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&h](std::uint64_t v) {
        for (int b = 0; b < 8; ++b) {
            h ^= (v >> (8 * b)) & 0xffU;
            h *= 0x100000001b3ULL;
        }
    };
    for (auto i : s.train_indices) {
        mix(i);
    }
    mix(~0ULL);
    for (auto i : s.val_indices) {
        mix(i);
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

} // namespace hqnn::data
