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
#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include "errors.hpp"

namespace hqnn {

/// splitmix64 finalizer; used to derive independent stream seeds.
constexpr std::uint64_t mix_seed(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30U)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27U)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31U);
}

constexpr std::uint64_t derive_seed(std::uint64_t base,
                                    std::uint64_t stream) noexcept {
    return mix_seed(mix_seed(base) ^ (stream * 0xd1b54a32d192ed03ULL));
}

/**
 * Seeded random source. The engine is std::mt19937_64, whose output sequence
 * is fixed by the standard; the distributions are written out here instead of
 * using <random>'s, whose algorithms are implementation-defined. Together
 * that makes every draw reproducible across standard libraries.
 */
class Rng {
  public:
    explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() {
        return static_cast<double>(engine_() >> 11U) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer on [0, n), unbiased (rejection sampling).
    std::uint64_t below(std::uint64_t n) {
        detail::require(n > 0, "Rng::below: n must be positive");
        const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % n);
        std::uint64_t x = engine_();
        while (x >= limit) {
            x = engine_();
        }
        return x % n;
    }

    bool bernoulli(double p) { return uniform() < p; }

    /// Standard normal via Box-Muller; the second variate is cached.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) {
            u1 = uniform();
        }
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double phi = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(phi);
        has_spare_ = true;
        return r * std::cos(phi);
    }

    /// Serialized engine state plus the cached normal variate.
    [[nodiscard]] std::string state() const {
        std::ostringstream os;
        os << engine_ << ' ' << (has_spare_ ? 1 : 0) << ' ';
        os.precision(17);
        os << std::hexfloat << spare_;
        return os.str();
    }

    void restore(const std::string &text) {
        std::istringstream is(text);
        int spare_flag = 0;
        std::string spare_text;
        is >> engine_ >> spare_flag >> spare_text;
        if (!is && !is.eof()) {
            throw ArgumentError("Rng::restore: malformed state");
        }
        has_spare_ = spare_flag != 0;
        spare_ = std::strtod(spare_text.c_str(), nullptr);
    }

    friend bool operator==(const Rng &a, const Rng &b) {
        return a.state() == b.state();
    }

  private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace hqnn
