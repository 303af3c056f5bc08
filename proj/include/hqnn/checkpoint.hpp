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
 * @file checkpoint.hpp
 * Versioned binary model container. All integers and reals little-endian.
 *
 *   magic        8 bytes  "HQNNCKPT"
 *   version      u32      (1)
 *   config       u64 length + UTF-8 JSON {"model": ModelConfig, "meta": {...}}
 *   tensors      u32 count, then per tensor:
 *                  u32 name length, name, u8 group, u64 count, count x f64
 *   rng states   u32 count, then per state:
 *                  u32 name length, name, u64 length, state text
 */
#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "errors.hpp"
#include "model.hpp"

namespace hqnn::model {

inline constexpr char kCheckpointMagic[8] = {'H', 'Q', 'N', 'N', 'C', 'K', 'P', 'T'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
    ModelConfig config;
    ModelParams params;
    nlohmann::json meta = nlohmann::json::object();
    std::vector<std::pair<std::string, std::string>> rng_states;
};

namespace io {

template <class T> void put(std::ostream &os, T v) {
    static_assert(std::is_trivially_copyable_v<T>);
    if constexpr (std::endian::native == std::endian::big && sizeof(T) > 1) {
        auto bytes = std::bit_cast<std::array<char, sizeof(T)>>(v);
        std::reverse(bytes.begin(), bytes.end());
        os.write(bytes.data(), sizeof(T));
    } else {
        os.write(reinterpret_cast<const char *>(&v), sizeof(T));
    }
}

template <class T> T get(std::istream &is) {
    std::array<char, sizeof(T)> bytes{};
    if (!is.read(bytes.data(), sizeof(T))) {
        throw LoadError("checkpoint: unexpected end of file");
    }
    if constexpr (std::endian::native == std::endian::big && sizeof(T) > 1) {
        std::reverse(bytes.begin(), bytes.end());
    }
    return std::bit_cast<T>(bytes);
}

template <class Len> void put_string(std::ostream &os, const std::string &s) {
    put<Len>(os, static_cast<Len>(s.size()));
    os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

template <class Len> std::string get_string(std::istream &is, std::size_t limit) {
    const auto n = static_cast<std::size_t>(get<Len>(is));
    if (n > limit) {
        throw LoadError("checkpoint: string length " + std::to_string(n) + " too large");
    }
    std::string s(n, '\0');
    if (!is.read(s.data(), static_cast<std::streamsize>(n))) {
        throw LoadError("checkpoint: unexpected end of file");
    }
    return s;
}

} // namespace io

inline void write_checkpoint(std::ostream &os, const Checkpoint &ck) {
    os.write(kCheckpointMagic, sizeof kCheckpointMagic);
    io::put<std::uint32_t>(os, kCheckpointVersion);
    const nlohmann::json header{{"model", ck.config}, {"meta", ck.meta}};
    io::put_string<std::uint64_t>(os, header.dump());

    const auto tensors = named_tensors(ck.params, ck.config);
    io::put<std::uint32_t>(os, static_cast<std::uint32_t>(tensors.size()));
    for (const auto &t : tensors) {
        io::put_string<std::uint32_t>(os, t.name);
        io::put<std::uint8_t>(os, static_cast<std::uint8_t>(t.group));
        io::put<std::uint64_t>(os, t.values.size());
        for (double v : t.values) {
            io::put<double>(os, v);
        }
    }
    io::put<std::uint32_t>(os, static_cast<std::uint32_t>(ck.rng_states.size()));
    for (const auto &[name, state] : ck.rng_states) {
        io::put_string<std::uint32_t>(os, name);
        io::put_string<std::uint64_t>(os, state);
    }
}

inline Checkpoint read_checkpoint(std::istream &is) {
    char magic[8];
    if (!is.read(magic, sizeof magic) ||
        std::memcmp(magic, kCheckpointMagic, sizeof magic) != 0) {
        throw LoadError("checkpoint: bad magic");
    }
    const auto version = io::get<std::uint32_t>(is);
    if (version != kCheckpointVersion) {
        throw LoadError("checkpoint: unsupported version " + std::to_string(version));
    }
    Checkpoint ck;
    const auto header = nlohmann::json::parse(io::get_string<std::uint64_t>(is, 1U << 24U));
    ck.config = header.at("model").get<ModelConfig>();
    ck.meta = header.value("meta", nlohmann::json::object());
    ck.config.validate();
    ck.params = zero_params(ck.config);

    auto tensors = named_tensors(ck.params, ck.config);
    const auto count = io::get<std::uint32_t>(is);
    if (count != tensors.size()) {
        throw LoadError("checkpoint: expected " + std::to_string(tensors.size()) +
                        " tensors, found " + std::to_string(count));
    }
    for (auto &t : tensors) {
        const auto name = io::get_string<std::uint32_t>(is, 256);
        if (name != t.name) {
            throw LoadError("checkpoint: expected tensor '" + t.name + "', found '" + name + "'");
        }
        io::get<std::uint8_t>(is);
        const auto n = io::get<std::uint64_t>(is);
        if (n != t.values.size()) {
            throw LoadError("checkpoint: tensor '" + name + "' has wrong length");
        }
        for (double &v : t.values) {
            v = io::get<double>(is);
        }
    }
    const auto n_states = io::get<std::uint32_t>(is);
    for (std::uint32_t k = 0; k < n_states; ++k) {
        auto name = io::get_string<std::uint32_t>(is, 256);
        auto state = io::get_string<std::uint64_t>(is, 1U << 20U);
        ck.rng_states.emplace_back(std::move(name), std::move(state));
    }
    return ck;
}

inline void save_checkpoint(const std::string &path, const Checkpoint &ck) {
    std::ofstream os(path, std::ios::binary);
    if (!os) {
        throw std::runtime_error("cannot open '" + path + "' for writing");
    }
    write_checkpoint(os, ck);
}

inline Checkpoint load_checkpoint(const std::string &path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) {
        throw LoadError("cannot open checkpoint '" + path + "'");
    }
    return read_checkpoint(is);
}

} // namespace hqnn::model
