/*
 * SPDX-FileCopyrightText: Copyright (c) 2026 The noma-sic contributors. All rights reserved.
 * SPDX-License-Identifier: Apache-2.0
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "noma/params.hpp"

#include "noma/errors.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

namespace noma::ad {

void ParamStore::add(std::string name, Matrix value) {
    if (contains(name)) throw ConfigError("duplicate tensor name: " + name);
    entries_.push_back({std::move(name), std::move(value)});
}

bool ParamStore::contains(const std::string& name) const {
    for (const auto& e : entries_)
        if (e.name == name) return true;
    return false;
}

std::size_t ParamStore::index_of(const std::string& name) const {
    for (std::size_t i = 0; i < entries_.size(); ++i)
        if (entries_[i].name == name) return i;
    throw ConfigError("unknown tensor: " + name);
}

Matrix& ParamStore::at(const std::string& name) { return entries_[index_of(name)].value; }
const Matrix& ParamStore::at(const std::string& name) const { return entries_[index_of(name)].value; }

ParamStore ParamStore::zeros_like() const {
    ParamStore out;
    for (const auto& e : entries_) out.add(e.name, Matrix::Zero(e.value.rows(), e.value.cols()));
    return out;
}

std::size_t ParamStore::scalar_count() const {
    std::size_t n = 0;
    for (const auto& e : entries_) n += static_cast<std::size_t>(e.value.size());
    return n;
}

bool ParamStore::all_finite() const {
    for (const auto& e : entries_)
        if (!e.value.allFinite()) return false;
    return true;
}

bool ParamStore::same_layout(const ParamStore& other) const {
    if (size() != other.size()) return false;
    for (std::size_t i = 0; i < size(); ++i) {
        const auto& a = entries_[i];
        const auto& b = other.entries_[i];
        if (a.name != b.name || a.value.rows() != b.value.rows() || a.value.cols() != b.value.cols()) return false;
    }
    return true;
}

bool ParamStore::operator==(const ParamStore& other) const {
    if (!same_layout(other)) return false;
    for (std::size_t i = 0; i < size(); ++i)
        if (entries_[i].value != other.entries_[i].value) return false;
    return true;
}

std::vector<Var> bind(Tape& tape, const ParamStore& params) {
    std::vector<Var> out;
    out.reserve(params.size());
    for (const auto& e : params) out.push_back(tape.variable(e.value));
    return out;
}

ParamStore collect_grads(const ParamStore& layout, const std::vector<Var>& bound) {
    if (bound.size() != layout.size()) throw ShapeError("collect_grads: binding does not match layout");
    ParamStore out;
    for (std::size_t i = 0; i < layout.size(); ++i) out.add(layout[i].name, bound[i].grad());
    return out;
}

AdamState adam_init(const ParamStore& params) { return {params.zeros_like(), params.zeros_like(), 0}; }

void adam_step(ParamStore& params, const ParamStore& grads, AdamState& state, const AdamConfig& cfg) {
    if (!params.same_layout(grads) || !params.same_layout(state.m) || !params.same_layout(state.v))
        throw ShapeError("adam_step: parameter, gradient and state layouts differ");
    for (const auto& g : grads)
        if (!g.value.allFinite()) throw NumericalError("adam_step: non-finite gradient in " + g.name);

    ++state.step;
    const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
    const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        const Matrix& g = grads[i].value;
        Matrix& m = state.m[i].value;
        Matrix& v = state.v[i].value;
        m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
        v = cfg.beta2 * v + (1.0 - cfg.beta2) * g.cwiseAbs2();
        params[i].value.array() -= cfg.lr * (m.array() / c1) / ((v.array() / c2).sqrt() + cfg.eps);
    }
}

namespace {

constexpr std::array<char, 8> kMagic{'N', 'O', 'M', 'A', 'C', 'K', 'P', 'T'};

template <class T>
void put_le(std::ostream& os, T value) {
    using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
    const U bits = std::bit_cast<U>(value);
    std::array<unsigned char, sizeof(U)> bytes{};
    for (std::size_t i = 0; i < sizeof(U); ++i) bytes[i] = static_cast<unsigned char>(bits >> (8 * i));
    os.write(reinterpret_cast<const char*>(bytes.data()), bytes.size());
}

template <class T>
T get_le(std::istream& is) {
    using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
    std::array<unsigned char, sizeof(U)> bytes{};
    if (!is.read(reinterpret_cast<char*>(bytes.data()), bytes.size())) throw ConfigError("checkpoint: truncated file");
    U bits = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) bits |= static_cast<U>(bytes[i]) << (8 * i);
    return std::bit_cast<T>(bits);
}

}  // namespace

void save_checkpoint(const ParamStore& store, const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw ConfigError("cannot write checkpoint " + path.string());
    os.write(kMagic.data(), kMagic.size());
    put_le<std::uint32_t>(os, kCheckpointVersion);
    put_le<std::uint32_t>(os, static_cast<std::uint32_t>(store.size()));
    for (const auto& e : store) {
        put_le<std::uint32_t>(os, static_cast<std::uint32_t>(e.name.size()));
        os.write(e.name.data(), static_cast<std::streamsize>(e.name.size()));
        put_le<std::uint32_t>(os, static_cast<std::uint32_t>(e.value.rows()));
        put_le<std::uint32_t>(os, static_cast<std::uint32_t>(e.value.cols()));
        for (Eigen::Index r = 0; r < e.value.rows(); ++r)
            for (Eigen::Index c = 0; c < e.value.cols(); ++c) put_le<double>(os, e.value(r, c));
    }
    if (!os) throw ConfigError("failed writing checkpoint " + path.string());
}

ParamStore load_checkpoint(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ConfigError("cannot open checkpoint " + path.string());
    std::array<char, 8> magic{};
    if (!is.read(magic.data(), magic.size()) || magic != kMagic) throw ConfigError("not a checkpoint: " + path.string());
    const auto version = get_le<std::uint32_t>(is);
    if (version != kCheckpointVersion) throw ConfigError("unsupported checkpoint version " + std::to_string(version));
    const auto count = get_le<std::uint32_t>(is);
    ParamStore store;
    for (std::uint32_t i = 0; i < count; ++i) {
        const auto len = get_le<std::uint32_t>(is);
        std::string name(len, '\0');
        if (!is.read(name.data(), len)) throw ConfigError("checkpoint: truncated name");
        const auto rows = get_le<std::uint32_t>(is);
        const auto cols = get_le<std::uint32_t>(is);
        Matrix m(rows, cols);
        for (Eigen::Index r = 0; r < m.rows(); ++r)
            for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = get_le<double>(is);
        store.add(std::move(name), std::move(m));
    }
    return store;
}

}  // namespace noma::ad
