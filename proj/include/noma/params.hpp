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

#pragma once

#include "noma/autodiff.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace noma::ad {

/// Ordered collection of named dense tensors. Used for learnable parameters,
/// their gradients, optimizer moments and auxiliary state (running
/// statistics) alike.
class ParamStore {
public:
    struct Entry {
        std::string name;
        Matrix value;
    };

    /// Adds a tensor; duplicate names are a ConfigError.
    void add(std::string name, Matrix value);
    bool contains(const std::string& name) const;
    Matrix& at(const std::string& name);
    const Matrix& at(const std::string& name) const;
    std::size_t index_of(const std::string& name) const;

    std::size_t size() const { return entries_.size(); }
    Entry& operator[](std::size_t i) { return entries_[i]; }
    const Entry& operator[](std::size_t i) const { return entries_[i]; }
    auto begin() { return entries_.begin(); }
    auto end() { return entries_.end(); }
    auto begin() const { return entries_.begin(); }
    auto end() const { return entries_.end(); }

    /// Zero-valued store with the same names and shapes.
    ParamStore zeros_like() const;
    std::size_t scalar_count() const;
    bool all_finite() const;
    /// Same names and shapes, in the same order.
    bool same_layout(const ParamStore& other) const;

    bool operator==(const ParamStore& other) const;

private:
    std::vector<Entry> entries_;
};

/// Binds every tensor of a store as a gradient-carrying leaf on a tape.
std::vector<Var> bind(Tape& tape, const ParamStore& params);
/// Collects the gradients of bound leaves back into a store layout.
ParamStore collect_grads(const ParamStore& layout, const std::vector<Var>& bound);

struct AdamConfig {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct AdamState {
    ParamStore m;
    ParamStore v;
    std::int64_t step = 0;
};

AdamState adam_init(const ParamStore& params);

/// One bias-corrected Adam update. A non-finite gradient rejects the whole
/// update (params and state untouched) with NumericalError.
void adam_step(ParamStore& params, const ParamStore& grads, AdamState& state, const AdamConfig& cfg);

/// Binary checkpoint: "NOMACKPT", u32 version, u32 count, then per tensor
/// u32 name length, name bytes, u32 rows, u32 cols and rows*cols IEEE-754
/// doubles, row-major. All integers and doubles are little-endian.
inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const ParamStore& store, const std::filesystem::path& path);
ParamStore load_checkpoint(const std::filesystem::path& path);

}  // namespace noma::ad
