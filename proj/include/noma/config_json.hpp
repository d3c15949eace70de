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

// JSON (de)serialisation of configuration structs. Kept out of the core
// headers so only config-facing code pulls in the JSON library.

#include "noma/instance.hpp"

#include <json.hpp>

namespace noma {

nlohmann::json scenario_to_json(const Scenario& s);
Scenario scenario_from_json(const nlohmann::json& j);

/// Keys: users, scenario, radius_m, noise_density_dbm_hz, bandwidth_hz,
/// p_max_w, error_var, bs_spacing_m, bs_split. Missing keys keep the values
/// of `base`; unknown keys are a ConfigError.
nlohmann::json generation_to_json(const GenerationConfig& cfg);
GenerationConfig generation_from_json(const nlohmann::json& j, GenerationConfig base = {});

}  // namespace noma
