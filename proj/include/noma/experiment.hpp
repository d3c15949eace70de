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

#include "noma/baselines.hpp"
#include "noma/instance.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace noma {

/// Sweep variables: users, radius_m, noise_density_dbm_hz, error_var,
/// bs_split (value = users on BS 0; the rest go to BS 1).
struct ExperimentSpec {
    std::string name = "suite";
    GenerationConfig generation;
    /// Baseline names plus "asopa" (needs a checkpoint).
    std::vector<std::string> algorithms;
    std::string variable = "users";
    std::vector<double> values;
    std::size_t instances = 100;
    std::uint64_t seed = 1;
    /// "auto" (exhaustive up to 8 users, tabu above), "none", or a baseline name.
    std::string reference = "auto";
    int tabu_iterations = 10;
    /// Policy checkpoint for "asopa"; keys are user counts ("5"), "*" is the fallback.
    std::map<std::string, std::filesystem::path> checkpoints;
    std::filesystem::path output_dir = ".";

    void validate() const;
};

ExperimentSpec experiment_from_json_string(const std::string& text);
ExperimentSpec load_experiment(const std::filesystem::path& path);

struct SuiteRow {
    std::string algorithm;
    double value = 0.0;
    std::size_t users = 0;
    std::size_t instances = 0;
    double mean_utility = 0.0;
    double std_utility = 0.0;
    double mean_normalized = 0.0;  // NaN without a reference
    double solver_calls = 0.0;     // mean per instance
    double mean_time = 0.0;        // s per instance, informational
    /// "ok", "skipped" (missing checkpoint) or "refused" (exhaustive over its cap).
    std::string status = "ok";
    std::vector<double> utility;
    std::vector<double> normalized;
};

struct SuiteResult {
    std::vector<SuiteRow> rows;
    bool any_skipped() const;
};

/// Runs every (algorithm, sweep point). Writes <name>.csv (deterministic),
/// <name>_instances.csv (per-instance utilities) and <name>_timing.csv.
SuiteResult run_suite(const ExperimentSpec& spec);

/// Instance set of one sweep point.
std::vector<NetworkInstance> suite_instances(const ExperimentSpec& spec, double value);

struct CallCountRow {
    std::string algorithm;
    int users = 0;
    std::uint64_t analytic = 0;
    std::uint64_t measured = 0;
    bool has_measured = false;
};

/// Analytic vs measured solver calls for exhaustive, tabu, meta, wdesc,
/// cdesc and asopa. Exhaustive is only measured up to its cap.
std::vector<CallCountRow> call_count_report(const std::vector<int>& users, int tabu_iterations = 10,
                                            std::uint64_t seed = 1);
std::string call_count_csv(const std::vector<CallCountRow>& rows);

}  // namespace noma
