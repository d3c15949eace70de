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

#include <filesystem>
#include <string>
#include <vector>

namespace noma {

/// Comma-separated table; lines starting with '#' are comments.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> comments;

    /// Column index; a missing column is a ConfigError naming `what`.
    std::size_t column(const std::string& name, const std::string& what) const;
};

CsvTable read_csv(const std::filesystem::path& path);
CsvTable parse_csv(const std::string& text);

/// Renders a static SVG chart:
///   lines       suite CSV (algorithm, value, <y>) -> one line per algorithm
///   box         per-instance CSV (algorithm, normalized) -> quartile boxes
///   convergence training metrics (epoch, mean_val_utility)
/// `y` overrides the plotted column for "lines" (default mean_utility).
/// Empty input and schema mismatches are ConfigErrors.
std::string render_plot(const CsvTable& table, const std::string& kind, const std::string& y = {});
void plot_csv(const std::filesystem::path& csv, const std::string& kind, const std::filesystem::path& out,
              const std::string& y = {});

}  // namespace noma
