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

#include "noma/instance.hpp"
#include "noma/parallel.hpp"
#include "noma/power_solver.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace noma {

struct BaselineResult {
    SicOrdering ordering;
    double utility = 0.0;
    std::uint64_t solver_calls = 0;
    double elapsed = 0.0;  // s, informational
    std::vector<double> p;
};

struct BaselineOptions {
    std::size_t exhaustive_cap = 8;
    int tabu_iterations = 10;
    int tabu_tenure = 0;  // 0 = N
    bool tabu_aspiration = true;
    /// Meta-scheduling insertion order; empty = instance order.
    std::vector<int> insertion_order;
    Exec exec = Exec::openmp;
    SolverOptions solver;
};

/// Scores one decode order with the power-allocation oracle.
struct Scored {
    double utility;
    std::vector<double> p;
};
Scored score_ordering(const NetworkInstance& inst, const SicOrdering& ord, const SolverOptions& opt);

/// Every decode order (per-BS permutations in multi-BS mode). Refuses with
/// ConfigError when N exceeds the cap. Ties keep the lexicographically first order.
BaselineResult exhaustive(const NetworkInstance& inst, const BaselineOptions& opt = {});

/// Swap-neighbourhood tabu search from the channel-descending order.
BaselineResult tabu_search(const NetworkInstance& inst, const BaselineOptions& opt = {});

/// Greedy insertion: each new user tries every position of the partial
/// order, scored on the sub-instance of users inserted so far.
BaselineResult meta_scheduling(const NetworkInstance& inst, const BaselineOptions& opt = {});

BaselineResult weight_descending(const NetworkInstance& inst, const BaselineOptions& opt = {});
BaselineResult channel_descending(const NetworkInstance& inst, const BaselineOptions& opt = {});

/// Orders used by the static heuristics, without solving.
SicOrdering weight_descending_order(const NetworkInstance& inst);
SicOrdering channel_descending_order(const NetworkInstance& inst);

/// Dispatch on "exhaustive" | "tabu" | "meta" | "wdesc" | "cdesc".
BaselineResult run_baseline(const std::string& algo, const NetworkInstance& inst, const BaselineOptions& opt = {});
bool is_baseline_name(const std::string& algo);

/// Sub-instance holding only `users` (in that order); BS membership and
/// cross gains are kept.
NetworkInstance restrict_instance(const NetworkInstance& inst, const std::vector<int>& users);

/// Closed-form call counts for a single-BS instance of N users.
std::uint64_t exhaustive_calls(int n);
std::uint64_t tabu_calls(int n, int iterations);
std::uint64_t meta_calls(int n);

}  // namespace noma
