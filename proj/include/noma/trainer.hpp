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
#include "noma/params.hpp"
#include "noma/policy.hpp"
#include "noma/power_solver.hpp"
#include "noma/rng.hpp"

#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace noma {

/// FIFO instance store; pushing past capacity evicts the oldest entry.
class ReplayMemory {
public:
    explicit ReplayMemory(std::size_t capacity = 1280);

    void push(NetworkInstance inst);
    std::size_t size() const { return items_.size(); }
    std::size_t capacity() const { return capacity_; }
    const NetworkInstance& operator[](std::size_t i) const { return items_[i]; }

    /// Indices of `count` distinct entries, uniformly at random.
    std::vector<std::size_t> sample(std::size_t count, Philox& rng) const;

private:
    std::size_t capacity_;
    std::deque<NetworkInstance> items_;
};

struct TrainConfig {
    std::size_t batch = 64;
    int updates_per_epoch = 20;
    int epochs = 100;
    double lr = 1e-4;
    /// Training instances draw N uniformly from [n_min, n_max].
    int n_min = 5;
    int n_max = 10;
    std::uint64_t seed = 1;
    std::size_t memory_capacity = 1280;
    std::size_t instances_per_epoch = 1280;
    std::size_t validation_instances = 200;
    /// "auto" (exhaustive when every validation N <= 8, tabu otherwise),
    /// "none", or any baseline name.
    std::string validation_reference = "auto";
    /// Global L2 gradient-norm clip; 0 disables.
    double grad_clip = 0.0;
    double bn_momentum = 0.1;
    GenerationConfig generation;
    PolicyConfig policy;
    /// Checkpoints and metrics go here; empty disables file output.
    std::filesystem::path output_dir;

    void validate() const;
};

/// Every TrainConfig field as JSON; from_json starts from defaults and
/// rejects unknown keys.
std::string to_json_string(const TrainConfig& cfg);
TrainConfig train_config_from_json_string(const std::string& text);
TrainConfig load_train_config(const std::filesystem::path& path);

/// Differentiable core of the policy-gradient estimate for fixed selection
/// sequences and advantages:
///   loss = -(1/B) sum_i adv_i * ln z(seq_i | X_i).
/// Training mode normalises the encoder with batch statistics of all
/// stacked instances.
struct PolicyGradient {
    double loss = 0.0;
    ad::ParamStore grads;
    std::vector<double> log_likelihood;
    ad::BatchStats observed1;
    ad::BatchStats observed2;
};
PolicyGradient policy_gradient(const PolicyModel& model, const std::vector<const NetworkInstance*>& batch,
                               const std::vector<std::vector<int>>& sequences, const std::vector<double>& advantages,
                               bool training);

struct ReinforceResult {
    PolicyGradient gradient;
    std::vector<double> advantages;    // surviving instances only
    std::vector<double> actor_utility;
    std::vector<double> baseline_utility;
    std::size_t dropped = 0;
};

/// One REINFORCE-with-baseline estimate: the actor samples (training-mode
/// encoder), the frozen baseline decodes greedily, both orders are scored
/// by the power solver, and the advantage is their utility difference.
/// Instances whose solve fails are dropped; fewer than half surviving is a
/// NumericalError.
ReinforceResult reinforce_gradient(const PolicyModel& actor, const PolicyModel& baseline,
                                   const std::vector<const NetworkInstance*>& batch, Philox& rng,
                                   const SolverOptions& solver = {}, Exec exec = Exec::openmp);

/// Greedy decode + one solve per instance, compared with reference utilities.
struct EvalMetrics {
    std::vector<double> utility;
    std::vector<double> normalized;  // empty without a reference
    double mean_utility = 0.0;
    double mean_normalized = 0.0;
    double median_normalized = 0.0;
    double q1_normalized = 0.0;
    double q3_normalized = 0.0;
    double min_normalized = 0.0;
    double max_normalized = 0.0;
    std::uint64_t solver_calls = 0;
};

/// `reference` may be empty (normalized fields then stay zero).
EvalMetrics evaluate(const PolicyModel& model, const std::vector<NetworkInstance>& instances,
                     const std::vector<double>& reference, const SolverOptions& solver = {},
                     Exec exec = Exec::openmp);

/// Utilities a baseline reaches on each instance. "auto" resolves to
/// exhaustive when every instance has at most 8 users, tabu otherwise.
std::vector<double> reference_utilities(const std::vector<NetworkInstance>& instances, const std::string& algo,
                                        const BaselineOptions& opt = {});
std::string resolve_reference(const std::vector<NetworkInstance>& instances, const std::string& algo);

/// Fills the normalized-utility statistics from utility/normalized vectors.
void summarize(EvalMetrics& m);

struct EpochMetrics {
    int epoch = 0;
    double mean_val_utility = 0.0;
    double mean_normalized = 0.0;
    double loss = 0.0;  // mean over the epoch's updates
    double wall_time = 0.0;  // s since training start
};

struct TrainResult {
    PolicyModel model;
    std::vector<EpochMetrics> history;
};

/// Full training run. Writes metrics.csv and one checkpoint per epoch to
/// cfg.output_dir (when set). `on_epoch` is called after every epoch.
TrainResult train(const TrainConfig& cfg, const std::function<void(const EpochMetrics&)>& on_epoch = {});

/// Validation set of a config: separate seed stream from training data.
std::vector<NetworkInstance> validation_set(const TrainConfig& cfg);

/// Instance `index` of the training stream (N drawn from [n_min, n_max]).
NetworkInstance training_instance(const TrainConfig& cfg, std::uint64_t index);

}  // namespace noma
