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
#include "noma/instance.hpp"
#include "noma/params.hpp"
#include "noma/rng.hpp"

#include <filesystem>
#include <optional>
#include <span>
#include <vector>

namespace noma {

struct PolicyConfig {
    int d_in = 3;
    int d_e = 128;
    int heads = 8;
    int d_ff = 512;
    double clip = 10.0;
    /// true: clip * tanh(x / clip) (unit slope at 0); false: clip * tanh(x).
    bool unit_slope_clip = true;

    int d_k() const { return d_e / heads; }
    void validate() const;
};

/// Input width the featurizer produces for a scenario.
int feature_width(const Scenario& s);

/// Running mean / variance of log channel gains (Welford), used to
/// standardise gain features.
struct FeatureScaler {
    double count = 0.0;
    double mean = 0.0;
    double m2 = 0.0;

    void observe(const NetworkInstance& inst);
    double stddev() const;
    double standardize(double log_gain) const;
};

/// Per-user feature rows (N x d_in):
///   base / imperfect CSI: ln w, Pmax, z(ln g)          (g = |a_hat|^2 gbar for imperfect CSI)
///   multi-antenna:        ln w, Pmax, Re h~, Im h~     (h~ = h / ||h|| * exp(z(ln ||h||^2) / 2))
///   multi-BS:             ln w, Pmax, z(ln g_serving), z(ln g to each other BS, ascending id)
Eigen::MatrixXd featurize(const NetworkInstance& inst, const FeatureScaler& scaler);

/// Learnable parameters plus non-learned state (batch-norm running
/// statistics, feature scaler).
struct PolicyModel {
    PolicyConfig cfg;
    ad::ParamStore params;
    ad::BatchStats bn1;
    ad::BatchStats bn2;
    FeatureScaler scaler;

    static PolicyModel init(const PolicyConfig& cfg, std::uint64_t seed);

    /// Folds observed batch statistics into the running ones.
    void update_running(const ad::BatchStats& obs1, const ad::BatchStats& obs2, double momentum = 0.1);

    void save(const std::filesystem::path& path) const;
    static PolicyModel load(const std::filesystem::path& path);
};

enum class DecodeMode { greedy, sample };

struct DecodeTrace {
    SicOrdering ordering;
    std::vector<int> sequence;                // users in selection order
    std::vector<std::vector<double>> probs;   // l_t per step, N entries each
    std::vector<double> log_probs;            // ln l_{t, pi_t}
    DecodeMode mode = DecodeMode::greedy;
    double log_likelihood() const;
};

/// Encoder output on a tape. Rows of `embeddings` are users of all
/// instances stacked in input order.
struct Encoded {
    ad::Var embeddings;
    std::vector<ad::Segment> segments;
    ad::BatchStats observed1;
    ad::BatchStats observed2;
};

/// Bound parameter handles of one forward pass.
struct BoundPolicy {
    const PolicyModel* model = nullptr;
    std::vector<ad::Var> vars;
    ad::Var at(const char* name) const;
};
BoundPolicy bind_policy(ad::Tape& tape, const PolicyModel& model, bool trainable);

/// Runs the encoder over every instance at once. Training mode uses batch
/// statistics across all stacked rows; eval mode uses the running ones.
Encoded encode(ad::Tape& tape, const BoundPolicy& p, std::span<const Eigen::MatrixXd> features, bool training);

/// One decoding step: probability row l_t (1 x N) over users of one instance.
/// `prev` is the embedding of the last selected user (or e0). Masked users
/// get exactly zero probability; all users masked is a DomainError.
ad::Var decode_step(const BoundPolicy& p, ad::Var keys, ad::Var values, ad::Var logit_keys, ad::Var mean_embedding,
                    ad::Var prev, std::span<const int> masked);

/// Picks a user from a probability row. Greedy takes the largest entry
/// (ties to the lowest index); sampling draws with `rng`. Zero entries are
/// never chosen; a row with no positive entry is a NumericalError.
int select_user(std::span<const double> probs, DecodeMode mode, Philox* rng);

/// Decodes one instance from its encoder rows. Multi-BS instances are
/// decoded block by block in ascending BS id with other BSs masked.
/// `log_likelihood`, when given, receives the tape node sum_t ln l_{t,pi_t}.
DecodeTrace decode(const BoundPolicy& p, ad::Var instance_embeddings, const NetworkInstance& inst, DecodeMode mode,
                   Philox* rng, ad::Var* log_likelihood = nullptr, std::span<const int> forced = {});

/// Convenience: eval-mode encode + decode of a single instance on a private tape.
DecodeTrace infer(const PolicyModel& model, const NetworkInstance& inst, DecodeMode mode, Philox* rng = nullptr);

/// ln z(pi | X) as a differentiable scalar for a fixed selection sequence
/// (single instance, eval-mode encoder); used by gradient checks.
ad::Var sequence_log_likelihood(ad::Tape& tape, const BoundPolicy& p, const NetworkInstance& inst,
                                std::span<const int> sequence, bool training = false);

}  // namespace noma
