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

#include "noma/trainer.hpp"

#include "noma/config_json.hpp"
#include "noma/errors.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

namespace noma {

using nlohmann::json;

// ---- replay memory -----------------------------------------------------------

ReplayMemory::ReplayMemory(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw ConfigError("replay memory capacity must be positive");
}

void ReplayMemory::push(NetworkInstance inst) {
    if (items_.size() == capacity_) items_.pop_front();
    items_.push_back(std::move(inst));
}

std::vector<std::size_t> ReplayMemory::sample(std::size_t count, Philox& rng) const {
    if (count > items_.size()) throw ConfigError("batch larger than the replay memory");
    std::vector<std::size_t> idx(items_.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    // Partial Fisher-Yates: the first `count` slots end up a uniform draw.
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.below(idx.size() - i));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(count);
    return idx;
}

// ---- config ------------------------------------------------------------------

void TrainConfig::validate() const {
    if (batch == 0 || updates_per_epoch < 1 || epochs < 1) throw ConfigError("batch, updates and epochs must be positive");
    if (!(lr >= 0.0) || !std::isfinite(lr)) throw ConfigError("learning rate must be finite and non-negative");
    if (n_min < 1 || n_max < n_min) throw ConfigError("user range must satisfy 1 <= n_min <= n_max");
    if (memory_capacity == 0 || instances_per_epoch == 0) throw ConfigError("memory and ingest sizes must be positive");
    if (batch > memory_capacity) throw ConfigError("batch exceeds the replay memory capacity");
    if (!(grad_clip >= 0.0)) throw ConfigError("grad_clip must be non-negative");
    if (!(bn_momentum > 0.0 && bn_momentum <= 1.0)) throw ConfigError("bn_momentum must lie in (0, 1]");
    if (validation_reference != "auto" && validation_reference != "none" && !is_baseline_name(validation_reference))
        throw ConfigError("unknown validation reference '" + validation_reference + "'");
    if (const auto* mb = std::get_if<MultiBs>(&generation.scenario); mb && n_min < mb->stations)
        throw ConfigError("multi-BS training needs at least one user per BS");
    PolicyConfig p = policy;
    p.d_in = feature_width(generation.scenario);
    p.validate();
}

std::string to_json_string(const TrainConfig& c) {
    json j;
    j["batch"] = c.batch;
    j["updates_per_epoch"] = c.updates_per_epoch;
    j["epochs"] = c.epochs;
    j["lr"] = c.lr;
    j["n_min"] = c.n_min;
    j["n_max"] = c.n_max;
    j["seed"] = c.seed;
    j["memory_capacity"] = c.memory_capacity;
    j["instances_per_epoch"] = c.instances_per_epoch;
    j["validation_instances"] = c.validation_instances;
    j["validation_reference"] = c.validation_reference;
    j["grad_clip"] = c.grad_clip;
    j["bn_momentum"] = c.bn_momentum;
    j["generation"] = generation_to_json(c.generation);
    j["policy"] = {{"d_e", c.policy.d_e},
                   {"heads", c.policy.heads},
                   {"d_ff", c.policy.d_ff},
                   {"clip", c.policy.clip},
                   {"unit_slope_clip", c.policy.unit_slope_clip}};
    j["output_dir"] = c.output_dir.string();
    return j.dump(2);
}

TrainConfig train_config_from_json_string(const std::string& text) {
    TrainConfig c;
    try {
        const json j = json::parse(text);
        if (!j.is_object()) throw ConfigError("training config must be a JSON object");
        for (const auto& [key, v] : j.items()) {
            if (key == "batch") c.batch = v.get<std::size_t>();
            else if (key == "updates_per_epoch") c.updates_per_epoch = v.get<int>();
            else if (key == "epochs") c.epochs = v.get<int>();
            else if (key == "lr") c.lr = v.get<double>();
            else if (key == "n_min") c.n_min = v.get<int>();
            else if (key == "n_max") c.n_max = v.get<int>();
            else if (key == "seed") c.seed = v.get<std::uint64_t>();
            else if (key == "memory_capacity") c.memory_capacity = v.get<std::size_t>();
            else if (key == "instances_per_epoch") c.instances_per_epoch = v.get<std::size_t>();
            else if (key == "validation_instances") c.validation_instances = v.get<std::size_t>();
            else if (key == "validation_reference") c.validation_reference = v.get<std::string>();
            else if (key == "grad_clip") c.grad_clip = v.get<double>();
            else if (key == "bn_momentum") c.bn_momentum = v.get<double>();
            else if (key == "generation") c.generation = generation_from_json(v);
            else if (key == "policy") {
                for (const auto& [pk, pv] : v.items()) {
                    if (pk == "d_e") c.policy.d_e = pv.get<int>();
                    else if (pk == "heads") c.policy.heads = pv.get<int>();
                    else if (pk == "d_ff") c.policy.d_ff = pv.get<int>();
                    else if (pk == "clip") c.policy.clip = pv.get<double>();
                    else if (pk == "unit_slope_clip") c.policy.unit_slope_clip = pv.get<bool>();
                    else throw ConfigError("unknown policy key '" + pk + "'");
                }
            } else if (key == "output_dir") c.output_dir = v.get<std::string>();
            else throw ConfigError("unknown training config key '" + key + "'");
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad training config: ") + e.what());
    }
    c.policy.d_in = feature_width(c.generation.scenario);
    c.validate();
    return c;
}

TrainConfig load_train_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open training config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return train_config_from_json_string(ss.str());
}

// ---- gradient ----------------------------------------------------------------

namespace {

std::vector<Eigen::MatrixXd> features_of(const PolicyModel& model, const std::vector<const NetworkInstance*>& batch) {
    std::vector<Eigen::MatrixXd> x;
    x.reserve(batch.size());
    for (const auto* inst : batch) x.push_back(featurize(*inst, model.scaler));
    return x;
}

ad::Var instance_rows(const Encoded& enc, std::size_t i) {
    return ad::slice_rows(enc.embeddings, enc.segments[i].offset, enc.segments[i].length);
}

// -(1/B) sum adv_i * ll_i over the listed instances; backward fills grads.
PolicyGradient finish_gradient(ad::Tape& tape, const BoundPolicy& bp, const Encoded& enc,
                               const std::vector<ad::Var>& ll, const std::vector<std::size_t>& keep,
                               const std::vector<double>& adv) {
    PolicyGradient out;
    const double inv = 1.0 / static_cast<double>(keep.size());
    ad::Var loss;
    for (std::size_t k = 0; k < keep.size(); ++k) {
        ad::Var term = ad::scale(ll[keep[k]], -adv[k] * inv);
        loss = loss.valid() ? ad::add(loss, term) : term;
        out.log_likelihood.push_back(ll[keep[k]].value()(0, 0));
    }
    tape.backward(loss);
    out.loss = loss.value()(0, 0);
    out.grads = ad::collect_grads(bp.model->params, bp.vars);
    out.observed1 = enc.observed1;
    out.observed2 = enc.observed2;
    return out;
}

}  // namespace

PolicyGradient policy_gradient(const PolicyModel& model, const std::vector<const NetworkInstance*>& batch,
                               const std::vector<std::vector<int>>& sequences, const std::vector<double>& advantages,
                               bool training) {
    if (batch.empty()) throw ConfigError("empty batch");
    if (sequences.size() != batch.size() || advantages.size() != batch.size())
        throw ShapeError("batch, sequences and advantages differ in length");
    ad::Tape tape;
    const BoundPolicy bp = bind_policy(tape, model, true);
    const std::vector<Eigen::MatrixXd> x = features_of(model, batch);
    const Encoded enc = encode(tape, bp, x, training);
    std::vector<ad::Var> ll(batch.size());
    std::vector<std::size_t> keep(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
        decode(bp, instance_rows(enc, i), *batch[i], DecodeMode::greedy, nullptr, &ll[i], sequences[i]);
        keep[i] = i;
    }
    return finish_gradient(tape, bp, enc, ll, keep, advantages);
}

ReinforceResult reinforce_gradient(const PolicyModel& actor, const PolicyModel& baseline,
                                   const std::vector<const NetworkInstance*>& batch, Philox& rng,
                                   const SolverOptions& solver, Exec exec) {
    if (batch.empty()) throw ConfigError("empty batch");
    const std::size_t B = batch.size();

    // Baseline: eval-mode encoder, greedy decode, no gradients.
    std::vector<SicOrdering> greedy(B);
    {
        ad::Tape tape;
        const BoundPolicy bp = bind_policy(tape, baseline, false);
        const std::vector<Eigen::MatrixXd> x = features_of(baseline, batch);
        const Encoded enc = encode(tape, bp, x, false);
        for (std::size_t i = 0; i < B; ++i)
            greedy[i] = decode(bp, instance_rows(enc, i), *batch[i], DecodeMode::greedy, nullptr).ordering;
    }

    ad::Tape tape;
    const BoundPolicy bp = bind_policy(tape, actor, true);
    const std::vector<Eigen::MatrixXd> x = features_of(actor, batch);
    const Encoded enc = encode(tape, bp, x, true);
    std::vector<ad::Var> ll(B);
    std::vector<SicOrdering> sampled(B);
    for (std::size_t i = 0; i < B; ++i)
        sampled[i] = decode(bp, instance_rows(enc, i), *batch[i], DecodeMode::sample, &rng, &ll[i]).ordering;

    std::vector<double> ua(B), ub(B);
    parallel_for(2 * B, exec, [&](std::size_t k) {
        const std::size_t i = k % B;
        if (k < B) ua[i] = score_ordering(*batch[i], sampled[i], solver).utility;
        else ub[i] = score_ordering(*batch[i], greedy[i], solver).utility;
    });

    ReinforceResult r;
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < B; ++i) {
        if (!std::isfinite(ua[i]) || !std::isfinite(ub[i])) {
            std::fprintf(stderr, "reinforce: dropping batch entry %zu (solver failure)\n", i);
            continue;
        }
        keep.push_back(i);
        r.advantages.push_back(ua[i] - ub[i]);
        r.actor_utility.push_back(ua[i]);
        r.baseline_utility.push_back(ub[i]);
    }
    r.dropped = B - keep.size();
    if (2 * keep.size() < B) throw NumericalError("reinforce: fewer than half of the batch could be solved");
    r.gradient = finish_gradient(tape, bp, enc, ll, keep, r.advantages);
    return r;
}

// ---- evaluation --------------------------------------------------------------

namespace {

double quantile_sorted(const std::vector<double>& s, double q) {
    if (s.empty()) return 0.0;
    const double pos = q * static_cast<double>(s.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, s.size() - 1);
    return s[lo] + (pos - static_cast<double>(lo)) * (s[hi] - s[lo]);
}

}  // namespace

void summarize(EvalMetrics& m) {
    m.mean_utility = m.utility.empty()
                         ? 0.0
                         : std::accumulate(m.utility.begin(), m.utility.end(), 0.0) / static_cast<double>(m.utility.size());
    if (m.normalized.empty()) return;
    std::vector<double> s = m.normalized;
    std::sort(s.begin(), s.end());
    m.mean_normalized = std::accumulate(s.begin(), s.end(), 0.0) / static_cast<double>(s.size());
    m.median_normalized = quantile_sorted(s, 0.5);
    m.q1_normalized = quantile_sorted(s, 0.25);
    m.q3_normalized = quantile_sorted(s, 0.75);
    m.min_normalized = s.front();
    m.max_normalized = s.back();
}

EvalMetrics evaluate(const PolicyModel& model, const std::vector<NetworkInstance>& instances,
                     const std::vector<double>& reference, const SolverOptions& solver, Exec exec) {
    if (!reference.empty() && reference.size() != instances.size())
        throw ShapeError("reference utilities do not match the instance set");
    EvalMetrics m;
    m.utility.resize(instances.size());
    parallel_for(instances.size(), exec, [&](std::size_t i) {
        const DecodeTrace tr = infer(model, instances[i], DecodeMode::greedy);
        m.utility[i] = score_ordering(instances[i], tr.ordering, solver).utility;
    });
    m.solver_calls = instances.size();
    if (!reference.empty()) {
        m.normalized.resize(instances.size());
        for (std::size_t i = 0; i < instances.size(); ++i) m.normalized[i] = m.utility[i] / reference[i];
    }
    summarize(m);
    return m;
}

std::string resolve_reference(const std::vector<NetworkInstance>& instances, const std::string& algo) {
    if (algo != "auto") return algo;
    for (const auto& inst : instances)
        if (inst.size() > 8) return "tabu";
    return "exhaustive";
}

std::vector<double> reference_utilities(const std::vector<NetworkInstance>& instances, const std::string& algo,
                                        const BaselineOptions& opt) {
    const std::string name = resolve_reference(instances, algo);
    std::vector<double> u(instances.size());
    // Baselines parallelise internally over candidate orders.
    for (std::size_t i = 0; i < instances.size(); ++i) u[i] = run_baseline(name, instances[i], opt).utility;
    return u;
}

// ---- training loop -----------------------------------------------------------

namespace {

constexpr std::uint64_t kValidationKey = 0x5EED5EED0000A11DULL;

GenerationConfig sized(const TrainConfig& cfg, Philox& rng) {
    GenerationConfig g = cfg.generation;
    g.users = static_cast<std::size_t>(cfg.n_min) +
              static_cast<std::size_t>(rng.below(static_cast<std::uint64_t>(cfg.n_max - cfg.n_min + 1)));
    if (!g.bs_split.empty()) g.bs_split.clear();  // N varies; split evenly
    return g;
}

double global_norm(const ad::ParamStore& g) {
    double s = 0.0;
    for (const auto& e : g) s += e.value.squaredNorm();
    return std::sqrt(s);
}

void dump_nonfinite(const TrainConfig& cfg, int epoch, int update, const ReinforceResult& r) {
    json j;
    j["epoch"] = epoch;
    j["update"] = update;
    j["loss"] = std::isfinite(r.gradient.loss) ? json(r.gradient.loss) : json(std::to_string(r.gradient.loss));
    j["advantages"] = r.advantages;
    j["actor_utility"] = r.actor_utility;
    j["baseline_utility"] = r.baseline_utility;
    j["grad_norm"] = std::to_string(global_norm(r.gradient.grads));
    const std::string text = j.dump(2);
    std::fprintf(stderr, "non-finite training state:\n%s\n", text.c_str());
    if (!cfg.output_dir.empty()) std::ofstream(cfg.output_dir / "nonfinite_dump.json") << text << "\n";
}

}  // namespace

NetworkInstance training_instance(const TrainConfig& cfg, std::uint64_t index) {
    Philox rng(cfg.seed, stream_id("train-size", index));
    return generate_instance(cfg.seed, index, sized(cfg, rng));
}

std::vector<NetworkInstance> validation_set(const TrainConfig& cfg) {
    std::vector<NetworkInstance> out;
    out.reserve(cfg.validation_instances);
    const std::uint64_t key = cfg.seed ^ kValidationKey;
    for (std::size_t i = 0; i < cfg.validation_instances; ++i) {
        Philox rng(key, stream_id("validation-size", i));
        out.push_back(generate_instance(key, i, sized(cfg, rng)));
    }
    return out;
}

TrainResult train(const TrainConfig& cfg_in, const std::function<void(const EpochMetrics&)>& on_epoch) {
    TrainConfig cfg = cfg_in;
    cfg.policy.d_in = feature_width(cfg.generation.scenario);
    cfg.validate();
    const auto t0 = std::chrono::steady_clock::now();

    TrainResult result;
    PolicyModel& model = result.model;
    model = PolicyModel::init(cfg.policy, cfg.seed);

    const std::vector<NetworkInstance> val = validation_set(cfg);
    std::vector<double> ref;
    if (cfg.validation_reference != "none" && !val.empty()) ref = reference_utilities(val, cfg.validation_reference);

    std::ofstream csv;
    if (!cfg.output_dir.empty()) {
        std::filesystem::create_directories(cfg.output_dir);
        std::ofstream(cfg.output_dir / "train_config.json") << to_json_string(cfg) << "\n";
        csv.open(cfg.output_dir / "metrics.csv");
        if (!csv) throw ConfigError("cannot write metrics to " + cfg.output_dir.string());
        csv << "# scenario=" << scenario_name(cfg.generation.scenario) << " n=" << cfg.n_min << ".." << cfg.n_max
            << " seed=" << cfg.seed << "\n"
            << "# units: utility = sum_n w_n ln(R_n / (bit/s)); mean_normalized = utility / reference utility ("
            << (ref.empty() ? std::string("none") : resolve_reference(val, cfg.validation_reference))
            << "); wall_time in s\n"
            << "epoch,mean_val_utility,mean_normalized,loss,wall_time\n";
    }


    ReplayMemory memory(cfg.memory_capacity);
    std::uint64_t next_index = 0;
    Philox batch_rng(cfg.seed, stream_id("train-batches", 0));
    ad::AdamState adam = ad::adam_init(model.params);
    const ad::AdamConfig adam_cfg{cfg.lr};
    PolicyModel baseline;

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        for (std::size_t k = 0; k < cfg.instances_per_epoch; ++k) memory.push(training_instance(cfg, next_index++));
        if (epoch == 1) {
            // Gain statistics are fixed from the first fill so features stay stationary.
            for (std::size_t i = 0; i < memory.size(); ++i) model.scaler.observe(memory[i]);
            baseline = model;
        }
        if (memory.size() < cfg.batch) throw ConfigError("replay memory holds fewer instances than one batch");

        double loss_sum = 0.0;
        for (int u = 0; u < cfg.updates_per_epoch; ++u) {
            const std::vector<std::size_t> idx = memory.sample(cfg.batch, batch_rng);
            std::vector<const NetworkInstance*> batch;
            for (std::size_t i : idx) batch.push_back(&memory[i]);
            ReinforceResult r = reinforce_gradient(model, baseline, batch, batch_rng);
            if (!std::isfinite(r.gradient.loss) || !r.gradient.grads.all_finite()) {
                dump_nonfinite(cfg, epoch, u, r);
                throw NumericalError("non-finite loss or gradient at epoch " + std::to_string(epoch) + ", update " +
                                     std::to_string(u));
            }
            if (cfg.grad_clip > 0.0) {
                const double norm = global_norm(r.gradient.grads);
                if (norm > cfg.grad_clip)
                    for (auto& e : r.gradient.grads) e.value *= cfg.grad_clip / norm;
            }
            ad::adam_step(model.params, r.gradient.grads, adam, adam_cfg);
            model.update_running(r.gradient.observed1, r.gradient.observed2, cfg.bn_momentum);
            loss_sum += r.gradient.loss;
        }
        baseline = model;

        EpochMetrics em;
        em.epoch = epoch;
        em.loss = loss_sum / cfg.updates_per_epoch;
        if (!val.empty()) {
            const EvalMetrics ev = evaluate(model, val, ref);
            em.mean_val_utility = ev.mean_utility;
            em.mean_normalized = ev.mean_normalized;
        }
        em.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        result.history.push_back(em);

        if (!cfg.output_dir.empty()) {
            char line[256];
            std::snprintf(line, sizeof line, "%d,%.17g,%.17g,%.17g,%.3f\n", em.epoch, em.mean_val_utility,
                          em.mean_normalized, em.loss, em.wall_time);
            csv << line << std::flush;
            char name[64];
            std::snprintf(name, sizeof name, "checkpoint_epoch_%04d.bin", epoch);
            model.save(cfg.output_dir / name);
            model.save(cfg.output_dir / "policy.bin");
        }
        if (on_epoch) on_epoch(em);
    }
    return result;
}

}  // namespace noma
