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

#include "noma/policy.hpp"

#include "noma/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <variant>

namespace noma {

namespace {

double safe_log(double g) { return std::log(std::max(g, 1e-300)); }

// Log-gain values the featurizer standardizes, in row-major feature order.
template <class F>
void for_each_log_gain(const NetworkInstance& inst, F&& f) {
    const bool multi_bs = std::holds_alternative<MultiBs>(inst.scenario);
    for (const auto& u : inst.users) {
        if (multi_bs) {
            f(safe_log(u.bs_gains.at(static_cast<std::size_t>(u.bs))));
            for (std::size_t b = 0; b < u.bs_gains.size(); ++b)
                if (static_cast<int>(b) != u.bs) f(safe_log(u.bs_gains[b]));
        } else {
            f(safe_log(effective_gain(u)));
        }
    }
}

}  // namespace

void PolicyConfig::validate() const {
    if (d_in < 1 || d_e < 1 || heads < 1 || d_ff < 1) throw ConfigError("policy dimensions must be positive");
    if (d_e % heads != 0) throw ConfigError("d_e must be divisible by the head count");
    if (!(clip > 0.0)) throw ConfigError("logit clip must be positive");
}

int feature_width(const Scenario& s) {
    if (const auto* ma = std::get_if<MultiAntenna>(&s)) return 2 + 2 * ma->antennas;
    if (const auto* mb = std::get_if<MultiBs>(&s)) return 2 + mb->stations;
    return 3;
}

void FeatureScaler::observe(const NetworkInstance& inst) {
    for_each_log_gain(inst, [&](double x) {
        count += 1.0;
        const double d = x - mean;
        mean += d / count;
        m2 += d * (x - mean);
    });
}

double FeatureScaler::stddev() const {
    if (count < 2.0) return 1.0;
    return std::max(std::sqrt(m2 / count), 1e-6);
}

double FeatureScaler::standardize(double log_gain) const { return (log_gain - mean) / stddev(); }

Eigen::MatrixXd featurize(const NetworkInstance& inst, const FeatureScaler& scaler) {
    const auto N = static_cast<Eigen::Index>(inst.size());
    const int d_in = feature_width(inst.scenario);
    Eigen::MatrixXd X(N, d_in);
    const bool antenna = std::holds_alternative<MultiAntenna>(inst.scenario);
    const bool multi_bs = std::holds_alternative<MultiBs>(inst.scenario);
    for (Eigen::Index n = 0; n < N; ++n) {
        const auto& u = inst.users[static_cast<std::size_t>(n)];
        X(n, 0) = std::log(u.weight);
        X(n, 1) = u.p_max;
        if (antenna) {
            const auto& h = std::get<AntennaChannel>(u.channel).h;
            const double norm2 = h.squaredNorm();
            const double mag = std::exp(0.5 * scaler.standardize(std::log(norm2))) / std::sqrt(norm2);
            for (Eigen::Index a = 0; a < h.size(); ++a) {
                X(n, 2 + a) = h(a).real() * mag;
                X(n, 2 + h.size() + a) = h(a).imag() * mag;
            }
        } else if (multi_bs) {
            Eigen::Index c = 2;
            X(n, c++) = scaler.standardize(safe_log(u.bs_gains.at(static_cast<std::size_t>(u.bs))));
            for (std::size_t b = 0; b < u.bs_gains.size(); ++b)
                if (static_cast<int>(b) != u.bs) X(n, c++) = scaler.standardize(safe_log(u.bs_gains[b]));
        } else {
            X(n, 2) = scaler.standardize(safe_log(effective_gain(u)));
        }
    }
    return X;
}

// ---- parameters ----------------------------------------------------------

PolicyModel PolicyModel::init(const PolicyConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    PolicyModel m;
    m.cfg = cfg;
    Philox rng(seed, stream_id("policy-init", 0));
    auto uniform = [&](Eigen::Index rows, Eigen::Index cols, int fan_in) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        ad::Matrix w(rows, cols);
        for (Eigen::Index i = 0; i < rows; ++i)
            for (Eigen::Index j = 0; j < cols; ++j) w(i, j) = bound * (2.0 * rng.uniform() - 1.0);
        return w;
    };
    const int de = cfg.d_e;
    auto& p = m.params;
    p.add("ff1.w", uniform(de, cfg.d_in, cfg.d_in));
    p.add("ff1.b", uniform(1, de, cfg.d_in));
    // Per-head projections stacked head-major by rows (head m owns rows m*d_k ..).
    p.add("enc.wq", uniform(de, de, de));
    p.add("enc.wk", uniform(de, de, de));
    p.add("enc.wv", uniform(de, de, de));
    // W^A_m (d_e x d_v) side by side.
    p.add("enc.wa", uniform(de, de, de));
    p.add("bn1.w", ad::Matrix::Ones(1, de));
    p.add("bn1.b", ad::Matrix::Zero(1, de));
    p.add("ff2.w1", uniform(cfg.d_ff, de, de));
    p.add("ff2.b1", uniform(1, cfg.d_ff, de));
    p.add("ff2.w2", uniform(de, cfg.d_ff, cfg.d_ff));
    p.add("ff2.b2", uniform(1, de, cfg.d_ff));
    p.add("bn2.w", ad::Matrix::Ones(1, de));
    p.add("bn2.b", ad::Matrix::Zero(1, de));
    p.add("dec.wk", uniform(de, de, de));
    p.add("dec.wv", uniform(de, de, de));
    p.add("dec.wk2", uniform(de, de, de));
    p.add("dec.wq", uniform(de, 2 * de, 2 * de));
    p.add("dec.wq2", uniform(de, de, de));
    p.add("dec.e0", uniform(1, de, de));
    m.bn1 = {Eigen::RowVectorXd::Zero(de), Eigen::RowVectorXd::Ones(de)};
    m.bn2 = m.bn1;
    return m;
}

void PolicyModel::update_running(const ad::BatchStats& obs1, const ad::BatchStats& obs2, double momentum) {
    bn1.mean = (1.0 - momentum) * bn1.mean + momentum * obs1.mean;
    bn1.var = (1.0 - momentum) * bn1.var + momentum * obs1.var;
    bn2.mean = (1.0 - momentum) * bn2.mean + momentum * obs2.mean;
    bn2.var = (1.0 - momentum) * bn2.var + momentum * obs2.var;
}

void PolicyModel::save(const std::filesystem::path& path) const {
    ad::ParamStore all;
    ad::Matrix c(1, 6);
    c << cfg.d_in, cfg.d_e, cfg.heads, cfg.d_ff, cfg.clip, cfg.unit_slope_clip ? 1.0 : 0.0;
    all.add("meta.config", c);
    ad::Matrix s(1, 3);
    s << scaler.count, scaler.mean, scaler.m2;
    all.add("meta.scaler", s);
    all.add("state.bn1.mean", bn1.mean);
    all.add("state.bn1.var", bn1.var);
    all.add("state.bn2.mean", bn2.mean);
    all.add("state.bn2.var", bn2.var);
    for (const auto& e : params) all.add(e.name, e.value);
    ad::save_checkpoint(all, path);
}

PolicyModel PolicyModel::load(const std::filesystem::path& path) {
    const ad::ParamStore all = ad::load_checkpoint(path);
    if (!all.contains("meta.config") || !all.contains("meta.scaler"))
        throw ConfigError("checkpoint " + path.string() + " is not a policy checkpoint");
    PolicyModel m;
    const ad::Matrix& c = all.at("meta.config");
    if (c.size() != 6) throw ConfigError("policy checkpoint config has the wrong size");
    m.cfg.d_in = static_cast<int>(c(0, 0));
    m.cfg.d_e = static_cast<int>(c(0, 1));
    m.cfg.heads = static_cast<int>(c(0, 2));
    m.cfg.d_ff = static_cast<int>(c(0, 3));
    m.cfg.clip = c(0, 4);
    m.cfg.unit_slope_clip = c(0, 5) != 0.0;
    m.cfg.validate();
    const ad::Matrix& s = all.at("meta.scaler");
    m.scaler = {s(0, 0), s(0, 1), s(0, 2)};
    m.bn1 = {all.at("state.bn1.mean"), all.at("state.bn1.var")};
    m.bn2 = {all.at("state.bn2.mean"), all.at("state.bn2.var")};
    const PolicyModel fresh = init(m.cfg, 0);
    for (const auto& e : fresh.params) {
        if (!all.contains(e.name)) throw ConfigError("checkpoint lacks parameter " + e.name);
        const ad::Matrix& v = all.at(e.name);
        if (v.rows() != e.value.rows() || v.cols() != e.value.cols())
            throw ConfigError("checkpoint parameter " + e.name + " has the wrong shape");
        m.params.add(e.name, v);
    }
    return m;
}

// ---- forward ---------------------------------------------------------------

ad::Var BoundPolicy::at(const char* name) const { return vars.at(model->params.index_of(name)); }

BoundPolicy bind_policy(ad::Tape& tape, const PolicyModel& model, bool trainable) {
    BoundPolicy b;
    b.model = &model;
    b.vars.reserve(model.params.size());
    for (const auto& e : model.params) b.vars.push_back(trainable ? tape.variable(e.value) : tape.constant(e.value));
    return b;
}

Encoded encode(ad::Tape& tape, const BoundPolicy& p, std::span<const Eigen::MatrixXd> features, bool training) {
    using namespace ad;
    const PolicyConfig& cfg = p.model->cfg;
    Eigen::Index rows = 0;
    Encoded out;
    for (const auto& x : features) {
        if (x.cols() != cfg.d_in) throw ShapeError("feature width does not match the policy input width");
        if (x.rows() < 1) throw ShapeError("instance without users");
        out.segments.push_back({rows, x.rows()});
        rows += x.rows();
    }
    Matrix stacked(rows, cfg.d_in);
    for (std::size_t i = 0; i < features.size(); ++i)
        stacked.middleRows(out.segments[i].offset, out.segments[i].length) = features[i];

    Var x = tape.constant(std::move(stacked));
    Var h0 = add_row(matmul_nt(x, p.at("ff1.w")), p.at("ff1.b"));
    Var q = matmul_nt(h0, p.at("enc.wq"));
    Var k = matmul_nt(h0, p.at("enc.wk"));
    Var v = matmul_nt(h0, p.at("enc.wv"));
    Var mha = matmul_nt(segment_attention(q, k, v, cfg.heads, out.segments), p.at("enc.wa"));
    Var e_hat = batch_norm(add(h0, mha), p.at("bn1.w"), p.at("bn1.b"), training ? nullptr : &p.model->bn1,
                           &out.observed1);
    Var ff = add_row(matmul_nt(relu(add_row(matmul_nt(e_hat, p.at("ff2.w1")), p.at("ff2.b1"))), p.at("ff2.w2")),
                     p.at("ff2.b2"));
    out.embeddings = batch_norm(add(e_hat, ff), p.at("bn2.w"), p.at("bn2.b"), training ? nullptr : &p.model->bn2,
                                &out.observed2);
    return out;
}

ad::Var decode_step(const BoundPolicy& p, ad::Var keys, ad::Var values, ad::Var logit_keys, ad::Var mean_embedding,
                    ad::Var prev, std::span<const int> masked) {
    using namespace ad;
    const PolicyConfig& cfg = p.model->cfg;
    if (static_cast<Eigen::Index>(masked.size()) >= keys.rows()) throw DomainError("decode_step: every user is masked");
    Var q = matmul_nt(concat_cols(mean_embedding, prev), p.at("dec.wq"));
    Var u = query_attention(q, keys, values, cfg.heads, masked);
    Var q2 = matmul_nt(u, p.at("dec.wq2"));
    Var logits = scale(matmul_nt(q2, logit_keys), 1.0 / std::sqrt(static_cast<double>(cfg.d_k())));
    Var clipped = cfg.unit_slope_clip ? tanh_clip(logits, cfg.clip) : scale(tanh_clip(logits, 1.0), cfg.clip);
    return softmax(mask_columns(clipped, masked));
}

double DecodeTrace::log_likelihood() const {
    double s = 0.0;
    for (double x : log_probs) s += x;
    return s;
}

int select_user(std::span<const double> probs, DecodeMode mode, Philox* rng) {
    const auto N = static_cast<int>(probs.size());
    int choice = -1;
    if (mode == DecodeMode::greedy) {
        for (int n = 0; n < N; ++n)
            if (probs[n] > 0.0 && (choice < 0 || probs[n] > probs[choice])) choice = n;
    } else {
        if (rng == nullptr) throw ConfigError("sampling needs a generator");
        const double r = rng->uniform();
        double acc = 0.0;
        for (int n = 0; n < N; ++n) {
            if (probs[n] <= 0.0) continue;
            choice = n;  // last unmasked user absorbs round-off
            acc += probs[n];
            if (r < acc) break;
        }
    }
    if (choice < 0) throw NumericalError("decode: no selectable user");
    return choice;
}

DecodeTrace decode(const BoundPolicy& p, ad::Var emb, const NetworkInstance& inst, DecodeMode mode, Philox* rng,
                   ad::Var* log_likelihood, std::span<const int> forced) {
    using namespace ad;
    const auto N = static_cast<int>(inst.size());
    if (emb.rows() != N) throw ShapeError("decode: embedding rows != user count");
    if (mode == DecodeMode::sample && rng == nullptr && forced.empty()) throw ConfigError("sampling needs a generator");
    if (!forced.empty() && static_cast<int>(forced.size()) != N) throw ShapeError("forced sequence length != N");

    Var mean = mean_rows(emb);
    Var keys = matmul_nt(emb, p.at("dec.wk"));
    Var values = matmul_nt(emb, p.at("dec.wv"));
    Var lkeys = matmul_nt(emb, p.at("dec.wk2"));
    Var prev = p.at("dec.e0");

    DecodeTrace tr;
    tr.mode = mode;
    std::vector<char> taken(static_cast<std::size_t>(N), 0);
    const int stations = inst.station_count();
    std::vector<std::vector<int>> per(static_cast<std::size_t>(stations));
    Var total;
    int t = 0;
    for (int b = 0; b < stations; ++b) {
        const std::vector<int> members = inst.users_of(b);
        for (std::size_t step = 0; step < members.size(); ++step, ++t) {
            std::vector<int> masked;
            for (int n = 0; n < N; ++n)
                if (taken[static_cast<std::size_t>(n)] || inst.users[static_cast<std::size_t>(n)].bs != b) masked.push_back(n);
            Var probs = decode_step(p, keys, values, lkeys, mean, prev, masked);
            const Matrix& l = probs.value();

            int choice = -1;
            if (!forced.empty()) {
                choice = forced[static_cast<std::size_t>(t)];
                if (choice < 0 || choice >= N || l(0, choice) <= 0.0)
                    throw DomainError("forced sequence selects a masked user");
            } else {
                choice = select_user(std::span<const double>(l.data(), l.size()), mode, rng);
            }

            taken[static_cast<std::size_t>(choice)] = 1;
            per[static_cast<std::size_t>(b)].push_back(choice);
            tr.sequence.push_back(choice);
            tr.probs.emplace_back(l.data(), l.data() + l.size());
            tr.log_probs.push_back(std::log(l(0, choice)));
            if (log_likelihood) {
                Var lp = log(pick(probs, 0, choice));
                total = total.valid() ? add(total, lp) : lp;
            }
            prev = row(emb, choice);
        }
    }
    tr.ordering = SicOrdering(std::move(per));
    if (log_likelihood) *log_likelihood = total;
    return tr;
}

DecodeTrace infer(const PolicyModel& model, const NetworkInstance& inst, DecodeMode mode, Philox* rng) {
    ad::Tape tape;
    const BoundPolicy bp = bind_policy(tape, model, false);
    const Eigen::MatrixXd x = featurize(inst, model.scaler);
    const Encoded enc = encode(tape, bp, std::span<const Eigen::MatrixXd>(&x, 1), false);
    return decode(bp, enc.embeddings, inst, mode, rng);
}

ad::Var sequence_log_likelihood(ad::Tape& tape, const BoundPolicy& p, const NetworkInstance& inst,
                                std::span<const int> sequence, bool training) {
    const Eigen::MatrixXd x = featurize(inst, p.model->scaler);
    const Encoded enc = encode(tape, p, std::span<const Eigen::MatrixXd>(&x, 1), training);
    ad::Var ll;
    decode(p, enc.embeddings, inst, DecodeMode::greedy, nullptr, &ll, sequence);
    return ll;
}

}  // namespace noma
