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

#include "noma/model.hpp"

#include "noma/equalizer.hpp"
#include "noma/errors.hpp"
#include "noma/marcum.hpp"

#include <cmath>
#include <numbers>
#include <string>
#include <variant>

namespace noma {

namespace {

void check_power(const NetworkInstance& inst, std::span<const double> p) {
    if (p.size() != inst.size()) throw ShapeError("power vector length != user count");
    for (double x : p)
        if (!(x > 0.0) || !std::isfinite(x)) throw DomainError("powers must be positive and finite");
}

double scalar_gain(const UserState& u) {
    if (std::holds_alternative<AntennaChannel>(u.channel))
        throw ConfigError("scalar SINR requested for an antenna-vector channel");
    return effective_gain(u);
}

double imperfect_outage(const NetworkInstance& inst) {
    const auto* ic = std::get_if<ImperfectCsi>(&inst.scenario);
    if (ic == nullptr) throw ConfigError("instance is not an imperfect-CSI scenario");
    return ic->outage;
}

}  // namespace

std::vector<double> sinr(const NetworkInstance& inst, const SicOrdering& ord, std::span<const double> p) {
    if (inst.station_count() != 1) throw ConfigError("sinr() is single-BS; use sinr_multi_bs");
    ord.validate(inst);
    check_power(inst, p);
    const auto& order = ord.per_bs()[0];
    std::vector<double> phi(inst.size());
    // Walk the decode order backwards, accumulating the not-yet-cancelled power.
    double later = 0.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        const auto n = static_cast<std::size_t>(*it);
        const double rx = p[n] * scalar_gain(inst.users[n]);
        phi[n] = rx / (later + inst.noise);
        later += rx;
    }
    return phi;
}

std::vector<double> sinr_multi_bs(const NetworkInstance& inst, const SicOrdering& ord, std::span<const double> p) {
    ord.validate(inst);
    check_power(inst, p);
    const int stations = inst.station_count();
    const bool cross = std::holds_alternative<MultiBs>(inst.scenario);
    std::vector<double> phi(inst.size());
    for (int b = 0; b < stations; ++b) {
        // Other-cell power as seen at BS b.
        double other = 0.0;
        for (std::size_t m = 0; m < inst.size(); ++m)
            if (inst.users[m].bs != b) other += p[m] * inst.users[m].bs_gains.at(static_cast<std::size_t>(b));
        const auto& order = ord.per_bs()[static_cast<std::size_t>(b)];
        double later = 0.0;
        for (auto it = order.rbegin(); it != order.rend(); ++it) {
            const auto n = static_cast<std::size_t>(*it);
            const double g = cross ? inst.users[n].bs_gains.at(static_cast<std::size_t>(b)) : scalar_gain(inst.users[n]);
            const double rx = p[n] * g;
            phi[n] = rx / (later + other + inst.noise);
            later += rx;
        }
    }
    return phi;
}

bool exact_estimates(const NetworkInstance& inst) {
    bool any = false;
    bool all = true;
    for (const auto& u : inst.users) {
        const auto* c = std::get_if<EstimatedChannel>(&u.channel);
        if (c == nullptr) throw ConfigError("imperfect-CSI evaluation needs estimated channels");
        if (c->error_var == 0.0) any = true;
        else all = false;
    }
    if (any && !all) throw DomainError("mixing exact and noisy channel estimates is not supported");
    return all;
}

std::vector<double> outage_quantiles(const NetworkInstance& inst, double outage) {
    if (!(outage > 0.0 && outage < 1.0)) throw DomainError("outage probability must lie in (0, 1)");
    std::vector<double> q(inst.size());
    for (std::size_t n = 0; n < inst.size(); ++n) {
        const auto* c = std::get_if<EstimatedChannel>(&inst.users[n].channel);
        if (c == nullptr) throw ConfigError("outage quantile needs an estimated channel");
        q[n] = fading_quantile(c->est_fading, c->error_var, 0.5 * outage);
    }
    return q;
}

std::vector<double> transformed_sinr_imperfect(const NetworkInstance& inst, const SicOrdering& ord,
                                               std::span<const double> p, double outage,
                                               std::span<const double> quantiles) {
    if (inst.station_count() != 1) throw ConfigError("imperfect-CSI model is single-BS");
    ord.validate(inst);
    check_power(inst, p);
    if (exact_estimates(inst)) return sinr(inst, ord, p);
    std::vector<double> own;
    if (quantiles.empty()) {
        own = outage_quantiles(inst, outage);
        quantiles = own;
    }
    if (quantiles.size() != inst.size()) throw ShapeError("quantile vector length != user count");

    const auto& order = ord.per_bs()[0];
    std::vector<double> phi(inst.size());
    double later = 0.0;  // sum over later users of p_m gbar_m
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        const auto n = static_cast<std::size_t>(*it);
        const auto& c = std::get<EstimatedChannel>(inst.users[n].channel);
        const double num = outage * quantiles[n] * p[n] * c.path_loss;
        const double den = outage * inst.noise + 2.0 * (c.est_fading + c.error_var) * later;
        phi[n] = num / den;
        later += p[n] * c.path_loss;
    }
    return phi;
}

std::vector<double> rate_multi_antenna(const NetworkInstance& inst, const SicOrdering& ord, std::span<const double> p,
                                       const Eigen::MatrixXcd& V) {
    ord.validate(inst);
    check_power(inst, p);
    const Eigen::MatrixXcd H = channel_matrix(inst);
    if (V.rows() != H.cols() || V.cols() != H.rows()) throw ShapeError("equalizer must be N x M_r");
    const Eigen::MatrixXcd VH = V * H;  // (n, m) = v_n h_m
    const auto& order = ord.per_bs()[0];
    std::vector<double> r(inst.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        const auto n = static_cast<Eigen::Index>(order[i]);
        double interference = 0.0;
        for (std::size_t j = i + 1; j < order.size(); ++j) {
            const auto m = static_cast<Eigen::Index>(order[j]);
            interference += std::norm(VH(n, m)) * p[static_cast<std::size_t>(m)];
        }
        const double signal = std::norm(VH(n, n)) * p[static_cast<std::size_t>(n)];
        const double noise = V.row(n).squaredNorm() * inst.noise;
        r[static_cast<std::size_t>(n)] = std::log1p(signal / (interference + noise)) / std::numbers::ln2;
    }
    return r;
}

Eigen::MatrixXcd scenario_equalizer(const NetworkInstance& inst, std::span<const double> p) {
    const auto* ma = std::get_if<MultiAntenna>(&inst.scenario);
    if (ma == nullptr) throw ConfigError("equalizer requested outside the multi-antenna scenario");
    const Eigen::MatrixXcd H = channel_matrix(inst);
    if (ma->equalizer == EqualizerKind::zf) return zf_equalizer(H);
    return mmse_equalizer(H, p, inst.noise);
}

std::vector<double> scenario_sinr(const NetworkInstance& inst, const SicOrdering& ord, std::span<const double> p) {
    return std::visit(
        [&](const auto& s) -> std::vector<double> {
            using S = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<S, PerfectCsi>) {
                return sinr(inst, ord, p);
            } else if constexpr (std::is_same_v<S, ImperfectCsi>) {
                return transformed_sinr_imperfect(inst, ord, p, s.outage);
            } else if constexpr (std::is_same_v<S, MultiAntenna>) {
                auto r = rate_multi_antenna(inst, ord, p, scenario_equalizer(inst, p));
                for (double& x : r) x = std::expm1(x * std::numbers::ln2);
                return r;
            } else {
                return sinr_multi_bs(inst, ord, p);
            }
        },
        inst.scenario);
}

std::vector<double> rates(const NetworkInstance& inst, const SicOrdering& ord, std::span<const double> p) {
    std::vector<double> phi = scenario_sinr(inst, ord, p);
    double factor = 1.0;
    if (std::holds_alternative<ImperfectCsi>(inst.scenario) && !exact_estimates(inst))
        factor = 1.0 - imperfect_outage(inst);
    for (double& x : phi) x = factor * inst.bandwidth * std::log1p(x) / std::numbers::ln2;
    return phi;
}

double utility(const NetworkInstance& inst, const SicOrdering& ord, std::span<const double> p) {
    const std::vector<double> r = rates(inst, ord, p);
    double u = 0.0;
    for (std::size_t n = 0; n < r.size(); ++n) u += inst.users[n].weight * std::log(r[n]);
    return u;
}

NetworkInstance as_perfect_csi(const NetworkInstance& inst) {
    imperfect_outage(inst);
    NetworkInstance out = inst;
    out.scenario = PerfectCsi{};
    for (auto& u : out.users) u.channel = ScalarChannel{effective_gain(u)};
    return out;
}

}  // namespace noma
