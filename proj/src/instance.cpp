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

#include "noma/instance.hpp"
#include "noma/config_json.hpp"

#include "noma/errors.hpp"
#include "noma/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

namespace noma {

using nlohmann::json;

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};

constexpr const char* kSchema = "noma-instance/1";

bool finite_positive(double x) { return std::isfinite(x) && x > 0.0; }

}  // namespace

std::string scenario_name(const Scenario& s) {
    return std::visit(overloaded{[](const PerfectCsi&) { return std::string("perfect"); },
                                 [](const ImperfectCsi&) { return std::string("imperfect"); },
                                 [](const MultiAntenna&) { return std::string("multi_antenna"); },
                                 [](const MultiBs&) { return std::string("multi_bs"); }},
                      s);
}

int NetworkInstance::station_count() const {
    if (const auto* mb = std::get_if<MultiBs>(&scenario)) return mb->stations;
    return 1;
}

std::vector<int> NetworkInstance::users_of(int b) const {
    std::vector<int> out;
    for (std::size_t n = 0; n < users.size(); ++n)
        if (users[n].bs == b) out.push_back(static_cast<int>(n));
    return out;
}

void NetworkInstance::validate() const {
    if (users.empty()) throw DomainError("instance has no users");
    if (!finite_positive(noise)) throw DomainError("noise power must be positive and finite");
    if (!finite_positive(bandwidth)) throw DomainError("bandwidth must be positive and finite");
    const int stations = station_count();
    if (stations < 1) throw ConfigError("station count must be at least 1");
    int antennas = 0;
    if (const auto* ma = std::get_if<MultiAntenna>(&scenario)) {
        antennas = ma->antennas;
        if (antennas < 1) throw ConfigError("antenna count must be at least 1");
    }
    if (const auto* ic = std::get_if<ImperfectCsi>(&scenario)) {
        if (!(ic->outage > 0.0 && ic->outage < 1.0)) throw DomainError("outage probability must lie in (0, 1)");
    }
    for (std::size_t n = 0; n < users.size(); ++n) {
        const auto& u = users[n];
        const std::string who = "user " + std::to_string(n) + ": ";
        if (!finite_positive(u.weight)) throw DomainError(who + "weight must be positive");
        if (!finite_positive(u.p_max)) throw DomainError(who + "p_max must be positive");
        if (u.bs < 0 || u.bs >= stations) throw DomainError(who + "serving BS out of range");
        std::visit(overloaded{
                       [&](const ScalarChannel& c) {
                           if (!finite_positive(c.gain)) throw DomainError(who + "channel gain must be positive");
                           if (antennas > 0 || std::holds_alternative<ImperfectCsi>(scenario))
                               throw ConfigError(who + "scalar channel does not match scenario");
                       },
                       [&](const EstimatedChannel& c) {
                           if (!std::holds_alternative<ImperfectCsi>(scenario))
                               throw ConfigError(who + "estimated channel requires the imperfect-CSI scenario");
                           if (!finite_positive(c.path_loss) || !finite_positive(c.est_fading))
                               throw DomainError(who + "path loss and fading estimate must be positive");
                           if (!(c.error_var >= 0.0 && c.error_var < 1.0))
                               throw DomainError(who + "estimation error variance must lie in [0, 1)");
                       },
                       [&](const AntennaChannel& c) {
                           if (antennas == 0) throw ConfigError(who + "antenna channel requires the multi-antenna scenario");
                           if (c.h.size() != antennas) throw ShapeError(who + "channel vector length != antenna count");
                           if (!c.h.allFinite()) throw DomainError(who + "channel vector not finite");
                           if (c.h.squaredNorm() <= 0.0) throw DomainError(who + "zero channel vector");
                       }},
                   u.channel);
        if (std::holds_alternative<MultiBs>(scenario)) {
            if (static_cast<int>(u.bs_gains.size()) != stations)
                throw ShapeError(who + "bs_gains must list one gain per BS");
            for (double g : u.bs_gains)
                if (!(g >= 0.0) || !std::isfinite(g)) throw DomainError(who + "cross-BS gains must be finite and >= 0");
            if (!finite_positive(u.bs_gains[static_cast<std::size_t>(u.bs)]))
                throw DomainError(who + "serving gain must be positive");
            const auto* sc = std::get_if<ScalarChannel>(&u.channel);
            if (sc == nullptr || sc->gain != u.bs_gains[static_cast<std::size_t>(u.bs)])
                throw DomainError(who + "serving gain must equal bs_gains[bs]");
        }
    }
}

double effective_gain(const UserState& u) {
    return std::visit(overloaded{[](const ScalarChannel& c) { return c.gain; },
                                 [](const EstimatedChannel& c) { return c.est_fading * c.path_loss; },
                                 [](const AntennaChannel& c) { return c.h.squaredNorm(); }},
                      u.channel);
}

double path_loss_gain(double distance_m) {
    if (!finite_positive(distance_m)) throw DomainError("distance must be positive");
    const double ratio = 3e8 / (4.0 * std::numbers::pi * kCarrierHz * distance_m);
    return kAntennaGain * std::pow(ratio, kPathLossExponent);
}

double noise_power_w(double density_dbm_per_hz, double bandwidth_hz) {
    return std::pow(10.0, density_dbm_per_hz / 10.0) * 1e-3 * bandwidth_hz;
}

namespace {

std::vector<int> split_users(const GenerationConfig& cfg, int stations) {
    if (!cfg.bs_split.empty()) {
        if (static_cast<int>(cfg.bs_split.size()) != stations)
            throw ConfigError("bs_split must list one count per BS");
        long total = 0;
        for (int c : cfg.bs_split) {
            if (c < 1) throw ConfigError("every BS needs at least one user");
            total += c;
        }
        if (total != static_cast<long>(cfg.users)) throw ConfigError("bs_split does not sum to the user count");
        return cfg.bs_split;
    }
    if (static_cast<int>(cfg.users) < stations) throw ConfigError("fewer users than base stations");
    std::vector<int> split(static_cast<std::size_t>(stations), static_cast<int>(cfg.users) / stations);
    for (int b = 0; b < static_cast<int>(cfg.users) % stations; ++b) ++split[static_cast<std::size_t>(b)];
    return split;
}

// Area-uniform point in a disc, clamped away from the antenna.
std::pair<double, double> draw_position(Philox& rng, double radius) {
    const double r = std::max(radius * std::sqrt(rng.uniform_open()), kMinDistance);
    const double theta = 2.0 * std::numbers::pi * rng.uniform();
    return {r * std::cos(theta), r * std::sin(theta)};
}

}  // namespace

NetworkInstance generate_instance(std::uint64_t seed, std::uint64_t index, const GenerationConfig& cfg) {
    if (cfg.users == 0) throw ConfigError("user count must be positive");
    if (!finite_positive(cfg.radius) || cfg.radius < kMinDistance) throw ConfigError("radius must be >= 1 m");
    if (!finite_positive(cfg.p_max)) throw ConfigError("p_max must be positive");
    if (!finite_positive(cfg.bandwidth)) throw ConfigError("bandwidth must be positive");

    Philox rng(seed, stream_id("instance", index));
    NetworkInstance inst;
    inst.scenario = cfg.scenario;
    inst.bandwidth = cfg.bandwidth;
    inst.noise = noise_power_w(cfg.noise_density_dbm, cfg.bandwidth);
    inst.users.resize(cfg.users);

    const int stations = inst.station_count();
    std::vector<int> split = split_users(cfg, stations);
    std::vector<std::pair<double, double>> sites(static_cast<std::size_t>(stations));
    for (int b = 0; b < stations; ++b)
        sites[static_cast<std::size_t>(b)] = {(b - 0.5 * (stations - 1)) * cfg.bs_spacing, 0.0};

    std::size_t n = 0;
    for (int b = 0; b < stations; ++b) {
        for (int k = 0; k < split[static_cast<std::size_t>(b)]; ++k, ++n) {
            UserState& u = inst.users[n];
            u.bs = b;
            u.p_max = cfg.p_max;
            u.weight = kWeightSet[rng.below(kWeightSet.size())];
            auto [dx, dy] = draw_position(rng, cfg.radius);
            const double x = sites[static_cast<std::size_t>(b)].first + dx;
            const double y = sites[static_cast<std::size_t>(b)].second + dy;
            const double pl = path_loss_gain(std::max(std::hypot(dx, dy), kMinDistance));

            std::visit(overloaded{
                           [&](const PerfectCsi&) { u.channel = ScalarChannel{pl * rng.exponential()}; },
                           [&](const ImperfectCsi&) {
                               if (!(cfg.error_var >= 0.0 && cfg.error_var < 1.0))
                                   throw ConfigError("error variance must lie in [0, 1)");
                               // a_hat ~ CN(0, 1 - s2), so |a_hat|^2 ~ (1 - s2) Exp(1).
                               u.channel = EstimatedChannel{pl, (1.0 - cfg.error_var) * rng.exponential(), cfg.error_var};
                           },
                           [&](const MultiAntenna& ma) {
                               if (ma.antennas < 1) throw ConfigError("antenna count must be at least 1");
                               Eigen::VectorXcd h(ma.antennas);
                               const double amp = std::sqrt(pl / 2.0);
                               for (int a = 0; a < ma.antennas; ++a) {
                                   const double re = rng.normal();
                                   const double im = rng.normal();
                                   h(a) = amp * std::complex<double>(re, im);
                               }
                               u.channel = AntennaChannel{std::move(h)};
                           },
                           [&](const MultiBs&) {
                               u.bs_gains.resize(static_cast<std::size_t>(stations));
                               for (int c = 0; c < stations; ++c) {
                                   const auto& s = sites[static_cast<std::size_t>(c)];
                                   const double d = std::max(std::hypot(x - s.first, y - s.second), kMinDistance);
                                   u.bs_gains[static_cast<std::size_t>(c)] = path_loss_gain(d) * rng.exponential();
                               }
                               u.channel = ScalarChannel{u.bs_gains[static_cast<std::size_t>(b)]};
                           }},
                       cfg.scenario);
        }
    }
    inst.validate();
    return inst;
}

std::vector<NetworkInstance> generate_instances(std::uint64_t seed, std::size_t count, const GenerationConfig& cfg,
                                                std::uint64_t first_index) {
    std::vector<NetworkInstance> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) out.push_back(generate_instance(seed, first_index + i, cfg));
    return out;
}

// ---- JSON ----------------------------------------------------------------

json scenario_to_json(const Scenario& s) {
    json j;
    j["kind"] = scenario_name(s);
    std::visit(overloaded{[](const PerfectCsi&) {}, [&](const ImperfectCsi& c) { j["outage"] = c.outage; },
                          [&](const MultiAntenna& c) {
                              j["antennas"] = c.antennas;
                              j["equalizer"] = c.equalizer == EqualizerKind::zf ? "zf" : "mmse";
                          },
                          [&](const MultiBs& c) { j["stations"] = c.stations; }},
               s);
    return j;
}

Scenario scenario_from_json(const json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "perfect") return PerfectCsi{};
    if (kind == "imperfect") return ImperfectCsi{j.value("outage", 0.1)};
    if (kind == "multi_antenna") {
        MultiAntenna ma;
        ma.antennas = j.at("antennas").get<int>();
        const std::string eq = j.value("equalizer", std::string("mmse"));
        if (eq == "zf") ma.equalizer = EqualizerKind::zf;
        else if (eq == "mmse") ma.equalizer = EqualizerKind::mmse;
        else throw ConfigError("unknown equalizer '" + eq + "'");
        return ma;
    }
    if (kind == "multi_bs") return MultiBs{j.at("stations").get<int>()};
    throw ConfigError("unknown scenario kind '" + kind + "'");
}

namespace {

json instance_json(const NetworkInstance& inst) {
    json j;
    j["schema"] = kSchema;
    j["units"] = {{"noise", "W"}, {"bandwidth", "Hz"}, {"p_max", "W"}, {"gain", "linear power gain"}};
    j["noise_w"] = inst.noise;
    j["bandwidth_hz"] = inst.bandwidth;
    j["scenario"] = scenario_to_json(inst.scenario);
    json users = json::array();
    for (const auto& u : inst.users) {
        json ju;
        ju["weight"] = u.weight;
        ju["p_max_w"] = u.p_max;
        ju["bs"] = u.bs;
        std::visit(overloaded{[&](const ScalarChannel& c) { ju["channel"] = {{"kind", "scalar"}, {"gain", c.gain}}; },
                              [&](const EstimatedChannel& c) {
                                  ju["channel"] = {{"kind", "estimated"},
                                                   {"path_loss", c.path_loss},
                                                   {"est_fading", c.est_fading},
                                                   {"error_var", c.error_var}};
                              },
                              [&](const AntennaChannel& c) {
                                  std::vector<double> re(static_cast<std::size_t>(c.h.size()));
                                  std::vector<double> im(re.size());
                                  for (Eigen::Index a = 0; a < c.h.size(); ++a) {
                                      re[static_cast<std::size_t>(a)] = c.h(a).real();
                                      im[static_cast<std::size_t>(a)] = c.h(a).imag();
                                  }
                                  ju["channel"] = {{"kind", "antenna"}, {"re", re}, {"im", im}};
                              }},
                   u.channel);
        if (!u.bs_gains.empty()) ju["bs_gains"] = u.bs_gains;
        users.push_back(std::move(ju));
    }
    j["users"] = std::move(users);
    return j;
}

NetworkInstance instance_from(const json& j) {
    if (j.value("schema", std::string()) != kSchema)
        throw ConfigError(std::string("instance schema mismatch, expected ") + kSchema);
    NetworkInstance inst;
    inst.noise = j.at("noise_w").get<double>();
    inst.bandwidth = j.at("bandwidth_hz").get<double>();
    inst.scenario = scenario_from_json(j.at("scenario"));
    for (const auto& ju : j.at("users")) {
        UserState u;
        u.weight = ju.at("weight").get<double>();
        u.p_max = ju.at("p_max_w").get<double>();
        u.bs = ju.value("bs", 0);
        const auto& c = ju.at("channel");
        const std::string kind = c.at("kind").get<std::string>();
        if (kind == "scalar") {
            u.channel = ScalarChannel{c.at("gain").get<double>()};
        } else if (kind == "estimated") {
            u.channel = EstimatedChannel{c.at("path_loss").get<double>(), c.at("est_fading").get<double>(),
                                         c.at("error_var").get<double>()};
        } else if (kind == "antenna") {
            auto re = c.at("re").get<std::vector<double>>();
            auto im = c.at("im").get<std::vector<double>>();
            if (re.size() != im.size()) throw ShapeError("antenna channel re/im length mismatch");
            Eigen::VectorXcd h(static_cast<Eigen::Index>(re.size()));
            for (std::size_t a = 0; a < re.size(); ++a) h(static_cast<Eigen::Index>(a)) = {re[a], im[a]};
            u.channel = AntennaChannel{std::move(h)};
        } else {
            throw ConfigError("unknown channel kind '" + kind + "'");
        }
        if (ju.contains("bs_gains")) u.bs_gains = ju.at("bs_gains").get<std::vector<double>>();
        inst.users.push_back(std::move(u));
    }
    inst.validate();
    return inst;
}

template <class F>
auto guarded(F&& f) {
    try {
        return f();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed instance JSON: ") + e.what());
    }
}

}  // namespace

std::string to_json_string(const NetworkInstance& inst) { return instance_json(inst).dump(2); }

NetworkInstance instance_from_json_string(const std::string& text) {
    return guarded([&] { return instance_from(json::parse(text)); });
}

void save_instances(const std::vector<NetworkInstance>& set, const std::filesystem::path& path) {
    json j;
    j["schema"] = "noma-instance-set/1";
    j["instances"] = json::array();
    for (const auto& inst : set) j["instances"].push_back(instance_json(inst));
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path.string());
    out << j.dump(1) << '\n';
}

std::vector<NetworkInstance> load_instances(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return guarded([&] {
        json j = json::parse(ss.str());
        std::vector<NetworkInstance> out;
        if (j.contains("instances")) {
            for (const auto& ji : j.at("instances")) out.push_back(instance_from(ji));
        } else {
            out.push_back(instance_from(j));
        }
        return out;
    });
}

// ---- SicOrdering ---------------------------------------------------------

SicOrdering SicOrdering::identity(const NetworkInstance& inst) {
    std::vector<std::vector<int>> per(static_cast<std::size_t>(inst.station_count()));
    for (int b = 0; b < inst.station_count(); ++b) per[static_cast<std::size_t>(b)] = inst.users_of(b);
    return SicOrdering(std::move(per));
}

std::vector<int> SicOrdering::flat() const {
    std::vector<int> out;
    for (const auto& blk : per_bs_) out.insert(out.end(), blk.begin(), blk.end());
    return out;
}

std::size_t SicOrdering::user_count() const {
    std::size_t n = 0;
    for (const auto& blk : per_bs_) n += blk.size();
    return n;
}

std::vector<int> SicOrdering::positions(std::size_t users) const {
    std::vector<int> pos(users, -1);
    for (const auto& blk : per_bs_)
        for (std::size_t i = 0; i < blk.size(); ++i) {
            const int n = blk[i];
            if (n < 0 || static_cast<std::size_t>(n) >= users) throw DomainError("ordering names an unknown user");
            pos[static_cast<std::size_t>(n)] = static_cast<int>(i);
        }
    return pos;
}

bool SicOrdering::is_valid(const NetworkInstance& inst) const {
    if (static_cast<int>(per_bs_.size()) != inst.station_count()) return false;
    std::vector<char> seen(inst.size(), 0);
    for (std::size_t b = 0; b < per_bs_.size(); ++b)
        for (int n : per_bs_[b]) {
            if (n < 0 || static_cast<std::size_t>(n) >= inst.size()) return false;
            if (seen[static_cast<std::size_t>(n)]) return false;
            if (inst.users[static_cast<std::size_t>(n)].bs != static_cast<int>(b)) return false;
            seen[static_cast<std::size_t>(n)] = 1;
        }
    return std::all_of(seen.begin(), seen.end(), [](char c) { return c != 0; });
}

void SicOrdering::validate(const NetworkInstance& inst) const {
    if (!is_valid(inst))
        throw DomainError("decode order " + to_string(*this) + " is not a permutation of the users of each BS");
}

std::string to_string(const SicOrdering& ord) {
    std::string s;
    for (std::size_t b = 0; b < ord.per_bs().size(); ++b) {
        if (b > 0) s += '|';
        for (std::size_t i = 0; i < ord.per_bs()[b].size(); ++i) {
            if (i > 0) s += ' ';
            s += std::to_string(ord.per_bs()[b][i]);
        }
    }
    return s;
}

json generation_to_json(const GenerationConfig& cfg) {
    json j;
    j["users"] = cfg.users;
    j["scenario"] = scenario_to_json(cfg.scenario);
    j["radius_m"] = cfg.radius;
    j["noise_density_dbm_hz"] = cfg.noise_density_dbm;
    j["bandwidth_hz"] = cfg.bandwidth;
    j["p_max_w"] = cfg.p_max;
    j["error_var"] = cfg.error_var;
    j["bs_spacing_m"] = cfg.bs_spacing;
    j["bs_split"] = cfg.bs_split;
    return j;
}

GenerationConfig generation_from_json(const json& j, GenerationConfig cfg) {
    if (!j.is_object()) throw ConfigError("generation settings must be a JSON object");
    try {
        for (const auto& [key, v] : j.items()) {
            if (key == "users") cfg.users = v.get<std::size_t>();
            else if (key == "scenario") cfg.scenario = scenario_from_json(v);
            else if (key == "radius_m") cfg.radius = v.get<double>();
            else if (key == "noise_density_dbm_hz") cfg.noise_density_dbm = v.get<double>();
            else if (key == "bandwidth_hz") cfg.bandwidth = v.get<double>();
            else if (key == "p_max_w") cfg.p_max = v.get<double>();
            else if (key == "error_var") cfg.error_var = v.get<double>();
            else if (key == "bs_spacing_m") cfg.bs_spacing = v.get<double>();
            else if (key == "bs_split") cfg.bs_split = v.get<std::vector<int>>();
            else throw ConfigError("unknown generation key '" + key + "'");
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad generation settings: ") + e.what());
    }
    return cfg;
}

}  // namespace noma
