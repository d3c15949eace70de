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

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

namespace noma {

/// Linear power gain g_n between a single-antenna user and its BS.
struct ScalarChannel {
    double gain = 1.0;
};

/// Imperfect CSI: known path loss, estimated Rayleigh fading |a_hat|^2 and
/// the estimation error variance.
struct EstimatedChannel {
    double path_loss = 1.0;
    double est_fading = 1.0;
    double error_var = 0.0;
};

/// Complex channel vector from a user to every BS receive antenna.
struct AntennaChannel {
    Eigen::VectorXcd h;
};

using Channel = std::variant<ScalarChannel, EstimatedChannel, AntennaChannel>;

struct UserState {
    double weight = 1.0;
    double p_max = 1.0;  // W
    Channel channel = ScalarChannel{};
    int bs = 0;
    /// Multi-BS only: linear gain from this user to every BS; bs_gains[bs]
    /// equals the serving gain.
    std::vector<double> bs_gains;
};

struct PerfectCsi {};
struct ImperfectCsi {
    double outage = 0.1;
};
enum class EqualizerKind { zf, mmse };
struct MultiAntenna {
    int antennas = 2;
    EqualizerKind equalizer = EqualizerKind::mmse;
};
struct MultiBs {
    int stations = 2;
};

using Scenario = std::variant<PerfectCsi, ImperfectCsi, MultiAntenna, MultiBs>;

std::string scenario_name(const Scenario& s);

struct NetworkInstance {
    std::vector<UserState> users;
    double noise = 0.0;       // W
    double bandwidth = 1e6;   // Hz
    Scenario scenario = PerfectCsi{};

    std::size_t size() const { return users.size(); }
    int station_count() const;
    /// Users served by BS b, ascending index.
    std::vector<int> users_of(int b) const;

    /// Throws DomainError / ConfigError when an invariant is violated.
    void validate() const;
};

/// Scalar summary gain used by sorting heuristics and features: g for a
/// scalar channel, est_fading*path_loss for an estimate, ||h||^2 for an
/// antenna vector.
double effective_gain(const UserState& u);

/// Free-space path loss gain A_d * (c / (4 pi f_c d))^b_e.
double path_loss_gain(double distance_m);

inline constexpr double kAntennaGain = 4.11;
inline constexpr double kCarrierHz = 915e6;
inline constexpr double kPathLossExponent = 2.8;
inline constexpr double kMinDistance = 1.0;  // m
inline const std::vector<double> kWeightSet{1, 2, 4, 8, 16, 32};

/// Converts a noise spectral density in dBm/Hz over a bandwidth to watts.
double noise_power_w(double density_dbm_per_hz, double bandwidth_hz);

struct GenerationConfig {
    std::size_t users = 5;
    Scenario scenario = PerfectCsi{};
    double radius = 100.0;                 // m
    double noise_density_dbm = -174.0;     // dBm/Hz
    double bandwidth = 1e6;                // Hz
    double p_max = 1.0;                    // W
    double error_var = 0.01;               // imperfect CSI estimation error variance
    double bs_spacing = 200.0;             // m, multi-BS
    std::vector<int> bs_split;             // users per BS; empty = even split
};

/// Deterministic in (seed, index, cfg). Instance `index` of a seed draws
/// from its own Philox stream, so sets can be generated in any order.
NetworkInstance generate_instance(std::uint64_t seed, std::uint64_t index, const GenerationConfig& cfg);
std::vector<NetworkInstance> generate_instances(std::uint64_t seed, std::size_t count, const GenerationConfig& cfg,
                                                std::uint64_t first_index = 0);

/// JSON instance files ("noma-instance/1").
std::string to_json_string(const NetworkInstance& inst);
NetworkInstance instance_from_json_string(const std::string& text);
void save_instances(const std::vector<NetworkInstance>& set, const std::filesystem::path& path);
std::vector<NetworkInstance> load_instances(const std::filesystem::path& path);

/// Decode order per BS: per_bs()[b][i] is the i-th user decoded at BS b.
class SicOrdering {
public:
    SicOrdering() = default;
    explicit SicOrdering(std::vector<int> order) : per_bs_{std::move(order)} {}
    explicit SicOrdering(std::vector<std::vector<int>> per_bs) : per_bs_(std::move(per_bs)) {}

    static SicOrdering identity(const NetworkInstance& inst);

    const std::vector<std::vector<int>>& per_bs() const { return per_bs_; }
    std::vector<std::vector<int>>& per_bs() { return per_bs_; }
    /// BS blocks concatenated in BS order.
    std::vector<int> flat() const;
    std::size_t user_count() const;
    /// position[n] = decode index of user n within its BS (0 = decoded first).
    std::vector<int> positions(std::size_t users) const;

    /// Each user appears exactly once, in the block of its own BS.
    bool is_valid(const NetworkInstance& inst) const;
    void validate(const NetworkInstance& inst) const;

    bool operator==(const SicOrdering&) const = default;

private:
    std::vector<std::vector<int>> per_bs_;
};

std::string to_string(const SicOrdering& ord);

}  // namespace noma
