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

#include "noma/experiment.hpp"

#include "noma/config_json.hpp"
#include "noma/errors.hpp"
#include "noma/parallel.hpp"
#include "noma/policy.hpp"
#include "noma/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <optional>
#include <sstream>

namespace noma {

using nlohmann::json;

namespace {

const char* const kVariables[] = {"users", "radius_m", "noise_density_dbm_hz", "error_var", "bs_split"};

bool known_variable(const std::string& v) {
    for (const char* k : kVariables)
        if (v == k) return true;
    return false;
}

std::string fmt(double x) {
    if (std::isnan(x)) return "nan";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", x);
    return buf;
}

}  // namespace

void ExperimentSpec::validate() const {
    if (algorithms.empty()) throw ConfigError("experiment needs at least one algorithm");
    for (const auto& a : algorithms)
        if (a != "asopa" && !is_baseline_name(a)) throw ConfigError("unknown algorithm '" + a + "'");
    if (!known_variable(variable)) throw ConfigError("unknown sweep variable '" + variable + "'");
    if (values.empty()) throw ConfigError("sweep has no values");
    if (instances == 0) throw ConfigError("instance count must be positive");
    if (reference != "auto" && reference != "none" && !is_baseline_name(reference))
        throw ConfigError("unknown reference '" + reference + "'");
    if (tabu_iterations < 1) throw ConfigError("tabu_iterations must be positive");
    if (variable == "users" || variable == "bs_split")
        for (double v : values)
            if (v < 1 || v != std::floor(v)) throw ConfigError(variable + " values must be positive integers");
    if (variable == "bs_split" && !std::holds_alternative<MultiBs>(generation.scenario))
        throw ConfigError("bs_split sweeps need the multi_bs scenario");
}

ExperimentSpec experiment_from_json_string(const std::string& text) {
    ExperimentSpec s;
    try {
        const json j = json::parse(text);
        if (!j.is_object()) throw ConfigError("experiment spec must be a JSON object");
        for (const auto& [key, v] : j.items()) {
            if (key == "name") s.name = v.get<std::string>();
            else if (key == "generation") s.generation = generation_from_json(v);
            else if (key == "algorithms") s.algorithms = v.get<std::vector<std::string>>();
            else if (key == "sweep") {
                s.variable = v.at("variable").get<std::string>();
                s.values = v.at("values").get<std::vector<double>>();
            } else if (key == "instances") s.instances = v.get<std::size_t>();
            else if (key == "seed") s.seed = v.get<std::uint64_t>();
            else if (key == "reference") s.reference = v.get<std::string>();
            else if (key == "tabu_iterations") s.tabu_iterations = v.get<int>();
            else if (key == "checkpoint") s.checkpoints["*"] = v.get<std::string>();
            else if (key == "checkpoints") {
                for (const auto& [n, p] : v.items()) s.checkpoints[n] = p.get<std::string>();
            } else if (key == "output_dir") s.output_dir = v.get<std::string>();
            else throw ConfigError("unknown experiment key '" + key + "'");
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad experiment spec: ") + e.what());
    }
    s.validate();
    return s;
}

ExperimentSpec load_experiment(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open experiment spec " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    ExperimentSpec s = experiment_from_json_string(ss.str());
    // Relative checkpoint paths are relative to the spec file.
    for (auto& [k, p] : s.checkpoints)
        if (p.is_relative()) p = path.parent_path() / p;
    return s;
}

bool SuiteResult::any_skipped() const {
    for (const auto& r : rows)
        if (r.status == "skipped") return true;
    return false;
}

std::vector<NetworkInstance> suite_instances(const ExperimentSpec& spec, double value) {
    GenerationConfig g = spec.generation;
    const std::string& v = spec.variable;
    if (v == "users") g.users = static_cast<std::size_t>(value);
    else if (v == "radius_m") g.radius = value;
    else if (v == "noise_density_dbm_hz") g.noise_density_dbm = value;
    else if (v == "error_var") g.error_var = value;
    else if (v == "bs_split") {
        const int first = static_cast<int>(value);
        const int total = static_cast<int>(g.users);
        if (first >= total) throw ConfigError("bs_split value must leave users for the second BS");
        g.bs_split = {first, total - first};
    }
    return generate_instances(spec.seed, spec.instances, g);
}

namespace {

struct Outcome {
    std::vector<double> utility;
    std::vector<std::uint64_t> calls;
    std::vector<double> seconds;
    std::string status = "ok";
};

Outcome run_algorithm(const std::string& algo, const std::vector<NetworkInstance>& set, const BaselineOptions& opt,
                      const std::optional<PolicyModel>& policy) {
    Outcome o;
    o.utility.assign(set.size(), 0.0);
    o.calls.assign(set.size(), 0);
    o.seconds.assign(set.size(), 0.0);
    if (algo == "asopa" && !policy) {
        o.status = "skipped";
        return o;
    }
    if (algo == "exhaustive")
        for (const auto& inst : set)
            if (inst.size() > opt.exhaustive_cap) {
                o.status = "refused";
                return o;
            }
    BaselineOptions inner = opt;
    inner.exec = Exec::serial;  // parallelism is across instances here
    parallel_for(set.size(), Exec::openmp, [&](std::size_t i) {
        if (algo == "asopa") {
            const auto t0 = std::chrono::steady_clock::now();
            const DecodeTrace tr = infer(*policy, set[i], DecodeMode::greedy);
            o.utility[i] = score_ordering(set[i], tr.ordering, inner.solver).utility;
            o.calls[i] = 1;
            o.seconds[i] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        } else {
            const BaselineResult r = run_baseline(algo, set[i], inner);
            o.utility[i] = r.utility;
            o.calls[i] = r.solver_calls;
            o.seconds[i] = r.elapsed;
        }
    });
    return o;
}

std::optional<PolicyModel> load_policy(const ExperimentSpec& spec, std::size_t users) {
    auto it = spec.checkpoints.find(std::to_string(users));
    if (it == spec.checkpoints.end()) it = spec.checkpoints.find("*");
    if (it == spec.checkpoints.end()) return std::nullopt;
    if (!std::filesystem::exists(it->second)) {
        std::fprintf(stderr, "suite: checkpoint %s not found; asopa row skipped\n", it->second.string().c_str());
        return std::nullopt;
    }
    PolicyModel m = PolicyModel::load(it->second);
    if (m.cfg.d_in != feature_width(spec.generation.scenario))
        throw ConfigError("checkpoint " + it->second.string() + " was trained for a different scenario");
    return m;
}

}  // namespace

SuiteResult run_suite(const ExperimentSpec& spec) {
    spec.validate();
    BaselineOptions opt;
    opt.tabu_iterations = spec.tabu_iterations;

    SuiteResult result;
    for (double value : spec.values) {
        const std::vector<NetworkInstance> set = suite_instances(spec, value);
        const std::size_t users = set.front().size();
        const bool wants_policy = std::find(spec.algorithms.begin(), spec.algorithms.end(), "asopa") != spec.algorithms.end();
        const std::optional<PolicyModel> policy = wants_policy ? load_policy(spec, users) : std::nullopt;

        std::map<std::string, Outcome> outcomes;
        for (const auto& a : spec.algorithms) outcomes[a] = run_algorithm(a, set, opt, policy);

        std::vector<double> ref;
        if (spec.reference != "none") {
            const std::string name = resolve_reference(set, spec.reference);
            auto it = outcomes.find(name);
            if (it == outcomes.end()) it = outcomes.emplace(name, run_algorithm(name, set, opt, policy)).first;
            if (it->second.status == "ok") ref = it->second.utility;
        }

        for (const auto& a : spec.algorithms) {
            const Outcome& o = outcomes.at(a);
            SuiteRow row;
            row.algorithm = a;
            row.value = value;
            row.users = users;
            row.instances = set.size();
            row.status = o.status;
            row.mean_normalized = std::numeric_limits<double>::quiet_NaN();
            if (o.status == "ok") {
                const double n = static_cast<double>(set.size());
                row.utility = o.utility;
                row.mean_utility = std::accumulate(o.utility.begin(), o.utility.end(), 0.0) / n;
                double ss = 0.0;
                for (double u : o.utility) ss += (u - row.mean_utility) * (u - row.mean_utility);
                row.std_utility = set.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
                row.solver_calls = std::accumulate(o.calls.begin(), o.calls.end(), 0.0) / n;
                row.mean_time = std::accumulate(o.seconds.begin(), o.seconds.end(), 0.0) / n;
                if (!ref.empty()) {
                    for (std::size_t i = 0; i < set.size(); ++i) row.normalized.push_back(o.utility[i] / ref[i]);
                    row.mean_normalized =
                        std::accumulate(row.normalized.begin(), row.normalized.end(), 0.0) / n;
                }
            }
            result.rows.push_back(std::move(row));
        }
    }

    std::filesystem::create_directories(spec.output_dir);
    const std::string header = "# suite=" + spec.name + " scenario=" + scenario_name(spec.generation.scenario) +
                               " sweep=" + spec.variable + " instances=" + std::to_string(spec.instances) +
                               " seed=" + std::to_string(spec.seed) + " reference=" + spec.reference + "\n";
    {
        std::ofstream out(spec.output_dir / (spec.name + ".csv"));
        if (!out) throw ConfigError("cannot write to " + spec.output_dir.string());
        out << header
            << "# units: utility = sum_n w_n ln(R_n / (bit/s)); normalized = utility / reference; "
               "solver_calls = mean power-allocation solves per instance\n"
            << "algorithm,variable,value,users,instances,mean_utility,std_utility,mean_normalized,solver_calls,status\n";
        for (const auto& r : result.rows)
            out << r.algorithm << ',' << spec.variable << ',' << fmt(r.value) << ',' << r.users << ',' << r.instances
                << ',' << fmt(r.mean_utility) << ',' << fmt(r.std_utility) << ',' << fmt(r.mean_normalized) << ','
                << fmt(r.solver_calls) << ',' << r.status << '\n';
    }
    {
        std::ofstream out(spec.output_dir / (spec.name + "_instances.csv"));
        out << header << "# units: utility = sum_n w_n ln(R_n / (bit/s))\n"
            << "algorithm,variable,value,instance,utility,normalized\n";
        for (const auto& r : result.rows)
            for (std::size_t i = 0; i < r.utility.size(); ++i)
                out << r.algorithm << ',' << spec.variable << ',' << fmt(r.value) << ',' << i << ','
                    << fmt(r.utility[i]) << ',' << fmt(r.normalized.empty() ? std::nan("") : r.normalized[i]) << '\n';
    }
    {
        std::ofstream out(spec.output_dir / (spec.name + "_timing.csv"));
        out << header << "# units: seconds of wall-clock per instance on this machine (not reproducible)\n"
            << "algorithm,variable,value,mean_time_s\n";
        for (const auto& r : result.rows)
            out << r.algorithm << ',' << spec.variable << ',' << fmt(r.value) << ',' << fmt(r.mean_time) << '\n';
    }
    return result;
}

std::vector<CallCountRow> call_count_report(const std::vector<int>& users, int tabu_iterations, std::uint64_t seed) {
    std::vector<CallCountRow> rows;
    BaselineOptions opt;
    opt.tabu_iterations = tabu_iterations;
    for (int n : users) {
        if (n < 1 || n > 20) throw ConfigError("call-count report supports 1 <= N <= 20");
        GenerationConfig g;
        g.users = static_cast<std::size_t>(n);
        const NetworkInstance inst = generate_instance(seed, 0, g);
        auto add = [&](const std::string& algo, std::uint64_t analytic, std::optional<std::uint64_t> measured) {
            rows.push_back({algo, n, analytic, measured.value_or(0), measured.has_value()});
        };
        add("exhaustive", exhaustive_calls(n),
            static_cast<std::size_t>(n) <= opt.exhaustive_cap ? std::optional(exhaustive(inst, opt).solver_calls)
                                                               : std::nullopt);
        add("tabu", tabu_calls(n, tabu_iterations), tabu_search(inst, opt).solver_calls);
        add("meta", meta_calls(n), meta_scheduling(inst, opt).solver_calls);
        add("wdesc", 1, weight_descending(inst, opt).solver_calls);
        add("cdesc", 1, channel_descending(inst, opt).solver_calls);
        // The policy's call count is structural, so an untrained model measures it.
        PolicyConfig pc;
        pc.d_in = feature_width(inst.scenario);
        const PolicyModel m = PolicyModel::init(pc, seed);
        add("asopa", 1, evaluate(m, {inst}, {}).solver_calls);
    }
    return rows;
}

std::string call_count_csv(const std::vector<CallCountRow>& rows) {
    std::ostringstream out;
    out << "# solver_calls = power-allocation solves per instance; measured on one seeded instance\n"
        << "algorithm,users,analytic,measured\n";
    for (const auto& r : rows)
        out << r.algorithm << ',' << r.users << ',' << r.analytic << ','
            << (r.has_measured ? std::to_string(r.measured) : std::string("-")) << '\n';
    return out.str();
}

}  // namespace noma
