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

// noma-bench: experiment harness for SIC ordering and power allocation.

#include "noma/baselines.hpp"
#include "noma/errors.hpp"
#include "noma/experiment.hpp"
#include "noma/instance.hpp"
#include "noma/parallel.hpp"
#include "noma/plot.hpp"
#include "noma/policy.hpp"
#include "noma/power_solver.hpp"
#include "noma/trainer.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

namespace {

using namespace noma;

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

// Instance source shared by baseline / eval / generate.
struct InstanceArgs {
    std::string file;
    std::size_t users = 5;
    std::size_t count = 100;
    std::uint64_t seed = 1;
    std::string scenario = "perfect";
    int antennas = 2;
    std::string equalizer = "mmse";
    int stations = 2;
    double outage = 0.1;
    double radius = 100.0;
    double noise_density = -174.0;
    double error_var = 0.01;
    std::vector<int> bs_split;

    void attach(CLI::App* app) {
        app->add_option("--instances", file, "instance-set JSON file (overrides generation options)");
        app->add_option("--users,-n", users, "users per generated instance");
        app->add_option("--count", count, "number of generated instances");
        app->add_option("--seed", seed, "generation seed");
        app->add_option("--scenario", scenario, "perfect | imperfect | multi_antenna | multi_bs")
            ->check(CLI::IsMember({"perfect", "imperfect", "multi_antenna", "multi_bs"}));
        app->add_option("--antennas", antennas, "receive antennas (multi_antenna)");
        app->add_option("--equalizer", equalizer, "zf | mmse (multi_antenna)")->check(CLI::IsMember({"zf", "mmse"}));
        app->add_option("--stations", stations, "base stations (multi_bs)");
        app->add_option("--outage", outage, "outage probability (imperfect)");
        app->add_option("--radius", radius, "cell radius in m");
        app->add_option("--noise-density", noise_density, "noise spectral density in dBm/Hz");
        app->add_option("--error-var", error_var, "channel estimation error variance (imperfect)");
        app->add_option("--bs-split", bs_split, "users per BS (multi_bs)")->delimiter(',');
    }

    GenerationConfig generation() const {
        GenerationConfig g;
        g.users = users;
        g.radius = radius;
        g.noise_density_dbm = noise_density;
        g.error_var = error_var;
        g.bs_split = bs_split;
        if (scenario == "imperfect") g.scenario = ImperfectCsi{outage};
        else if (scenario == "multi_antenna")
            g.scenario = MultiAntenna{antennas, equalizer == "zf" ? EqualizerKind::zf : EqualizerKind::mmse};
        else if (scenario == "multi_bs") g.scenario = MultiBs{stations};
        return g;
    }

    std::vector<NetworkInstance> load() const {
        if (!file.empty()) return load_instances(file);
        return generate_instances(seed, count, generation());
    }
};

std::string fmt(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", x);
    return buf;
}

// Writes to the named file, or stdout for "" / "-".
void emit(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path);
    out << text;
}

int cmd_generate(const InstanceArgs& ia, const std::string& out) {
    if (out.empty()) throw ConfigError("generate needs --out");
    save_instances(generate_instances(ia.seed, ia.count, ia.generation()), out);
    return 0;
}

int cmd_baseline(const InstanceArgs& ia, const std::string& algo, int tabu_iterations, const std::string& out,
                 const std::string& kkt_path) {
    const std::vector<NetworkInstance> set = ia.load();
    BaselineOptions opt;
    opt.tabu_iterations = tabu_iterations;
    std::ostringstream csv;
    csv << "# algorithm=" << algo << " instances=" << set.size()
        << (ia.file.empty() ? " seed=" + std::to_string(ia.seed) : " source=" + ia.file) << "\n"
        << "# units: utility = sum_n w_n ln(R_n / (bit/s)); powers in W, in user order\n"
        << "instance,algorithm,users,utility,solver_calls,ordering,powers_w\n";
    std::ostringstream kkt;
    for (std::size_t i = 0; i < set.size(); ++i) {
        const BaselineResult r = run_baseline(algo, set[i], opt);
        csv << i << ',' << algo << ',' << set[i].size() << ',' << fmt(r.utility) << ',' << r.solver_calls << ','
            << to_string(r.ordering) << ',';
        for (std::size_t n = 0; n < r.p.size(); ++n) csv << (n ? ";" : "") << fmt(r.p[n]);
        csv << '\n';
        if (!kkt_path.empty()) kkt << to_json_string(solve_allocation(set[i], r.ordering), true) << '\n';
    }
    emit(out, csv.str());
    if (!kkt_path.empty()) emit(kkt_path, kkt.str());
    return 0;
}

int cmd_eval(const InstanceArgs& ia, const std::string& checkpoint, const std::string& reference,
             const std::string& out) {
    const PolicyModel model = PolicyModel::load(checkpoint);
    const std::vector<NetworkInstance> set = ia.load();
    if (set.empty()) throw ConfigError("no instances to evaluate");
    if (model.cfg.d_in != feature_width(set.front().scenario))
        throw ConfigError("checkpoint input width does not match the instance scenario");
    std::vector<double> ref;
    if (reference != "none") ref = reference_utilities(set, reference);
    const EvalMetrics m = evaluate(model, set, ref);

    nlohmann::json j;
    j["instances"] = set.size();
    j["reference"] = ref.empty() ? "none" : resolve_reference(set, reference);
    j["mean_utility"] = m.mean_utility;
    j["solver_calls_per_instance"] = static_cast<double>(m.solver_calls) / static_cast<double>(set.size());
    if (!ref.empty()) {
        j["mean_normalized"] = m.mean_normalized;
        j["median_normalized"] = m.median_normalized;
        j["q1_normalized"] = m.q1_normalized;
        j["q3_normalized"] = m.q3_normalized;
        j["min_normalized"] = m.min_normalized;
        j["max_normalized"] = m.max_normalized;
    }
    std::cout << j.dump(2) << "\n";
    if (!out.empty()) {
        std::ostringstream csv;
        csv << "# checkpoint=" << checkpoint << " reference=" << j["reference"].get<std::string>() << "\n"
            << "algorithm,variable,value,instance,utility,normalized\n";
        for (std::size_t i = 0; i < set.size(); ++i)
            csv << "asopa,users," << set[i].size() << ',' << i << ',' << fmt(m.utility[i]) << ','
                << (ref.empty() ? std::string("nan") : fmt(m.normalized[i])) << '\n';
        emit(out, csv.str());
    }
    return 0;
}

int cmd_train(const std::string& config, std::optional<std::uint64_t> seed, std::optional<int> epochs,
              const std::string& out) {
    TrainConfig cfg = load_train_config(config);
    if (seed) cfg.seed = *seed;
    if (epochs) cfg.epochs = *epochs;
    if (!out.empty()) cfg.output_dir = out;
    if (cfg.output_dir.empty()) cfg.output_dir = "train_out";
    train(cfg, [](const EpochMetrics& e) {
        std::printf("epoch %d  val_utility %.4f  normalized %.6f  loss %.4g  %.1fs\n", e.epoch, e.mean_val_utility,
                    e.mean_normalized, e.loss, e.wall_time);
        std::fflush(stdout);
    });
    return 0;
}

int cmd_suite(const std::string& spec_path) {
    const ExperimentSpec spec = load_experiment(spec_path);
    const SuiteResult r = run_suite(spec);
    std::printf("wrote %s\n", (spec.output_dir / (spec.name + ".csv")).string().c_str());
    if (r.any_skipped()) {
        std::fprintf(stderr, "suite: some rows were skipped (missing checkpoint)\n");
        return kExitConfig;
    }
    return 0;
}

int run(int argc, char** argv) {
    CLI::App app{"NOMA SIC-ordering and power-allocation experiment harness"};
    app.require_subcommand(1);
    int threads = 0;
    app.add_option("--threads", threads, "worker threads (overrides NOMA_THREADS)");

    InstanceArgs gen_args, base_args, eval_args;
    std::string gen_out;
    auto* gen = app.add_subcommand("generate", "write a seeded instance set as JSON");
    gen_args.attach(gen);
    gen->add_option("--out,-o", gen_out, "output JSON file")->required();

    std::string algo, base_out, kkt_out;
    int tabu_iterations = 10;
    auto* base = app.add_subcommand("baseline", "run a baseline ordering algorithm");
    base_args.attach(base);
    base->add_option("--algo", algo, "exhaustive | tabu | meta | wdesc | cdesc")->required();
    base->add_option("--tabu-iterations", tabu_iterations, "tabu search iterations");
    base->add_option("--out,-o", base_out, "CSV output (default stdout)");
    base->add_option("--dump-kkt", kkt_out, "write per-instance solver reports with KKT residuals (JSON lines)");

    std::string checkpoint, reference = "auto", eval_out;
    auto* ev = app.add_subcommand("eval", "greedy-decode a trained policy and compare with a reference");
    eval_args.attach(ev);
    ev->add_option("--checkpoint", checkpoint, "policy checkpoint")->required();
    ev->add_option("--reference", reference, "auto | none | baseline name");
    ev->add_option("--out,-o", eval_out, "per-instance CSV");

    std::string config, train_out;
    std::optional<std::uint64_t> train_seed;
    std::optional<int> train_epochs;
    auto* tr = app.add_subcommand("train", "train the ordering policy");
    tr->add_option("--config", config, "training config JSON")->required();
    tr->add_option("--seed", train_seed, "override the config seed");
    tr->add_option("--epochs", train_epochs, "override the epoch count");
    tr->add_option("--out,-o", train_out, "output directory for metrics and checkpoints");

    std::string spec_path;
    auto* su = app.add_subcommand("suite", "run an experiment sweep from a JSON spec");
    su->add_option("--spec", spec_path, "experiment spec JSON")->required();

    std::vector<int> call_users{5, 8, 10, 14, 20};
    int call_tabu = 10;
    std::uint64_t call_seed = 1;
    std::string calls_out;
    auto* ca = app.add_subcommand("calls", "analytic vs measured solver-call counts");
    ca->add_option("--n", call_users, "user counts")->delimiter(',');
    ca->add_option("--tabu-iterations", call_tabu, "tabu search iterations");
    ca->add_option("--seed", call_seed, "instance seed");
    ca->add_option("--out,-o", calls_out, "CSV output (default stdout)");

    std::string plot_csv_path, plot_kind, plot_out, plot_y;
    auto* pl = app.add_subcommand("plot", "render a CSV as an SVG chart");
    pl->add_option("--csv", plot_csv_path, "input CSV")->required();
    pl->add_option("--kind", plot_kind, "lines | box | convergence")->required();
    pl->add_option("--out,-o", plot_out, "output SVG")->required();
    pl->add_option("--y", plot_y, "column to plot (lines / convergence)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }
    if (threads > 0) set_thread_count(threads);

    if (*gen) return cmd_generate(gen_args, gen_out);
    if (*base) return cmd_baseline(base_args, algo, tabu_iterations, base_out, kkt_out);
    if (*ev) return cmd_eval(eval_args, checkpoint, reference, eval_out);
    if (*tr) return cmd_train(config, train_seed, train_epochs, train_out);
    if (*su) return cmd_suite(spec_path);
    if (*ca) {
        emit(calls_out, call_count_csv(call_count_report(call_users, call_tabu, call_seed)));
        return 0;
    }
    if (*pl) {
        plot_csv(plot_csv_path, plot_kind, plot_out, plot_y);
        return 0;
    }
    return kExitConfig;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const noma::NumericalError& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
        return kExitNumerical;
    } catch (const noma::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitConfig;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitConfig;
    }
}
