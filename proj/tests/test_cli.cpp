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

// Drives the noma-bench executable end to end and checks exit codes.

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#ifndef NOMA_BENCH_EXE
#error "NOMA_BENCH_EXE must point at the noma-bench binary"
#endif

namespace {

namespace fs = std::filesystem;

const fs::path& workdir() {
    static const fs::path dir = [] {
        const auto d = fs::temp_directory_path() / "noma_cli_test";
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

int bench(const std::string& args) {
    const std::string cmd = std::string(NOMA_BENCH_EXE) + " " + args + " >" + (workdir() / "stdout.txt").string() +
                            " 2>" + (workdir() / "stderr.txt").string();
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

std::string path(const std::string& name) { return (workdir() / name).string(); }

}  // namespace

TEST(Cli, HelpAndUsageErrors) {
    EXPECT_EQ(bench("--help"), 0);
    EXPECT_EQ(bench(""), 2);
    EXPECT_EQ(bench("frobnicate"), 2);
    EXPECT_EQ(bench("baseline --users 4"), 2);  // --algo is required
    EXPECT_EQ(bench("baseline --algo genetic --users 4 --count 1"), 2);
    EXPECT_EQ(bench("baseline --algo meta --scenario martian"), 2);
}

TEST(Cli, GenerateThenBaseline) {
    ASSERT_EQ(bench("generate --users 4 --count 3 --seed 7 -o " + path("set.json")), 0);
    ASSERT_EQ(bench("baseline --algo exhaustive --instances " + path("set.json") + " -o " + path("ex.csv") +
                    " --dump-kkt " + path("kkt.jsonl")),
              0);
    const std::string csv = slurp(path("ex.csv"));
    EXPECT_NE(csv.find("instance,algorithm,users,utility,solver_calls"), std::string::npos);
    EXPECT_NE(csv.find("2,exhaustive,4,"), std::string::npos);
    EXPECT_NE(slurp(path("kkt.jsonl")).find("kkt_residual"), std::string::npos);
    EXPECT_EQ(bench("baseline --algo meta --instances " + path("missing.json")), 2);
}

TEST(Cli, CallsReport) {
    ASSERT_EQ(bench("calls --n 5,10 -o " + path("calls.csv")), 0);
    const std::string csv = slurp(path("calls.csv"));
    EXPECT_NE(csv.find("exhaustive,5,120,120"), std::string::npos);
    EXPECT_NE(csv.find("meta,10,55,55"), std::string::npos);
    EXPECT_NE(csv.find("asopa,10,1,1"), std::string::npos);
    EXPECT_EQ(bench("calls --n 25"), 2);
}

TEST(Cli, SuiteExitCodes) {
    write(path("empty.json"), R"({"algorithms": [], "sweep": {"variable": "users", "values": [4]}})");
    EXPECT_EQ(bench("suite --spec " + path("empty.json")), 2);

    write(path("skip.json"), R"({"name": "skip", "algorithms": ["asopa", "cdesc"], "instances": 3,
        "sweep": {"variable": "users", "values": [4]}, "checkpoint": "nope.bin", "output_dir": ")" +
                                 path("skip_out") + "\"}");
    EXPECT_EQ(bench("suite --spec " + path("skip.json")), 2);
    EXPECT_TRUE(fs::exists(path("skip_out") + "/skip.csv"));

    write(path("ok.json"), R"({"name": "ok", "algorithms": ["meta", "cdesc"], "instances": 5,
        "sweep": {"variable": "users", "values": [3, 4]}, "output_dir": ")" +
                               path("ok_out") + "\"}");
    ASSERT_EQ(bench("suite --spec " + path("ok.json")), 0);
    EXPECT_EQ(bench("plot --csv " + path("ok_out") + "/ok.csv --kind lines -o " + path("ok.svg")), 0);
    EXPECT_NE(slurp(path("ok.svg")).find("<svg"), std::string::npos);
}

TEST(Cli, PlotErrors) {
    write(path("blank.csv"), "algorithm,value,mean_utility\n");
    EXPECT_EQ(bench("plot --csv " + path("blank.csv") + " --kind lines -o " + path("blank.svg")), 2);
    EXPECT_EQ(bench("plot --csv " + path("blank.csv") + " --kind pie -o " + path("blank.svg")), 2);
}

TEST(Cli, TrainThenEval) {
    write(path("train.json"), R"({"batch": 4, "updates_per_epoch": 2, "epochs": 1, "n_min": 3, "n_max": 4,
        "memory_capacity": 8, "instances_per_epoch": 8, "validation_instances": 4,
        "policy": {"d_e": 16, "heads": 4, "d_ff": 32}})");
    ASSERT_EQ(bench("train --config " + path("train.json") + " --epochs 2 -o " + path("run")), 0);
    EXPECT_NE(slurp(path("stdout.txt")).find("epoch 2"), std::string::npos);
    EXPECT_TRUE(fs::exists(path("run") + "/metrics.csv"));
    ASSERT_EQ(bench("eval --checkpoint " + path("run") + "/policy.bin --users 4 --count 5 --reference exhaustive -o " +
                    path("eval.csv")),
              0);
    EXPECT_NE(slurp(path("stdout.txt")).find("\"solver_calls_per_instance\": 1.0"), std::string::npos);
    EXPECT_EQ(bench("eval --checkpoint " + path("run") + "/policy.bin --users 4 --count 2 --scenario multi_antenna"), 2);

    write(path("bad_train.json"), R"({"batch": 4, "epochs": 0})");
    EXPECT_EQ(bench("train --config " + path("bad_train.json")), 2);
}
