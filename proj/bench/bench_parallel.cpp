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

// Serial reference vs OpenMP for the data-parallel kernels: candidate-order
// scoring inside the search baselines, batched policy evaluation, and the
// REINFORCE solve fan-out. Thread count follows NOMA_THREADS.

#include "noma/baselines.hpp"
#include "noma/parallel.hpp"
#include "noma/trainer.hpp"

#include <benchmark/benchmark.h>

using namespace noma;

namespace {

Exec exec_of(const benchmark::State& state) { return state.range(0) ? Exec::openmp : Exec::serial; }

std::vector<NetworkInstance> instances(std::size_t users, std::size_t count) {
    GenerationConfig g;
    g.users = users;
    return generate_instances(42, count, g);
}

PolicyModel small_policy(const std::vector<NetworkInstance>& set) {
    PolicyConfig c;
    c.d_e = 32;
    c.heads = 4;
    c.d_ff = 64;
    PolicyModel m = PolicyModel::init(c, 42);
    for (const auto& inst : set) m.scaler.observe(inst);
    return m;
}

void BM_Exhaustive(benchmark::State& state) {
    const auto inst = instances(7, 1)[0];
    BaselineOptions opt;
    opt.exec = exec_of(state);
    for (auto _ : state) benchmark::DoNotOptimize(exhaustive(inst, opt).utility);
    state.SetLabel(state.range(0) ? "openmp" : "serial");
}

void BM_Tabu(benchmark::State& state) {
    const auto inst = instances(10, 1)[0];
    BaselineOptions opt;
    opt.exec = exec_of(state);
    for (auto _ : state) benchmark::DoNotOptimize(tabu_search(inst, opt).utility);
    state.SetLabel(state.range(0) ? "openmp" : "serial");
}

void BM_Evaluate(benchmark::State& state) {
    const auto set = instances(10, 64);
    const PolicyModel m = small_policy(set);
    for (auto _ : state) benchmark::DoNotOptimize(evaluate(m, set, {}, {}, exec_of(state)).mean_utility);
    state.SetLabel(state.range(0) ? "openmp" : "serial");
}

void BM_Reinforce(benchmark::State& state) {
    const auto set = instances(10, 64);
    const PolicyModel m = small_policy(set);
    std::vector<const NetworkInstance*> batch;
    for (const auto& inst : set) batch.push_back(&inst);
    Philox rng(7);
    for (auto _ : state) benchmark::DoNotOptimize(reinforce_gradient(m, m, batch, rng, {}, exec_of(state)).gradient.loss);
    state.SetLabel(state.range(0) ? "openmp" : "serial");
}

}  // namespace

BENCHMARK(BM_Exhaustive)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Tabu)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Evaluate)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Reinforce)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
