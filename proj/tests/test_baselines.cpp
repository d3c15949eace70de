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

#include "noma/baselines.hpp"
#include "noma/errors.hpp"
#include "noma/model.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

using namespace noma;

namespace {

NetworkInstance scalar_instance(const std::vector<double>& gains, const std::vector<double>& weights, double noise) {
    NetworkInstance inst;
    inst.noise = noise;
    for (std::size_t n = 0; n < gains.size(); ++n) {
        UserState u;
        u.weight = weights[n];
        u.channel = ScalarChannel{gains[n]};
        inst.users.push_back(u);
    }
    return inst;
}

std::vector<NetworkInstance> seeded(std::size_t users, std::size_t count, std::uint64_t seed) {
    GenerationConfig cfg;
    cfg.users = users;
    return generate_instances(seed, count, cfg);
}

}  // namespace

TEST(Baselines, ExhaustiveSingleUser) {
    const auto inst = scalar_instance({1e-10}, {4}, 4e-15);
    const auto r = exhaustive(inst);
    EXPECT_EQ(r.ordering.flat(), std::vector<int>{0});
    EXPECT_EQ(r.solver_calls, 1u);
}

TEST(Baselines, ExhaustiveTwoUsersPicksBetterOrder) {
    for (const auto& inst : seeded(2, 10, 3)) {
        const double a = solve_p1(inst, SicOrdering(std::vector<int>{0, 1})).objective;
        const double b = solve_p1(inst, SicOrdering(std::vector<int>{1, 0})).objective;
        const auto r = exhaustive(inst);
        EXPECT_EQ(r.solver_calls, 2u);
        EXPECT_NEAR(r.utility, std::max(a, b), 1e-12);
        EXPECT_EQ(r.ordering.flat(), (a >= b ? std::vector<int>{0, 1} : std::vector<int>{1, 0}));
    }
}

TEST(Baselines, ExhaustiveDominatesEveryBaseline) {
    for (const auto& inst : seeded(5, 6, 4)) {
        const double best = exhaustive(inst).utility;
        for (const char* algo : {"tabu", "meta", "wdesc", "cdesc"})
            EXPECT_GE(best, run_baseline(algo, inst).utility - 1e-9) << algo;
    }
}

TEST(Baselines, ExhaustiveRefusesAboveCap) {
    const auto inst = seeded(9, 1, 5)[0];
    EXPECT_THROW(exhaustive(inst), ConfigError);
    BaselineOptions opt;
    opt.exhaustive_cap = 3;
    EXPECT_THROW(exhaustive(seeded(4, 1, 5)[0], opt), ConfigError);
}

TEST(Baselines, CallCountsMatchClosedForms) {
    EXPECT_EQ(exhaustive_calls(5), 120u);
    EXPECT_EQ(tabu_calls(10, 10), 10u * 45u + 1u);
    EXPECT_EQ(meta_calls(10), 55u);
    for (std::size_t n : {1u, 2u, 4u, 6u}) {
        const auto inst = seeded(n, 1, 6)[0];
        const int N = static_cast<int>(n);
        EXPECT_EQ(exhaustive(inst).solver_calls, exhaustive_calls(N));
        BaselineOptions opt;
        opt.tabu_iterations = 3;
        EXPECT_EQ(tabu_search(inst, opt).solver_calls, tabu_calls(N, 3)) << n;
        EXPECT_EQ(meta_scheduling(inst).solver_calls, meta_calls(N));
        EXPECT_EQ(weight_descending(inst).solver_calls, 1u);
        EXPECT_EQ(channel_descending(inst).solver_calls, 1u);
    }
}

TEST(Baselines, TabuOnTwoUsersEqualsExhaustive) {
    BaselineOptions opt;
    opt.tabu_iterations = 1;
    for (const auto& inst : seeded(2, 10, 7)) EXPECT_NEAR(tabu_search(inst, opt).utility, exhaustive(inst).utility, 1e-12);
}

TEST(Baselines, TabuBestIsMonotoneInIterations) {
    for (const auto& inst : seeded(7, 5, 8)) {
        double prev = -1e300;
        for (int it = 1; it <= 6; ++it) {
            BaselineOptions opt;
            opt.tabu_iterations = it;
            const double u = tabu_search(inst, opt).utility;
            EXPECT_GE(u, prev - 1e-12) << it;
            prev = u;
        }
    }
}

TEST(Baselines, MetaOnTwoUsersEqualsExhaustive) {
    for (const auto& inst : seeded(2, 10, 9)) {
        const auto r = meta_scheduling(inst);
        EXPECT_EQ(r.solver_calls, 3u);
        EXPECT_NEAR(r.utility, exhaustive(inst).utility, 1e-12);
    }
}

TEST(Baselines, MetaSingleUser) {
    EXPECT_EQ(meta_scheduling(seeded(1, 1, 2)[0]).solver_calls, 1u);
}

TEST(Baselines, WeightDescendingOrder) {
    EXPECT_EQ(weight_descending_order(scalar_instance({1, 1, 1}, {1, 32, 8}, 1.0)).flat(), (std::vector<int>{1, 2, 0}));
    EXPECT_EQ(weight_descending_order(scalar_instance({3, 2, 1}, {4, 4, 4}, 1.0)).flat(), (std::vector<int>{0, 1, 2}));
    for (const auto& inst : seeded(8, 20, 10)) EXPECT_TRUE(weight_descending_order(inst).is_valid(inst));
}

TEST(Baselines, ChannelDescendingOrder) {
    EXPECT_EQ(channel_descending_order(scalar_instance({1, 32, 8}, {1, 1, 1}, 1.0)).flat(), (std::vector<int>{1, 2, 0}));
    EXPECT_EQ(channel_descending_order(scalar_instance({2, 2, 2}, {1, 8, 4}, 1.0)).flat(), (std::vector<int>{0, 1, 2}));
    for (const auto& inst : seeded(8, 20, 11)) EXPECT_TRUE(channel_descending_order(inst).is_valid(inst));
}

TEST(Baselines, ChannelDescendingUsesAntennaNorm) {
    GenerationConfig cfg;
    cfg.users = 4;
    cfg.scenario = MultiAntenna{2, EqualizerKind::zf};
    const auto inst = generate_instance(3, 0, cfg);
    std::vector<int> want{0, 1, 2, 3};
    std::stable_sort(want.begin(), want.end(), [&](int a, int b) {
        return std::get<AntennaChannel>(inst.users[static_cast<std::size_t>(a)].channel).h.squaredNorm() >
               std::get<AntennaChannel>(inst.users[static_cast<std::size_t>(b)].channel).h.squaredNorm();
    });
    EXPECT_EQ(channel_descending_order(inst).flat(), want);
}

TEST(Baselines, SerialAndParallelAgree) {
    for (const auto& inst : seeded(6, 3, 12)) {
        BaselineOptions ser, par;
        ser.exec = Exec::serial;
        par.exec = Exec::openmp;
        for (const char* algo : {"exhaustive", "tabu", "meta"}) {
            const auto a = run_baseline(algo, inst, ser);
            const auto b = run_baseline(algo, inst, par);
            EXPECT_EQ(a.ordering, b.ordering) << algo;
            EXPECT_EQ(a.utility, b.utility) << algo;
            EXPECT_EQ(a.solver_calls, b.solver_calls) << algo;
        }
    }
}

TEST(Baselines, MultiBsExhaustiveCoversPerStationOrders) {
    GenerationConfig cfg;
    cfg.users = 5;
    cfg.scenario = MultiBs{2};
    cfg.bs_split = {2, 3};
    const auto inst = generate_instance(13, 0, cfg);
    const auto r = exhaustive(inst);
    EXPECT_EQ(r.solver_calls, 2u * 6u);
    EXPECT_TRUE(r.ordering.is_valid(inst));
    for (const char* algo : {"tabu", "meta", "wdesc", "cdesc"}) {
        const auto b = run_baseline(algo, inst);
        EXPECT_TRUE(b.ordering.is_valid(inst)) << algo;
        EXPECT_GE(r.utility, b.utility - 1e-9) << algo;
    }
}

TEST(Baselines, RestrictKeepsSelectedUsers) {
    const auto inst = seeded(5, 1, 14)[0];
    const auto sub = restrict_instance(inst, {3, 1});
    ASSERT_EQ(sub.size(), 2u);
    EXPECT_EQ(sub.users[0].weight, inst.users[3].weight);
    EXPECT_EQ(effective_gain(sub.users[1]), effective_gain(inst.users[1]));
    EXPECT_EQ(sub.noise, inst.noise);
}

TEST(Baselines, ResultMatchesReportedOrdering) {
    for (const auto& inst : seeded(5, 3, 15))
        for (const char* algo : {"exhaustive", "tabu", "meta", "wdesc", "cdesc"}) {
            const auto r = run_baseline(algo, inst);
            EXPECT_NEAR(r.utility, utility(inst, r.ordering, r.p), 1e-6) << algo;
        }
}

TEST(Baselines, NameDispatch) {
    EXPECT_TRUE(is_baseline_name("tabu"));
    EXPECT_FALSE(is_baseline_name("asopa"));
    EXPECT_THROW(run_baseline("genetic", seeded(3, 1, 1)[0]), ConfigError);
}
