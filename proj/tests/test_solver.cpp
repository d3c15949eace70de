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

#include "noma/equalizer.hpp"
#include "noma/errors.hpp"
#include "noma/model.hpp"
#include "noma/power_solver.hpp"
#include "noma/rng.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>
#include <json.hpp>

#include <algorithm>
#include <cmath>

using namespace noma;
using noma::testing::grid_oracle;

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

NetworkInstance antenna_instance(const Eigen::MatrixXcd& h, EqualizerKind kind, double noise) {
    NetworkInstance inst;
    inst.noise = noise;
    inst.scenario = MultiAntenna{static_cast<int>(h.rows()), kind};
    for (Eigen::Index n = 0; n < h.cols(); ++n) {
        UserState u;
        u.weight = 1.0 + static_cast<double>(n);
        u.channel = AntennaChannel{h.col(n)};
        inst.users.push_back(u);
    }
    return inst;
}

double rel_gap(double a, double b) { return std::abs(a - b) / std::abs(b); }

}  // namespace

TEST(Solver, TwoUserExampleMatchesGrid) {
    const auto inst = scalar_instance({4, 2}, {1, 1}, 1.0);
    const SicOrdering ord(std::vector<int>{0, 1});
    const auto r = solve_p1(inst, ord);
    EXPECT_EQ(r.status, SolverStatus::optimal);
    const auto g = grid_oracle(inst, ord, 400);
    EXPECT_LE(rel_gap(r.objective, g.utility), 1e-3);
    EXPECT_GE(r.objective, g.utility - 1e-9 * std::abs(g.utility));
}

TEST(Solver, SingleUserTakesFullPower) {
    const auto inst = scalar_instance({3e-12}, {4}, 4e-15);
    const auto r = solve_p1(inst, SicOrdering::identity(inst));
    ASSERT_EQ(r.p.size(), 1u);
    EXPECT_NEAR(r.p[0], 1.0, 1e-6);
}

TEST(Solver, GridOracleOnSeededSmallInstances) {
    for (std::size_t users : {2u, 3u}) {
        GenerationConfig cfg;
        cfg.users = users;
        for (int i = 0; i < 15; ++i) {
            const auto inst = generate_instance(40 + users, static_cast<std::uint64_t>(i), cfg);
            std::vector<int> order(users);
            for (std::size_t k = 0; k < users; ++k) order[k] = static_cast<int>((k + static_cast<std::size_t>(i)) % users);
            const SicOrdering ord(order);
            const auto r = solve_p1(inst, ord);
            const auto g = grid_oracle(inst, ord, users == 2 ? 400 : 60, 10.0);
            EXPECT_LE(rel_gap(r.objective, g.utility), 1e-3) << "N=" << users << " i=" << i;
        }
    }
}

TEST(Solver, ObjectiveEqualsReevaluatedUtility) {
    GenerationConfig cfg;
    cfg.users = 8;
    for (int i = 0; i < 10; ++i) {
        const auto inst = generate_instance(7, static_cast<std::uint64_t>(i), cfg);
        const auto ord = SicOrdering::identity(inst);
        const auto r = solve_p1(inst, ord);
        EXPECT_NEAR(r.objective, utility(inst, ord, r.p), 1e-6);
        if (r.status == SolverStatus::optimal) {
            EXPECT_LE(r.kkt_residual, SolverOptions{}.tolerance);
        }
        for (std::size_t n = 0; n < r.p.size(); ++n) {
            EXPECT_GT(r.p[n], 0.0);
            EXPECT_LE(r.p[n], inst.users[n].p_max * (1.0 + 1e-12));
        }
    }
}

TEST(Solver, NoImprovingCoordinatePerturbation) {
    GenerationConfig cfg;
    cfg.users = 6;
    for (int i = 0; i < 10; ++i) {
        const auto inst = generate_instance(3, static_cast<std::uint64_t>(i), cfg);
        const SicOrdering ord(std::vector<int>{5, 4, 3, 2, 1, 0});
        const auto r = solve_p1(inst, ord);
        ASSERT_EQ(r.status, SolverStatus::optimal);
        const double base = utility(inst, ord, r.p);
        for (std::size_t n = 0; n < r.p.size(); ++n)
            for (double d : {1e-4, -1e-4}) {
                auto q = r.p;
                q[n] = std::clamp(q[n] + d, 1e-300, inst.users[n].p_max);
                EXPECT_LE(utility(inst, ord, q), base + 1e-6) << "i=" << i << " n=" << n << " d=" << d;
            }
    }
}

TEST(Solver, InvariantToCommonGainScaling) {
    GenerationConfig cfg;
    cfg.users = 5;
    const auto inst = generate_instance(12, 0, cfg);
    auto scaled = inst;
    scaled.noise *= 1e3;
    for (auto& u : scaled.users) std::get<ScalarChannel>(u.channel).gain *= 1e3;
    const auto ord = SicOrdering(std::vector<int>{2, 0, 4, 1, 3});
    const auto a = solve_p1(inst, ord);
    const auto b = solve_p1(scaled, ord);
    for (std::size_t n = 0; n < a.p.size(); ++n) EXPECT_NEAR(a.p[n], b.p[n], 1e-6);
}

TEST(Solver, InteriorPointAndBarrierAgree) {
    GenerationConfig cfg;
    cfg.users = 6;
    for (int i = 0; i < 10; ++i) {
        const auto inst = generate_instance(21, static_cast<std::uint64_t>(i), cfg);
        const auto prob = perfect_problem(inst, SicOrdering::identity(inst));
        const auto a = solve_power_ipm(prob);
        const auto b = solve_power_barrier(prob);
        EXPECT_EQ(a.method, "interior-point");
        EXPECT_NEAR(a.objective, b.objective, 1e-6) << i;
    }
}

TEST(Solver, RateTermDerivatives) {
    for (double s : {-8.0, -2.0, -0.3, 0.0, 0.7, 2.0, 4.0}) {
        const auto r = rate_term(s);
        EXPECT_NEAR(r.value, std::log(std::pow(2.0, std::exp(s)) - 1.0), 1e-10 * std::max(1.0, std::abs(r.value)));
        const double h = 1e-5;
        const double d1 = (rate_term(s + h).value - rate_term(s - h).value) / (2 * h);
        const double d2 = (rate_term(s + h).d1 - rate_term(s - h).d1) / (2 * h);
        EXPECT_NEAR(r.d1, d1, 1e-6 * std::max(1.0, std::abs(d1))) << s;
        EXPECT_NEAR(r.d2, d2, 1e-6 * std::max(1.0, std::abs(d2))) << s;
        EXPECT_GE(r.d2, 0.0);
    }
}

TEST(Solver, ConvexityWitnesses) {
    Philox rng(99);
    for (int t = 0; t < 200; ++t) {
        const int dim = 2 + static_cast<int>(rng.below(6));
        Eigen::VectorXd z(dim);
        for (int k = 0; k < dim; ++k) z(k) = 20.0 * rng.normal();
        const Eigen::MatrixXd hess = noma::testing::lse_hessian(z);
        EXPECT_GE(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(hess).eigenvalues().minCoeff(), -1e-9);

        const double nu = 30.0 * rng.uniform() + 1e-6;
        const double w = std::vector<double>{1, 2, 4, 8, 16, 32}[rng.below(6)];
        const auto c = noma::testing::rate_curvature(nu, w);
        EXPECT_GE(c.bracket, std::log(std::exp(1.0) / 2.0) - 1e-9);
        EXPECT_GE(c.second_derivative, 0.0);
    }
    // The analytic pieces are the curvature of the functions they describe.
    Eigen::VectorXd z(3);
    z << 0.3, -1.2, 0.8;
    const double h = 1e-4;
    const Eigen::MatrixXd hess = noma::testing::lse_hessian(z);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            Eigen::VectorXd a = z, b = z, c = z, d = z;
            a(i) += h, a(j) += h;
            b(i) += h, b(j) -= h;
            c(i) -= h, c(j) += h;
            d(i) -= h, d(j) -= h;
            using noma::testing::lse;
            EXPECT_NEAR(hess(i, j), (lse(a) - lse(b) - lse(c) + lse(d)) / (4 * h * h), 1e-5);
        }
    for (double nu : {0.5, 3.0, 9.0}) {
        using noma::testing::rate_constraint_term;
        const double fd = (rate_constraint_term(nu + h, 4.0) - 2 * rate_constraint_term(nu, 4.0) +
                           rate_constraint_term(nu - h, 4.0)) / (h * h);
        EXPECT_NEAR(noma::testing::rate_curvature(nu, 4.0).second_derivative, fd, 1e-5);
    }
    // At nu = 0 the bracket attains ln(e/2).
    EXPECT_NEAR(noma::testing::rate_curvature(0.0, 1.0).bracket, 1.0 - std::log(2.0), 1e-15);
}

TEST(SolverImperfect, SmallErrorLimitOfTransformedSinr) {
    // As the error variance vanishes the quantile collapses onto |a_hat|^2,
    // leaving eps a p g / (eps N0 + 2 a sum p' g'). The Markov step keeps
    // the 2/eps interference inflation, so this is not the perfect-CSI SINR.
    GenerationConfig cfg;
    cfg.users = 4;
    cfg.scenario = ImperfectCsi{0.1};
    cfg.error_var = 1e-8;
    const auto inst = generate_instance(31, 0, cfg);
    const SicOrdering ord(std::vector<int>{2, 0, 3, 1});
    const std::vector<double> p{0.3, 0.9, 0.5, 0.7};
    const auto phi = transformed_sinr_imperfect(inst, ord, p, 0.1);
    const auto& order = ord.per_bs()[0];
    for (std::size_t i = 0; i < order.size(); ++i) {
        const auto n = static_cast<std::size_t>(order[i]);
        const auto& c = std::get<EstimatedChannel>(inst.users[n].channel);
        double interference = 0.0;
        for (std::size_t j = i + 1; j < order.size(); ++j) {
            const auto m = static_cast<std::size_t>(order[j]);
            interference += p[m] * std::get<EstimatedChannel>(inst.users[m].channel).path_loss;
        }
        const double want =
            0.1 * c.est_fading * p[n] * c.path_loss / (0.1 * inst.noise + 2.0 * c.est_fading * interference);
        EXPECT_NEAR(phi[n], want, 1e-3 * want) << n;
    }
}

TEST(SolverImperfect, LargerOutageBudgetDoesNotHurt) {
    GenerationConfig cfg;
    cfg.users = 4;
    cfg.scenario = ImperfectCsi{0.1};
    cfg.error_var = 0.05;
    const auto inst = generate_instance(32, 0, cfg);
    const auto ord = SicOrdering(std::vector<int>{3, 1, 2, 0});
    const double strict = solve_p1_imperfect(inst, ord, 0.01).objective;
    const double loose = solve_p1_imperfect(inst, ord, 0.05).objective;
    EXPECT_LE(strict, loose + 1e-9);
}

TEST(SolverImperfect, TwoUserGridOracle) {
    GenerationConfig cfg;
    cfg.users = 2;
    cfg.scenario = ImperfectCsi{0.1};
    cfg.error_var = 0.02;
    for (int i = 0; i < 5; ++i) {
        const auto inst = generate_instance(33, static_cast<std::uint64_t>(i), cfg);
        const SicOrdering ord(std::vector<int>{1, 0});
        const auto r = solve_p1_imperfect(inst, ord, 0.1);
        EXPECT_NEAR(r.objective, utility(inst, ord, r.p), 1e-6);
        EXPECT_LE(rel_gap(r.objective, grid_oracle(inst, ord, 400).utility), 1e-3) << i;
    }
}

TEST(SolverAntenna, ZeroForcingOnIdentityChannelsUsesFullPower) {
    for (double scale : {1.0, 2.0}) {
        const Eigen::MatrixXcd h = scale * Eigen::MatrixXcd::Identity(2, 2);
        const auto inst = antenna_instance(h, EqualizerKind::zf, 0.1);
        const auto r = solve_multi_antenna(inst, SicOrdering::identity(inst), EqualizerKind::zf);
        for (double p : r.p) EXPECT_NEAR(p, 1.0, 1e-6);
        // Interference-free: each rate is log2(1 + scale^2 / N0).
        const double rate = std::log2(1.0 + scale * scale / 0.1);
        EXPECT_NEAR(r.objective, (1.0 + 2.0) * std::log(1e6 * rate), 1e-6);
    }
}

TEST(SolverAntenna, SingleAntennaMatchesScalarSolve) {
    Philox rng(5);
    Eigen::MatrixXcd h(1, 3);
    for (Eigen::Index n = 0; n < 3; ++n) h(0, n) = {rng.normal(), rng.normal()};
    const auto inst = antenna_instance(h, EqualizerKind::mmse, 0.05);
    std::vector<double> g, w;
    for (const auto& u : inst.users) {
        g.push_back(effective_gain(u));
        w.push_back(u.weight);
    }
    const auto scalar = scalar_instance(g, w, 0.05);
    const SicOrdering ord(std::vector<int>{2, 0, 1});
    const auto a = solve_multi_antenna(inst, ord, EqualizerKind::mmse);
    const auto b = solve_p1(scalar, ord);
    EXPECT_NEAR(a.objective, b.objective, 1e-6);
}

TEST(SolverAntenna, MmseAlternationReachesFixedPoint) {
    GenerationConfig cfg;
    cfg.users = 4;
    cfg.scenario = MultiAntenna{2, EqualizerKind::mmse};
    for (int i = 0; i < 5; ++i) {
        const auto inst = generate_instance(50, static_cast<std::uint64_t>(i), cfg);
        const auto ord = SicOrdering::identity(inst);
        const auto r = solve_multi_antenna(inst, ord, EqualizerKind::mmse);
        EXPECT_GE(r.alternations, 1);
        EXPECT_LT(r.fixed_point_residual, 1e-4) << i;
        // One more round from the returned powers barely moves the objective.
        const auto again = solve_power(antenna_problem(inst, ord, mmse_equalizer(channel_matrix(inst), r.p, inst.noise)));
        EXPECT_LT(std::abs(again.objective - r.objective), 1e-4) << i;
    }
}

TEST(SolverMultiBs, ZeroCrossGainSeparates) {
    NetworkInstance inst;
    inst.noise = 1e-3;
    inst.scenario = MultiBs{2};
    const double gains[2][2] = {{0.8, 0.3}, {0.5, 0.9}};
    for (int b = 0; b < 2; ++b)
        for (int k = 0; k < 2; ++k) {
            UserState u;
            u.bs = b;
            u.weight = 1.0 + 2.0 * b + k;
            u.bs_gains = {0.0, 0.0};
            u.bs_gains[static_cast<std::size_t>(b)] = gains[b][k];
            u.channel = ScalarChannel{gains[b][k]};
            inst.users.push_back(u);
        }
    const SicOrdering ord(std::vector<std::vector<int>>{{1, 0}, {2, 3}});
    const auto joint = solve_multi_bs(inst, ord);
    const auto a = solve_p1(scalar_instance({0.8, 0.3}, {1, 2}, 1e-3), SicOrdering(std::vector<int>{1, 0}));
    const auto b = solve_p1(scalar_instance({0.5, 0.9}, {3, 4}, 1e-3), SicOrdering(std::vector<int>{0, 1}));
    EXPECT_NEAR(joint.objective, a.objective + b.objective, 1e-6);
}

TEST(SolverMultiBs, TwoByTwoGridOracle) {
    GenerationConfig cfg;
    cfg.users = 4;
    cfg.scenario = MultiBs{2};
    for (int i = 0; i < 3; ++i) {
        const auto inst = generate_instance(60, static_cast<std::uint64_t>(i), cfg);
        const auto ord = SicOrdering::identity(inst);
        const auto r = solve_multi_bs(inst, ord);
        EXPECT_NEAR(r.objective, utility(inst, ord, r.p), 1e-6);
        EXPECT_LE(rel_gap(r.objective, grid_oracle(inst, ord, 25, 10.0).utility), 2e-3) << i;
    }
}

TEST(SolverMultiBs, StrongerCrossGainNeverHelps) {
    GenerationConfig cfg;
    cfg.users = 4;
    cfg.scenario = MultiBs{2};
    const auto inst = generate_instance(61, 0, cfg);
    auto worse = inst;
    for (auto& u : worse.users)
        for (std::size_t b = 0; b < u.bs_gains.size(); ++b)
            if (static_cast<int>(b) != u.bs) u.bs_gains[b] *= 10.0;
    const auto ord = SicOrdering::identity(inst);
    EXPECT_LE(solve_multi_bs(worse, ord).objective, solve_multi_bs(inst, ord).objective + 1e-9);
}

TEST(Solver, DispatchMatchesScenarioSolvers) {
    GenerationConfig cfg;
    cfg.users = 3;
    const auto inst = generate_instance(70, 0, cfg);
    const auto ord = SicOrdering::identity(inst);
    EXPECT_NEAR(solve_allocation(inst, ord).objective, solve_p1(inst, ord).objective, 1e-12);
    cfg.scenario = ImperfectCsi{0.2};
    const auto imp = generate_instance(70, 0, cfg);
    EXPECT_NEAR(solve_allocation(imp, ord).objective, solve_p1_imperfect(imp, ord, 0.2).objective, 1e-12);
}

TEST(Solver, ReportJson) {
    const auto inst = scalar_instance({4, 2}, {1, 1}, 1.0);
    const auto r = solve_p1(inst, SicOrdering::identity(inst));
    const auto j = nlohmann::json::parse(to_json_string(r, true));
    EXPECT_EQ(j.at("status"), "optimal");
    EXPECT_EQ(j.at("p_w").size(), 2u);
    EXPECT_DOUBLE_EQ(j.at("objective").get<double>(), r.objective);
    EXPECT_FALSE(j.at("kkt").empty());
    EXPECT_FALSE(nlohmann::json::parse(to_json_string(r)).contains("kkt"));
}

TEST(Solver, InvalidInputs) {
    const auto inst = scalar_instance({4, 2}, {1, 1}, 1.0);
    EXPECT_THROW(solve_p1(inst, SicOrdering(std::vector<int>{0})), DomainError);
    EXPECT_THROW(solve_p1_imperfect(inst, SicOrdering::identity(inst), 0.1), ConfigError);
}
