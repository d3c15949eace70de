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

#include "noma/instance.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace noma {

/// Power allocation under a fixed decode order, in the log-power variables
/// y_n = ln p_n. Every scenario reduces to
///   maximize  sum_n w_n ln log2(1 + phi_n(y)) + offset
///   s.t.      y_n <= ln Pmax_n,
///   phi_n(y) = a_n e^{y_n} / (sum_m C_nm e^{y_m} + s_n),
/// stored in logs: log_signal = ln a_n, log_noise = ln s_n and
/// log_coupling(n, m) = ln C_nm (-inf where m does not interfere with n).
struct PowerProblem {
    Eigen::VectorXd weight;
    Eigen::VectorXd log_pmax;
    Eigen::VectorXd log_signal;
    Eigen::VectorXd log_noise;
    Eigen::MatrixXd log_coupling;
    double offset = 0.0;

    Eigen::Index size() const { return weight.size(); }
    void validate() const;

    /// ln phi_n(y).
    Eigen::VectorXd log_sinr(const Eigen::VectorXd& y) const;
    /// sum_n w_n ln log2(1 + phi_n(y)) + offset.
    double objective(const Eigen::VectorXd& y) const;
};

/// Scalar perfect CSI (single BS).
PowerProblem perfect_problem(const NetworkInstance& inst, const SicOrdering& ord);
/// Outage-transformed imperfect CSI; offset includes sum w ln(1 - eps).
PowerProblem imperfect_problem(const NetworkInstance& inst, const SicOrdering& ord,
                               const std::vector<double>& quantiles);
/// Multi-antenna with a fixed N x M_r equalizer V.
PowerProblem antenna_problem(const NetworkInstance& inst, const SicOrdering& ord, const Eigen::MatrixXcd& V);
/// Multi-BS with inter-cell interference.
PowerProblem multi_bs_problem(const NetworkInstance& inst, const SicOrdering& ord);

/// h(s) = ln(2^{e^s} - 1) and its first two derivatives, evaluated stably.
struct RateBarrier {
    double value;
    double d1;
    double d2;
};
RateBarrier rate_term(double s);

enum class SolverStatus { optimal, max_iter, infeasible };
std::string to_string(SolverStatus s);

struct SolverOptions {
    double tolerance = 1e-8;
    int max_iterations = 200;
    /// Retry with the barrier Newton method when the interior-point method
    /// fails to converge or hits a singular system.
    bool fallback = true;
};

struct SolverReport {
    std::vector<double> p;       // W
    double objective = 0.0;      // utility at p, nats
    int iterations = 0;
    double kkt_residual = 0.0;
    SolverStatus status = SolverStatus::max_iter;
    std::string method;
    /// Final residual vector (stationarity, then complementarity) for --dump-kkt.
    std::vector<double> kkt;
    /// MMSE alternation only.
    int alternations = 0;
    double fixed_point_residual = 0.0;
};

std::string to_json_string(const SolverReport& r, bool with_kkt = false);

/// Primal-dual interior-point method on the convex reformulation in (y, nu),
/// with the barrier Newton method as fallback.
SolverReport solve_power(const PowerProblem& prob, const SolverOptions& opt = {});
SolverReport solve_power_ipm(const PowerProblem& prob, const SolverOptions& opt = {});
/// Log-barrier method with damped Newton steps on the reduced problem in y.
SolverReport solve_power_barrier(const PowerProblem& prob, const SolverOptions& opt = {});

SolverReport solve_p1(const NetworkInstance& inst, const SicOrdering& ord, const SolverOptions& opt = {});
SolverReport solve_p1_imperfect(const NetworkInstance& inst, const SicOrdering& ord, double outage,
                                const SolverOptions& opt = {});
struct AlternationOptions {
    double tolerance = 1e-4;  // max-norm change of p in W, and relative to p
    int max_rounds = 50;
};
SolverReport solve_multi_antenna(const NetworkInstance& inst, const SicOrdering& ord, EqualizerKind kind,
                                 const SolverOptions& opt = {}, const AlternationOptions& alt = {});
SolverReport solve_multi_bs(const NetworkInstance& inst, const SicOrdering& ord, const SolverOptions& opt = {});

/// Dispatches on the instance scenario. This is the power-allocation oracle
/// the ordering algorithms and the trainer call.
SolverReport solve_allocation(const NetworkInstance& inst, const SicOrdering& ord, const SolverOptions& opt = {});

}  // namespace noma
