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

#include <span>
#include <vector>

namespace noma {

/// phi_n = p_n g_n / (sum over later-decoded users of p g + N0). Single BS;
/// scalar or estimated channels (an estimate contributes est_fading * path_loss).
std::vector<double> sinr(const NetworkInstance& inst, const SicOrdering& ord, std::span<const double> p);

/// Intra-cell interference from later-decoded users of the same BS plus
/// every user of every other BS, never cancelled, plus N0.
std::vector<double> sinr_multi_bs(const NetworkInstance& inst, const SicOrdering& ord, std::span<const double> p);

/// F^{-1}(outage / 2) of |a_n|^2 for every user (imperfect CSI).
std::vector<double> outage_quantiles(const NetworkInstance& inst, double outage);

/// True when every user of an imperfect-CSI instance has zero estimation
/// error; such instances are evaluated as perfect CSI.
bool exact_estimates(const NetworkInstance& inst);

/// Outage-transformed SINR
///   eps F^{-1}(eps/2) p_n gbar_n / (eps N0 + 2 sum_{later} p_m (|a_hat_n|^2 + s2) gbar_m).
/// `quantiles` may be passed to skip recomputing F^{-1}.
std::vector<double> transformed_sinr_imperfect(const NetworkInstance& inst, const SicOrdering& ord,
                                               std::span<const double> p, double outage,
                                               std::span<const double> quantiles = {});

/// log2(1 + |v_n h_n|^2 p_n / (sum_{later} |v_n h_m|^2 p_m + ||v_n||^2 N0)), in bit/s/Hz.
std::vector<double> rate_multi_antenna(const NetworkInstance& inst, const SicOrdering& ord, std::span<const double> p,
                                       const Eigen::MatrixXcd& V);

/// Equalizer the scenario uses at power p (ZF ignores p).
Eigen::MatrixXcd scenario_equalizer(const NetworkInstance& inst, std::span<const double> p);

/// Per-user SINR under the instance's own scenario.
std::vector<double> scenario_sinr(const NetworkInstance& inst, const SicOrdering& ord, std::span<const double> p);

/// Per-user rates in bit/s: B log2(1 + phi_n), times (1 - eps) for imperfect CSI.
std::vector<double> rates(const NetworkInstance& inst, const SicOrdering& ord, std::span<const double> p);

/// sum_n w_n ln R_n with R_n in bit/s.
double utility(const NetworkInstance& inst, const SicOrdering& ord, std::span<const double> p);

/// Copy of an imperfect-CSI instance with every estimate replaced by the
/// scalar gain est_fading * path_loss, tagged perfect.
NetworkInstance as_perfect_csi(const NetworkInstance& inst);

}  // namespace noma
