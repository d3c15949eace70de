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

namespace noma {

/// M_r x N channel matrix; column n is user n's antenna vector.
Eigen::MatrixXcd channel_matrix(const NetworkInstance& inst);

/// Left pseudo-inverse (H^H H)^{-1} H^H, N x M_r, so that V H = I.
/// A rank-deficient H (including N > M_r) is a DomainError.
Eigen::MatrixXcd zf_equalizer(const Eigen::MatrixXcd& H);

/// V = P H^H (H P H^H + noise I)^{-1}, P = diag(p).
Eigen::MatrixXcd mmse_equalizer(const Eigen::MatrixXcd& H, std::span<const double> p, double noise);

/// One MMSE row in the SIC-aware form p_n h_n^H (sum_{m in active} p_m h_m h_m^H + noise I)^{-1},
/// `active` being the users not yet cancelled when n is decoded (n included).
/// With every user active it equals row n of mmse_equalizer.
Eigen::RowVectorXcd mmse_row(const Eigen::MatrixXcd& H, std::span<const double> p, double noise, int n,
                             std::span<const int> active);

}  // namespace noma
