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

#include <string>
#include <variant>

namespace noma {

Eigen::MatrixXcd channel_matrix(const NetworkInstance& inst) {
    const auto* ma = std::get_if<MultiAntenna>(&inst.scenario);
    if (ma == nullptr) throw ConfigError("channel_matrix needs the multi-antenna scenario");
    Eigen::MatrixXcd H(ma->antennas, static_cast<Eigen::Index>(inst.size()));
    for (std::size_t n = 0; n < inst.size(); ++n) {
        const auto* c = std::get_if<AntennaChannel>(&inst.users[n].channel);
        if (c == nullptr || c->h.size() != ma->antennas)
            throw ShapeError("user " + std::to_string(n) + " lacks a matching antenna vector");
        H.col(static_cast<Eigen::Index>(n)) = c->h;
    }
    return H;
}

Eigen::MatrixXcd zf_equalizer(const Eigen::MatrixXcd& H) {
    if (H.cols() == 0 || H.rows() == 0) throw ShapeError("zf_equalizer of an empty matrix");
    if (H.cols() > H.rows())
        throw DomainError("zero forcing needs at most as many users as receive antennas");
    Eigen::ColPivHouseholderQR<Eigen::MatrixXcd> qr(H);
    qr.setThreshold(1e-12);
    if (qr.rank() < H.cols()) throw DomainError("channel matrix is rank deficient; zero forcing undefined");
    const Eigen::MatrixXcd gram = H.adjoint() * H;
    return gram.ldlt().solve(H.adjoint());
}

Eigen::MatrixXcd mmse_equalizer(const Eigen::MatrixXcd& H, std::span<const double> p, double noise) {
    if (static_cast<Eigen::Index>(p.size()) != H.cols()) throw ShapeError("mmse_equalizer: power length != users");
    if (!(noise > 0.0)) throw DomainError("mmse_equalizer needs positive noise power");
    Eigen::VectorXcd pv(H.cols());
    for (Eigen::Index n = 0; n < H.cols(); ++n) {
        if (!(p[static_cast<std::size_t>(n)] >= 0.0)) throw DomainError("mmse_equalizer: negative power");
        pv(n) = p[static_cast<std::size_t>(n)];
    }
    const Eigen::MatrixXcd ph = pv.asDiagonal() * H.adjoint();
    if (H.cols() <= H.rows()) {
        // Push-through form (P H^H H + s I)^{-1} P H^H: N x N and well
        // conditioned for full column rank, where the M_r x M_r covariance
        // is nearly singular at low noise.
        Eigen::MatrixXcd a = ph * H;
        a.diagonal().array() += noise;
        return a.partialPivLu().solve(ph);
    }
    Eigen::MatrixXcd cov = H * ph;
    cov.diagonal().array() += noise;
    // V = P H^H cov^{-1}; cov is Hermitian positive definite, so solve cov X = H P and take X^H.
    return cov.llt().solve(ph.adjoint()).adjoint();
}

Eigen::RowVectorXcd mmse_row(const Eigen::MatrixXcd& H, std::span<const double> p, double noise, int n,
                             std::span<const int> active) {
    if (static_cast<Eigen::Index>(p.size()) != H.cols()) throw ShapeError("mmse_row: power length != users");
    if (n < 0 || n >= H.cols()) throw DomainError("mmse_row: user index out of range");
    Eigen::MatrixXcd cov = Eigen::MatrixXcd::Identity(H.rows(), H.rows()) * noise;
    for (int m : active) {
        if (m < 0 || m >= H.cols()) throw DomainError("mmse_row: active index out of range");
        cov += p[static_cast<std::size_t>(m)] * H.col(m) * H.col(m).adjoint();
    }
    const Eigen::VectorXcd x = cov.llt().solve(H.col(n));
    return p[static_cast<std::size_t>(n)] * x.adjoint();
}

}  // namespace noma
