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

// Finite-difference check of d ln z(pi | X) / d theta for every parameter
// group of the policy. Shared by the unit tests and the acceptance gate.

#include "noma/policy.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace noma::testing {

struct GroupError {
    std::string name;
    double rel;  // ||analytic - fd|| / max(||analytic||, ||fd||) over checked entries
    std::size_t checked;
    double norm;  // max(||analytic||, ||fd||); a shift absorbed by batch norm has zero gradient

    bool ok(double rel_tol, double zero_tol = 1e-7) const { return rel <= rel_tol || norm <= zero_tol; }
};

/// Checks up to `per_group` entries of each parameter tensor, spread evenly
/// across it, with central differences of step h.
inline std::vector<GroupError> policy_gradient_errors(PolicyModel model, const NetworkInstance& inst,
                                                      const std::vector<int>& sequence, bool training,
                                                      std::size_t per_group = 64, double h = 1e-5) {
    auto value = [&]() {
        ad::Tape tape;
        const BoundPolicy bp = bind_policy(tape, model, false);
        return sequence_log_likelihood(tape, bp, inst, sequence, training).scalar();
    };

    ad::Tape tape;
    const BoundPolicy bp = bind_policy(tape, model, true);
    tape.backward(sequence_log_likelihood(tape, bp, inst, sequence, training));

    std::vector<GroupError> out;
    for (std::size_t g = 0; g < model.params.size(); ++g) {
        const ad::Matrix analytic = bp.vars[g].grad();
        ad::Matrix& w = model.params[g].value;
        const auto total = static_cast<std::size_t>(w.size());
        const std::size_t count = std::min(per_group, total);
        double diff2 = 0.0, a2 = 0.0, f2 = 0.0;
        for (std::size_t k = 0; k < count; ++k) {
            const std::size_t i = k * total / count;
            double& x = w.data()[i];
            const double x0 = x;
            x = x0 + h;
            const double up = value();
            x = x0 - h;
            const double down = value();
            x = x0;
            const double fd = (up - down) / (2 * h);
            const double a = analytic.data()[i];
            diff2 += (a - fd) * (a - fd);
            a2 += a * a;
            f2 += fd * fd;
        }
        const double scale = std::sqrt(std::max({a2, f2, 1e-300}));
        out.push_back({model.params[g].name, std::sqrt(diff2) / scale, count, scale});
    }
    return out;
}

}  // namespace noma::testing
