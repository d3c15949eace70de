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

namespace noma {

/// Generalized Marcum Q-function of order 1:
///   Q1(a, b) = integral_b^inf x exp(-(x^2 + a^2) / 2) I0(a x) dx.
/// Evaluated through the Poisson-mixture identity Q1(a, b) = P(J <= K) with
/// K ~ Poisson(a^2/2), J ~ Poisson(b^2/2), summed outward from the mode of K.
/// Q1(a, 0) = 1 and Q1(0, b) = exp(-b^2 / 2). Negative arguments are a DomainError.
double marcum_q1(double a, double b);

/// CDF of a noncentral chi-square variable with 2 degrees of freedom and
/// noncentrality lambda: 1 - Q1(sqrt(lambda), sqrt(x)).
double noncentral_chi2_cdf(double x, double lambda);

/// Inverse of noncentral_chi2_cdf in x, by bracketed bisection to an
/// absolute tolerance of 1e-10 relative to the bracket scale.
double noncentral_chi2_inv(double prob, double lambda);

/// F^{-1}(q) of |a|^2 where a ~ CN(a_hat, error_var):
/// (error_var / 2) * chi2inv(q; 2 dof, 2 |a_hat|^2 / error_var).
/// error_var must be positive.
double fading_quantile(double est_fading, double error_var, double q);

}  // namespace noma
