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

#include "noma/marcum.hpp"

#include "noma/errors.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <string>

namespace noma {

namespace {

struct Tail {
    double q;    // Q1(a, b)
    double cdf;  // 1 - Q1(a, b)
};

double log_poisson(double k, double mean) { return k * std::log(mean) - mean - std::lgamma(k + 1.0); }

// Q1(a,b) = sum_k P(K=k) P(J<=k) and 1-Q1 = sum_k P(K=k) P(J>k), K ~ Poi(mu),
// J ~ Poi(nu). Each sum is accumulated in the direction where the inner
// Poisson CDF is built from additions only.
Tail marcum_tail(double a, double b) {
    if (!(a >= 0.0) || !(b >= 0.0) || !std::isfinite(a) || !std::isfinite(b))
        throw DomainError("marcum_q1 needs finite non-negative arguments");
    if (b == 0.0) return {1.0, 0.0};
    const double mu = 0.5 * a * a;
    const double nu = 0.5 * b * b;
    if (mu == 0.0) {
        const double cdf = -std::expm1(-nu);
        return {std::exp(-nu), cdf};
    }

    const double width = std::ceil(12.0 * std::sqrt(mu) + 30.0);
    const double mode = std::floor(mu);
    const double kmin = std::max(0.0, mode - width);
    const double kmax = mode + width;

    // Upward pass for Q: F(k) = P(J <= k) grows by P(J = k + 1).
    double q = 0.0;
    {
        double pk = std::exp(log_poisson(kmin, mu));
        double pj = std::exp(log_poisson(kmin, nu));
        double fj = boost::math::gamma_q(kmin + 1.0, nu);
        for (double k = kmin; k <= kmax; k += 1.0) {
            q += pk * fj;
            pk *= mu / (k + 1.0);
            pj *= nu / (k + 1.0);
            // Denormals carry too few bits to be scaled back up; recompute.
            if (pj < 1e-280) pj = std::exp(log_poisson(k + 1.0, nu));
            fj += pj;
            if (fj > 1.0) fj = 1.0;
        }
    }
    // Downward pass for 1 - Q: G(k) = P(J > k) grows by P(J = k) going down.
    double cdf = 0.0;
    {
        double pk = std::exp(log_poisson(kmax, mu));
        double pj = std::exp(log_poisson(kmax + 1.0, nu));
        double gj = boost::math::gamma_p(kmax + 1.0, nu);
        for (double k = kmax;; k -= 1.0) {
            cdf += pk * gj;
            if (k <= kmin) break;
            pk *= k / mu;
            pj *= (k + 1.0) / nu;  // now P(J = k)
            if (pj < 1e-280) pj = std::exp(log_poisson(k, nu));
            gj += pj;
            if (gj > 1.0) gj = 1.0;
        }
    }
    // Mass of K outside [kmin, kmax] is below 1e-30; renormalise the two
    // halves against each other to absorb it.
    const double total = q + cdf;
    return {std::clamp(q / total, 0.0, 1.0), std::clamp(cdf / total, 0.0, 1.0)};
}

}  // namespace

double marcum_q1(double a, double b) { return marcum_tail(a, b).q; }

double noncentral_chi2_cdf(double x, double lambda) {
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw DomainError("noncentrality must be finite and >= 0");
    if (std::isnan(x)) throw DomainError("noncentral_chi2_cdf of NaN");
    if (x <= 0.0) return 0.0;
    if (std::isinf(x)) return 1.0;
    return marcum_tail(std::sqrt(lambda), std::sqrt(x)).cdf;
}

double noncentral_chi2_inv(double prob, double lambda) {
    if (!(prob > 0.0 && prob < 1.0)) throw DomainError("chi-square quantile needs prob in (0, 1)");
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw DomainError("noncentrality must be finite and >= 0");
    const double mean = 2.0 + lambda;
    const double sd = std::sqrt(4.0 + 4.0 * lambda);
    double lo = 0.0;
    double hi = mean + 8.0 * sd;
    for (int i = 0; noncentral_chi2_cdf(hi, lambda) < prob; ++i) {
        if (i > 200) throw NumericalError("chi-square quantile bracket did not close");
        lo = hi;
        hi *= 2.0;
    }
    if (lambda > 64.0) {
        // Tighten the lower end; saves most bisection steps for large lambda.
        const double guess = std::max(0.0, mean - 12.0 * sd);
        if (guess > lo && noncentral_chi2_cdf(guess, lambda) < prob) lo = guess;
    }
    for (int i = 0; i < 300 && hi - lo > 1e-10 * std::max(1e-10, hi); ++i) {
        const double mid = 0.5 * (lo + hi);
        if (noncentral_chi2_cdf(mid, lambda) < prob) lo = mid;
        else hi = mid;
    }
    return 0.5 * (lo + hi);
}

double fading_quantile(double est_fading, double error_var, double q) {
    if (!(error_var > 0.0)) throw DomainError("fading_quantile needs a positive error variance");
    if (!(est_fading >= 0.0)) throw DomainError("fading estimate must be non-negative");
    return 0.5 * error_var * noncentral_chi2_inv(q, 2.0 * est_fading / error_var);
}

}  // namespace noma
