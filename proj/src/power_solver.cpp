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

#include "noma/power_solver.hpp"

#include "noma/equalizer.hpp"
#include "noma/errors.hpp"
#include "noma/model.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <variant>

namespace noma {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kLn2 = std::numbers::ln2;

// ln(1 + e^x) without overflow.
double softplus(double x) { return x > 30.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

// Log-sum-exp over the finite couplings of row n plus the noise term, and
// the softmax weights of the coupling terms (the noise weight is implied).
double coupling_lse(const PowerProblem& pb, Eigen::Index n, const Eigen::VectorXd& y, Eigen::VectorXd* zeta) {
    const Eigen::Index N = pb.size();
    double peak = pb.log_noise(n);
    for (Eigen::Index m = 0; m < N; ++m)
        if (pb.log_coupling(n, m) != kNegInf) peak = std::max(peak, pb.log_coupling(n, m) + y(m));
    double total = std::exp(pb.log_noise(n) - peak);
    if (zeta) zeta->setZero(N);
    for (Eigen::Index m = 0; m < N; ++m) {
        if (pb.log_coupling(n, m) == kNegInf) continue;
        const double e = std::exp(pb.log_coupling(n, m) + y(m) - peak);
        total += e;
        if (zeta) (*zeta)(m) = e;
    }
    if (zeta) *zeta /= total;
    return peak + std::log(total);
}

Eigen::VectorXd log_vec(const std::vector<double>& v) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) out(static_cast<Eigen::Index>(i)) = std::log(v[i]);
    return out;
}

PowerProblem base_problem(const NetworkInstance& inst) {
    const auto N = static_cast<Eigen::Index>(inst.size());
    PowerProblem pb;
    pb.weight.resize(N);
    pb.log_pmax.resize(N);
    pb.log_signal.resize(N);
    pb.log_noise = Eigen::VectorXd::Constant(N, std::log(inst.noise));
    pb.log_coupling = Eigen::MatrixXd::Constant(N, N, kNegInf);
    double wsum = 0.0;
    for (Eigen::Index n = 0; n < N; ++n) {
        const auto& u = inst.users[static_cast<std::size_t>(n)];
        pb.weight(n) = u.weight;
        pb.log_pmax(n) = std::log(u.p_max);
        wsum += u.weight;
    }
    pb.offset = wsum * std::log(inst.bandwidth);
    return pb;
}

}  // namespace

// ---- problem ---------------------------------------------------------------

void PowerProblem::validate() const {
    const Eigen::Index N = size();
    if (N == 0) throw DomainError("empty power problem");
    if (log_pmax.size() != N || log_signal.size() != N || log_noise.size() != N || log_coupling.rows() != N ||
        log_coupling.cols() != N)
        throw ShapeError("power problem coefficient sizes disagree");
    for (Eigen::Index n = 0; n < N; ++n) {
        if (!(weight(n) > 0.0) || !std::isfinite(weight(n))) throw DomainError("weights must be positive");
        if (!std::isfinite(log_pmax(n)) || !std::isfinite(log_signal(n)) || !std::isfinite(log_noise(n)))
            throw DomainError("power problem has a zero or non-finite gain, cap or noise");
        if (log_coupling(n, n) != kNegInf) throw DomainError("a user cannot interfere with itself");
        for (Eigen::Index m = 0; m < N; ++m)
            if (std::isnan(log_coupling(n, m)) || log_coupling(n, m) == std::numeric_limits<double>::infinity())
                throw DomainError("coupling coefficients must be finite or absent");
    }
}

Eigen::VectorXd PowerProblem::log_sinr(const Eigen::VectorXd& y) const {
    Eigen::VectorXd out(size());
    for (Eigen::Index n = 0; n < size(); ++n) out(n) = log_signal(n) + y(n) - coupling_lse(*this, n, y, nullptr);
    return out;
}

double PowerProblem::objective(const Eigen::VectorXd& y) const {
    const Eigen::VectorXd ls = log_sinr(y);
    double u = offset;
    for (Eigen::Index n = 0; n < size(); ++n) u += weight(n) * std::log(softplus(ls(n)) / kLn2);
    return u;
}

PowerProblem perfect_problem(const NetworkInstance& inst, const SicOrdering& ord) {
    if (inst.station_count() != 1) throw ConfigError("perfect_problem is single-BS");
    ord.validate(inst);
    PowerProblem pb = base_problem(inst);
    std::vector<double> g(inst.size());
    for (std::size_t n = 0; n < inst.size(); ++n) {
        if (std::holds_alternative<AntennaChannel>(inst.users[n].channel))
            throw ConfigError("perfect_problem needs scalar channels");
        g[n] = effective_gain(inst.users[n]);
    }
    pb.log_signal = log_vec(g);
    const auto& order = ord.per_bs()[0];
    for (std::size_t i = 0; i < order.size(); ++i)
        for (std::size_t j = i + 1; j < order.size(); ++j)
            pb.log_coupling(order[i], order[j]) = std::log(g[static_cast<std::size_t>(order[j])]);
    return pb;
}

PowerProblem imperfect_problem(const NetworkInstance& inst, const SicOrdering& ord,
                               const std::vector<double>& quantiles) {
    const auto* ic = std::get_if<ImperfectCsi>(&inst.scenario);
    if (ic == nullptr) throw ConfigError("imperfect_problem needs the imperfect-CSI scenario");
    if (inst.station_count() != 1) throw ConfigError("imperfect-CSI model is single-BS");
    ord.validate(inst);
    if (exact_estimates(inst)) return perfect_problem(as_perfect_csi(inst), ord);
    if (quantiles.size() != inst.size()) throw ShapeError("quantile vector length != user count");
    const double eps = ic->outage;
    PowerProblem pb = base_problem(inst);
    // Divide numerator and denominator by eps: a = F^{-1} gbar_n, s = N0,
    // C = (2 / eps) (|a_hat_n|^2 + s2) gbar_m.
    const auto& order = ord.per_bs()[0];
    for (std::size_t n = 0; n < inst.size(); ++n) {
        const auto& c = std::get<EstimatedChannel>(inst.users[n].channel);
        if (!(quantiles[n] > 0.0)) throw DomainError("outage quantile must be positive");
        pb.log_signal(static_cast<Eigen::Index>(n)) = std::log(quantiles[n] * c.path_loss);
    }
    for (std::size_t i = 0; i < order.size(); ++i) {
        const auto& cn = std::get<EstimatedChannel>(inst.users[static_cast<std::size_t>(order[i])].channel);
        for (std::size_t j = i + 1; j < order.size(); ++j) {
            const auto& cm = std::get<EstimatedChannel>(inst.users[static_cast<std::size_t>(order[j])].channel);
            pb.log_coupling(order[i], order[j]) = std::log(2.0 / eps * (cn.est_fading + cn.error_var) * cm.path_loss);
        }
    }
    pb.offset += pb.weight.sum() * std::log1p(-eps);
    return pb;
}

PowerProblem antenna_problem(const NetworkInstance& inst, const SicOrdering& ord, const Eigen::MatrixXcd& V) {
    ord.validate(inst);
    const Eigen::MatrixXcd H = channel_matrix(inst);
    if (V.rows() != H.cols() || V.cols() != H.rows()) throw ShapeError("equalizer must be N x M_r");
    const Eigen::MatrixXcd VH = V * H;
    PowerProblem pb = base_problem(inst);
    for (Eigen::Index n = 0; n < H.cols(); ++n) {
        const double a = std::norm(VH(n, n));
        const double s = V.row(n).squaredNorm() * inst.noise;
        if (!(a > 0.0) || !(s > 0.0)) throw DomainError("equalizer row annihilates its own user");
        pb.log_signal(n) = std::log(a);
        pb.log_noise(n) = std::log(s);
    }
    const auto& order = ord.per_bs()[0];
    for (std::size_t i = 0; i < order.size(); ++i)
        for (std::size_t j = i + 1; j < order.size(); ++j) {
            const double c = std::norm(VH(order[i], order[j]));
            // Exact zero-forcing leaves round-off-level couplings; drop them.
            if (c > 1e-300) pb.log_coupling(order[i], order[j]) = std::log(c);
        }
    return pb;
}

PowerProblem multi_bs_problem(const NetworkInstance& inst, const SicOrdering& ord) {
    if (!std::holds_alternative<MultiBs>(inst.scenario)) throw ConfigError("multi_bs_problem needs the multi-BS scenario");
    ord.validate(inst);
    PowerProblem pb = base_problem(inst);
    const auto pos = ord.positions(inst.size());
    for (std::size_t n = 0; n < inst.size(); ++n) {
        const auto& un = inst.users[n];
        const auto b = static_cast<std::size_t>(un.bs);
        pb.log_signal(static_cast<Eigen::Index>(n)) = std::log(un.bs_gains[b]);
        for (std::size_t m = 0; m < inst.size(); ++m) {
            if (m == n) continue;
            const auto& um = inst.users[m];
            const bool interferes = um.bs != un.bs || pos[m] > pos[n];
            if (interferes && um.bs_gains[b] > 0.0)
                pb.log_coupling(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m)) = std::log(um.bs_gains[b]);
        }
    }
    return pb;
}

// ---- rate term -----------------------------------------------------------

RateBarrier rate_term(double s) {
    const double x = kLn2 * std::exp(s);
    RateBarrier r{};
    if (x == 0.0) {
        r.value = std::log(kLn2) + s;
        r.d1 = 1.0;
        r.d2 = 0.0;
        return r;
    }
    r.value = x > 1.0 ? x + std::log1p(-std::exp(-x)) : std::log(std::expm1(x));
    const double one_minus = -std::expm1(-x);  // 1 - e^{-x}
    r.d1 = x / one_minus;
    // h'' = x (1 - e^{-x} - x e^{-x}) / (1 - e^{-x})^2
    double bracket;
    if (x < 1e-3) bracket = x * x * (0.5 - x / 3.0 + x * x / 8.0);
    else bracket = one_minus - x * std::exp(-x);
    r.d2 = x * bracket / (one_minus * one_minus);
    return r;
}

std::string to_string(SolverStatus s) {
    switch (s) {
        case SolverStatus::optimal: return "optimal";
        case SolverStatus::max_iter: return "max-iter";
        case SolverStatus::infeasible: return "infeasible";
    }
    return "unknown";
}

std::string to_json_string(const SolverReport& r, bool with_kkt) {
    nlohmann::json j;
    j["p_w"] = r.p;
    j["objective"] = r.objective;
    j["iterations"] = r.iterations;
    j["kkt_residual"] = r.kkt_residual;
    j["status"] = to_string(r.status);
    j["method"] = r.method;
    if (r.alternations > 0) {
        j["alternations"] = r.alternations;
        j["fixed_point_residual"] = r.fixed_point_residual;
    }
    if (with_kkt) j["kkt"] = r.kkt;
    return j.dump(2);
}

// ---- primal-dual interior point --------------------------------------------

namespace {

// Constraint values and derivatives at x = [y; nu]:
//   f_n     = y_n - ln Pmax_n
//   f_{N+n} = LSE_n(y) - y_n - ln a_n + h(nu_n / w_n)
struct Eval {
    Eigen::VectorXd f;
    Eigen::MatrixXd Df;
    std::vector<Eigen::VectorXd> zeta;
    Eigen::VectorXd nu_curv;  // h''(nu/w) / w^2
    bool ok = true;
};

Eval evaluate(const PowerProblem& pb, const Eigen::VectorXd& x, bool derivs) {
    const Eigen::Index N = pb.size();
    Eval e;
    e.f.resize(2 * N);
    if (derivs) {
        e.Df = Eigen::MatrixXd::Zero(2 * N, 2 * N);
        e.zeta.resize(static_cast<std::size_t>(N));
        e.nu_curv.resize(N);
    }
    const Eigen::VectorXd y = x.head(N);
    for (Eigen::Index n = 0; n < N; ++n) {
        e.f(n) = y(n) - pb.log_pmax(n);
        Eigen::VectorXd* z = derivs ? &e.zeta[static_cast<std::size_t>(n)] : nullptr;
        const double lse = coupling_lse(pb, n, y, z);
        const RateBarrier h = rate_term(x(N + n) / pb.weight(n));
        e.f(N + n) = lse - y(n) - pb.log_signal(n) + h.value;
        if (derivs) {
            e.Df(n, n) = 1.0;
            e.Df.block(N + n, 0, 1, N) = z->transpose();
            e.Df(N + n, n) -= 1.0;
            e.Df(N + n, N + n) = h.d1 / pb.weight(n);
            e.nu_curv(n) = h.d2 / (pb.weight(n) * pb.weight(n));
        }
    }
    e.ok = e.f.allFinite() && (!derivs || e.Df.allFinite());
    return e;
}

Eigen::VectorXd dual_residual(const Eval& e, const Eigen::VectorXd& lambda, Eigen::Index N) {
    Eigen::VectorXd r = e.Df.transpose() * lambda;
    r.tail(N).array() -= 1.0;  // grad of -sum(nu)
    return r;
}

double residual_norm(const PowerProblem& pb, const Eigen::VectorXd& x, const Eigen::VectorXd& lambda, double inv_t) {
    const Eval e = evaluate(pb, x, true);
    if (!e.ok) return std::numeric_limits<double>::infinity();
    const Eigen::VectorXd rd = dual_residual(e, lambda, pb.size());
    const Eigen::VectorXd rc = -(lambda.array() * e.f.array()) - inv_t;
    return std::sqrt(rd.squaredNorm() + rc.squaredNorm());
}

Eigen::VectorXd solve_spd(Eigen::MatrixXd A, const Eigen::VectorXd& b) {
    const double scale = std::max(1.0, A.diagonal().cwiseAbs().maxCoeff());
    double ridge = 0.0;
    for (int attempt = 0; attempt < 6; ++attempt) {
        Eigen::MatrixXd M = A;
        M.diagonal().array() += ridge;
        Eigen::LDLT<Eigen::MatrixXd> ldlt(M);
        if (ldlt.info() == Eigen::Success) {
            Eigen::VectorXd x = ldlt.solve(b);
            if (x.allFinite() && (M * x - b).norm() <= 1e-6 * (b.norm() + 1e-300) + 1e-12) return x;
        }
        ridge = ridge == 0.0 ? 1e-14 * scale : ridge * 100.0;
    }
    throw SolverError("Newton system is numerically singular");
}

}  // namespace

SolverReport solve_power_ipm(const PowerProblem& pb, const SolverOptions& opt) {
    pb.validate();
    const Eigen::Index N = pb.size();
    const Eigen::Index m = 2 * N;

    // Strictly feasible start: half power and nu one nat inside the rate bound.
    Eigen::VectorXd x(2 * N);
    x.head(N) = pb.log_pmax.array() - std::numbers::ln2;
    const Eigen::VectorXd ls0 = pb.log_sinr(x.head(N));
    for (Eigen::Index n = 0; n < N; ++n) x(N + n) = pb.weight(n) * (std::log(softplus(ls0(n)) / kLn2) - 1.0);
    Eval e = evaluate(pb, x, true);
    if (!e.ok || (e.f.array() >= 0.0).any()) throw SolverError("interior-point start is not strictly feasible");
    // Dual start that zeroes the nu-part of the dual residual exactly and the
    // y-part where the sign allows.
    Eigen::VectorXd lambda(m);
    for (Eigen::Index n = 0; n < N; ++n) lambda(N + n) = 1.0 / e.Df(N + n, N + n);
    {
        const Eigen::VectorXd gy = e.Df.block(N, 0, N, N).transpose() * lambda.tail(N);
        for (Eigen::Index n = 0; n < N; ++n) lambda(n) = std::max(-gy(n), 1.0 / (-e.f(n)) * 1e-3);
    }

    SolverReport rep;
    rep.method = "interior-point";
    for (int it = 0; it < opt.max_iterations; ++it) {
        const Eigen::VectorXd rd = dual_residual(e, lambda, N);
        const double eta = -e.f.dot(lambda);
        rep.iterations = it;
        if (rd.norm() <= opt.tolerance && eta <= opt.tolerance) {
            rep.status = SolverStatus::optimal;
            break;
        }

        // Reduced Newton matrix H + Df^T diag(lambda / -f) Df.
        Eigen::MatrixXd H = Eigen::MatrixXd::Zero(m, m);
        for (Eigen::Index n = 0; n < N; ++n) {
            const Eigen::VectorXd& z = e.zeta[static_cast<std::size_t>(n)];
            const double l = lambda(N + n);
            H.topLeftCorner(N, N).diagonal() += l * z;
            H.topLeftCorner(N, N).noalias() -= l * z * z.transpose();
            H(N + n, N + n) += l * e.nu_curv(n);
        }
        const Eigen::VectorXd ratio = lambda.array() / (-e.f.array());
        H.noalias() += e.Df.transpose() * ratio.asDiagonal() * e.Df;

        auto direction = [&](double inv_t, Eigen::VectorXd& dx, Eigen::VectorXd& dl) {
            const Eigen::VectorXd rc = -(lambda.array() * e.f.array()) - inv_t;
            const Eigen::VectorXd rhs = -rd - e.Df.transpose() * (rc.array() / e.f.array()).matrix();
            dx = solve_spd(H, rhs);
            const Eigen::VectorXd dfdx = e.Df * dx;
            dl = (rc.array() - lambda.array() * dfdx.array()) / e.f.array();
        };

        // Predictor: affine-scaling direction sets the centering weight.
        Eigen::VectorXd dx, dl;
        direction(0.0, dx, dl);
        double a_aff = 1.0;
        const Eigen::VectorXd dfdx = e.Df * dx;
        for (Eigen::Index i = 0; i < m; ++i) {
            if (dl(i) < 0.0) a_aff = std::min(a_aff, -lambda(i) / dl(i));
            if (dfdx(i) > 0.0) a_aff = std::min(a_aff, -e.f(i) / dfdx(i));
        }
        const double eta_aff =
            -((e.f + a_aff * dfdx).array() * (lambda + a_aff * dl).array()).sum();
        double sigma = std::pow(std::clamp(eta_aff / eta, 0.0, 1.0), 3.0);
        sigma = std::clamp(sigma, 0.1, 0.5);
        const double inv_t = sigma * eta / static_cast<double>(m);
        direction(inv_t, dx, dl);

        // Backtracking: dual positivity, primal strict feasibility, then
        // sufficient decrease of the residual norm.
        double s = 1.0;
        for (Eigen::Index i = 0; i < m; ++i)
            if (dl(i) < 0.0) s = std::min(s, -0.99 * lambda(i) / dl(i));
        Eval trial;
        for (;;) {
            trial = evaluate(pb, x + s * dx, false);
            if (trial.ok && (trial.f.array() < 0.0).all()) break;
            s *= 0.5;
            if (s < 1e-14) break;
        }
        const double r0 = residual_norm(pb, x, lambda, inv_t);
        while (s >= 1e-14 && residual_norm(pb, x + s * dx, lambda + s * dl, inv_t) > (1.0 - 0.01 * s) * r0) s *= 0.5;
        if (s < 1e-14) {
            rep.iterations = it + 1;
            break;  // stalled
        }
        x += s * dx;
        lambda += s * dl;
        e = evaluate(pb, x, true);
        rep.iterations = it + 1;
    }

    const Eigen::VectorXd rd = dual_residual(e, lambda, N);
    const double eta = -e.f.dot(lambda);
    rep.kkt_residual = std::max(rd.norm(), eta);
    if (rep.status != SolverStatus::optimal && rep.kkt_residual <= opt.tolerance) rep.status = SolverStatus::optimal;
    rep.kkt.assign(rd.data(), rd.data() + rd.size());
    for (Eigen::Index i = 0; i < m; ++i) rep.kkt.push_back(-lambda(i) * e.f(i));
    const Eigen::VectorXd y = x.head(N);
    rep.p.resize(static_cast<std::size_t>(N));
    for (Eigen::Index n = 0; n < N; ++n) rep.p[static_cast<std::size_t>(n)] = std::exp(y(n));
    rep.objective = pb.objective(y);
    return rep;
}

// ---- barrier Newton on the reduced concave problem -------------------------

namespace {

// U(y) = sum w ln softplus(z_n), z_n = ln phi_n(y). Concave: ln softplus is
// concave and nondecreasing, z_n is concave.
double reduced_value(const PowerProblem& pb, const Eigen::VectorXd& y) {
    const Eigen::VectorXd z = pb.log_sinr(y);
    double u = 0.0;
    for (Eigen::Index n = 0; n < pb.size(); ++n) u += pb.weight(n) * std::log(softplus(z(n)));
    return u;
}

void reduced_derivs(const PowerProblem& pb, const Eigen::VectorXd& y, Eigen::VectorXd& grad, Eigen::MatrixXd& hess) {
    const Eigen::Index N = pb.size();
    grad.setZero(N);
    hess.setZero(N, N);
    Eigen::VectorXd zeta;
    for (Eigen::Index n = 0; n < N; ++n) {
        const double lse = coupling_lse(pb, n, y, &zeta);
        const double z = pb.log_signal(n) + y(n) - lse;
        const double sp = softplus(z);
        const double sg = 1.0 / (1.0 + std::exp(-z));
        const double g1 = sg / sp;
        const double g2 = (sg * (1.0 - sg) * sp - sg * sg) / (sp * sp);
        Eigen::VectorXd dz = -zeta;
        dz(n) += 1.0;
        const double w = pb.weight(n);
        grad += w * g1 * dz;
        hess.noalias() += w * g2 * dz * dz.transpose();
        hess.diagonal() -= w * g1 * zeta;
        hess.noalias() += w * g1 * zeta * zeta.transpose();
    }
}

}  // namespace

SolverReport solve_power_barrier(const PowerProblem& pb, const SolverOptions& opt) {
    pb.validate();
    const Eigen::Index N = pb.size();
    const Eigen::VectorXd& ub = pb.log_pmax;
    Eigen::VectorXd y = ub.array() - std::numbers::ln2;
    double t = 1.0;
    const int budget = std::max(1, opt.max_iterations) * 10;

    auto phi = [&](const Eigen::VectorXd& v) {
        if (((ub - v).array() <= 0.0).any()) return std::numeric_limits<double>::infinity();
        return -t * reduced_value(pb, v) - (ub - v).array().log().sum();
    };

    SolverReport rep;
    rep.method = "barrier-newton";
    Eigen::VectorXd g;
    Eigen::MatrixXd Hs;
    bool stalled = false;
    for (;;) {
        // Centering.
        int inner = 0;
        for (;;) {
            if (rep.iterations >= budget) break;
            reduced_derivs(pb, y, g, Hs);
            const Eigen::ArrayXd slack = ub - y;
            const Eigen::VectorXd grad = -t * g + slack.inverse().matrix();
            Eigen::MatrixXd hess = -t * Hs;
            hess.diagonal() += slack.square().inverse().matrix();
            const Eigen::VectorXd dy = solve_spd(hess, -grad);
            const double decrement = -grad.dot(dy);
            // Suboptimality of this centering step in U is below decrement / (2t).
            if (decrement / 2.0 <= 1e-8 || ++inner > 100) break;
            double s = 1.0;
            for (Eigen::Index n = 0; n < N; ++n)
                if (dy(n) > 0.0) s = std::min(s, 0.99 * slack(n) / dy(n));
            const double f0 = phi(y);
            while (phi(y + s * dy) > f0 - 0.25 * s * decrement) {
                s *= 0.5;
                if (s < 1e-14) break;
            }
            ++rep.iterations;
            if (s < 1e-14) {
                stalled = true;
                break;
            }
            y += s * dy;
        }
        if (stalled || rep.iterations >= budget) break;
        if (static_cast<double>(N) / t <= opt.tolerance) break;
        t = std::min(t * 20.0, static_cast<double>(N) / opt.tolerance);
    }

    // Box-constrained optimality: the multiplier that makes stationarity exact
    // is grad U itself; it must be non-negative and complementary to the slack.
    reduced_derivs(pb, y, g, Hs);
    const Eigen::ArrayXd slack = ub - y;
    const Eigen::VectorXd dual_infeas = (-g).cwiseMax(0.0);
    const Eigen::VectorXd comp = (g.array() * slack).matrix();
    rep.kkt_residual = std::max(dual_infeas.norm(), comp.norm());
    rep.status = rep.kkt_residual <= opt.tolerance ? SolverStatus::optimal : SolverStatus::max_iter;
    rep.kkt.assign(dual_infeas.data(), dual_infeas.data() + N);
    rep.kkt.insert(rep.kkt.end(), comp.data(), comp.data() + N);
    rep.p.resize(static_cast<std::size_t>(N));
    for (Eigen::Index n = 0; n < N; ++n) rep.p[static_cast<std::size_t>(n)] = std::exp(y(n));
    rep.objective = pb.objective(y);
    return rep;
}

SolverReport solve_power(const PowerProblem& pb, const SolverOptions& opt) {
    SolverReport ipm;
    try {
        ipm = solve_power_ipm(pb, opt);
        if (ipm.status == SolverStatus::optimal || !opt.fallback) return ipm;
    } catch (const SolverError&) {
        if (!opt.fallback) throw;
        return solve_power_barrier(pb, opt);
    }
    SolverReport alt = solve_power_barrier(pb, opt);
    if (alt.status == SolverStatus::optimal || alt.objective > ipm.objective) {
        alt.iterations += ipm.iterations;
        return alt;
    }
    return ipm;
}

// ---- scenario entry points -----------------------------------------------

SolverReport solve_p1(const NetworkInstance& inst, const SicOrdering& ord, const SolverOptions& opt) {
    return solve_power(perfect_problem(inst, ord), opt);
}

SolverReport solve_p1_imperfect(const NetworkInstance& inst, const SicOrdering& ord, double outage,
                                const SolverOptions& opt) {
    NetworkInstance copy = inst;
    auto* ic = std::get_if<ImperfectCsi>(&copy.scenario);
    if (ic == nullptr) throw ConfigError("solve_p1_imperfect needs the imperfect-CSI scenario");
    ic->outage = outage;
    if (exact_estimates(copy)) return solve_p1(as_perfect_csi(copy), ord, opt);
    return solve_power(imperfect_problem(copy, ord, outage_quantiles(copy, outage)), opt);
}

SolverReport solve_multi_antenna(const NetworkInstance& inst, const SicOrdering& ord, EqualizerKind kind,
                                 const SolverOptions& opt, const AlternationOptions& alt) {
    const Eigen::MatrixXcd H = channel_matrix(inst);
    if (kind == EqualizerKind::zf) return solve_power(antenna_problem(inst, ord, zf_equalizer(H)), opt);

    std::vector<double> p(inst.size());
    for (std::size_t n = 0; n < inst.size(); ++n) p[n] = inst.users[n].p_max;
    SolverReport rep;
    int total_iters = 0;
    double change = std::numeric_limits<double>::infinity();
    int round = 0;
    bool converged = false;
    while (round < alt.max_rounds) {
        ++round;
        rep = solve_power(antenna_problem(inst, ord, mmse_equalizer(H, p, inst.noise)), opt);
        total_iters += rep.iterations;
        change = 0.0;
        double rel = 0.0;
        for (std::size_t n = 0; n < p.size(); ++n) {
            change = std::max(change, std::abs(rep.p[n] - p[n]));
            rel = std::max(rel, std::abs(rep.p[n] - p[n]) / p[n]);
        }
        p = rep.p;
        // Weak users sit at 1e-5 W or below, where an absolute step of 1e-4
        // says nothing; require the relative change to be small as well.
        converged = change < alt.tolerance && rel < alt.tolerance;
        if (converged) break;
    }
    // Report what the powers achieve with the equalizer matched to them.
    NetworkInstance copy = inst;
    std::get<MultiAntenna>(copy.scenario).equalizer = EqualizerKind::mmse;
    rep.objective = utility(copy, ord, p);
    rep.iterations = total_iters;
    rep.alternations = round;
    rep.fixed_point_residual = change;
    if (!converged) rep.status = SolverStatus::max_iter;
    rep.method += "+mmse-alternation";
    return rep;
}

SolverReport solve_multi_bs(const NetworkInstance& inst, const SicOrdering& ord, const SolverOptions& opt) {
    return solve_power(multi_bs_problem(inst, ord), opt);
}

SolverReport solve_allocation(const NetworkInstance& inst, const SicOrdering& ord, const SolverOptions& opt) {
    return std::visit(
        [&](const auto& s) -> SolverReport {
            using S = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<S, PerfectCsi>) return solve_p1(inst, ord, opt);
            else if constexpr (std::is_same_v<S, ImperfectCsi>) return solve_p1_imperfect(inst, ord, s.outage, opt);
            else if constexpr (std::is_same_v<S, MultiAntenna>) return solve_multi_antenna(inst, ord, s.equalizer, opt);
            else return solve_multi_bs(inst, ord, opt);
        },
        inst.scenario);
}

}  // namespace noma
