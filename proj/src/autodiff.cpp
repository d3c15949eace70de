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

#include "noma/autodiff.hpp"

#include "noma/errors.hpp"

#include <cmath>
#include <sstream>
#include <string>

namespace noma::ad {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::string shape(const Matrix& m) {
    std::ostringstream os;
    os << m.rows() << "x" << m.cols();
    return os.str();
}

[[noreturn]] void shape_error(const char* op, const Matrix& a, const Matrix& b) {
    throw ShapeError(std::string(op) + ": incompatible shapes " + shape(a) + " and " + shape(b));
}

void check_same_tape(Var a, Var b) {
    if (a.tape() != b.tape()) throw ShapeError("operands live on different tapes");
}

// Row-wise softmax on values that may contain -inf.
Matrix softmax_values(const Matrix& x) {
    Matrix out(x.rows(), x.cols());
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
        const double mx = x.row(r).maxCoeff();
        if (!std::isfinite(mx)) {
            if (mx == kNegInf) throw DomainError("softmax: every entry of a row is -inf");
            throw DomainError("softmax: non-finite input");
        }
        double total = 0.0;
        for (Eigen::Index c = 0; c < x.cols(); ++c) {
            const double e = x(r, c) == kNegInf ? 0.0 : std::exp(x(r, c) - mx);
            out(r, c) = e;
            total += e;
        }
        out.row(r) /= total;
    }
    return out;
}

// dS = A .* (dA - rowsum(dA .* A))
Matrix softmax_backward(const Matrix& a, const Matrix& da) {
    Matrix ds = a.cwiseProduct(da);
    const Eigen::VectorXd dots = ds.rowwise().sum();
    ds -= a.cwiseProduct(dots.replicate(1, a.cols()));
    return ds;
}

}  // namespace

const Matrix& Var::value() const { return tape_->value(id_); }
const Matrix& Var::grad() const { return tape_->grad(id_); }

double Var::scalar() const {
    const Matrix& v = value();
    if (v.size() != 1) throw ShapeError("scalar(): node is " + shape(v));
    return v(0, 0);
}

Var Tape::variable(Matrix value) {
    Node n;
    n.value = std::move(value);
    n.needs_grad = true;
    nodes_.push_back(std::move(n));
    return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Tape::constant(Matrix value) {
    Node n;
    n.value = std::move(value);
    nodes_.push_back(std::move(n));
    return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Tape::record(Matrix value, std::initializer_list<Var> parents, Backward backward) {
    Node n;
    n.value = std::move(value);
    for (const Var& p : parents) {
        if (p.tape() != this) throw ShapeError("operand recorded on a different tape");
        n.needs_grad = n.needs_grad || needs_grad(p.id());
    }
    if (n.needs_grad) n.backward = std::move(backward);
    nodes_.push_back(std::move(n));
    return Var(this, static_cast<int>(nodes_.size()) - 1);
}

const Matrix& Tape::grad(int id) const {
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    if (!n.has_grad) {
        static thread_local Matrix empty;
        empty = Matrix::Zero(n.value.rows(), n.value.cols());
        return empty;
    }
    return n.grad;
}

Matrix& Tape::grad_ref(int id) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (!n.has_grad) {
        n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
        n.has_grad = true;
    }
    return n.grad;
}

void Tape::backward(Var root) {
    if (root.value().size() != 1) throw ShapeError("backward(): root must be a scalar, got " + shape(root.value()));
    backward(root, Matrix::Ones(1, 1));
}

void Tape::backward(Var root, const Matrix& seed) {
    if (root.tape() != this) throw ShapeError("backward(): root belongs to another tape");
    if (seed.rows() != root.rows() || seed.cols() != root.cols()) shape_error("backward", root.value(), seed);
    grad_ref(root.id()) += seed;
    for (int id = root.id(); id >= 0; --id) {
        Node& n = nodes_[static_cast<std::size_t>(id)];
        if (n.backward && n.has_grad) n.backward(*this, id);
    }
}

Var matmul(Var a, Var b) {
    check_same_tape(a, b);
    if (a.cols() != b.rows()) shape_error("matmul", a.value(), b.value());
    const int ia = a.id(), ib = b.id();
    return a.tape()->record(a.value() * b.value(), {a, b}, [ia, ib](Tape& t, int self) {
        const Matrix& g = t.grad(self);
        if (t.needs_grad(ia)) t.grad_ref(ia).noalias() += g * t.value(ib).transpose();
        if (t.needs_grad(ib)) t.grad_ref(ib).noalias() += t.value(ia).transpose() * g;
    });
}

Var matmul_nt(Var a, Var b) {
    check_same_tape(a, b);
    if (a.cols() != b.cols()) shape_error("matmul_nt", a.value(), b.value());
    const int ia = a.id(), ib = b.id();
    return a.tape()->record(a.value() * b.value().transpose(), {a, b}, [ia, ib](Tape& t, int self) {
        const Matrix& g = t.grad(self);
        if (t.needs_grad(ia)) t.grad_ref(ia).noalias() += g * t.value(ib);
        if (t.needs_grad(ib)) t.grad_ref(ib).noalias() += g.transpose() * t.value(ia);
    });
}

Var add(Var a, Var b) {
    check_same_tape(a, b);
    if (a.rows() != b.rows() || a.cols() != b.cols()) shape_error("add", a.value(), b.value());
    const int ia = a.id(), ib = b.id();
    return a.tape()->record(a.value() + b.value(), {a, b}, [ia, ib](Tape& t, int self) {
        const Matrix& g = t.grad(self);
        if (t.needs_grad(ia)) t.grad_ref(ia) += g;
        if (t.needs_grad(ib)) t.grad_ref(ib) += g;
    });
}

Var sub(Var a, Var b) {
    check_same_tape(a, b);
    if (a.rows() != b.rows() || a.cols() != b.cols()) shape_error("sub", a.value(), b.value());
    const int ia = a.id(), ib = b.id();
    return a.tape()->record(a.value() - b.value(), {a, b}, [ia, ib](Tape& t, int self) {
        const Matrix& g = t.grad(self);
        if (t.needs_grad(ia)) t.grad_ref(ia) += g;
        if (t.needs_grad(ib)) t.grad_ref(ib) -= g;
    });
}

Var add_row(Var a, Var row) {
    check_same_tape(a, row);
    if (row.rows() != 1 || row.cols() != a.cols()) shape_error("add_row", a.value(), row.value());
    const int ia = a.id(), ir = row.id();
    Matrix out = a.value().rowwise() + row.value().row(0);
    return a.tape()->record(std::move(out), {a, row}, [ia, ir](Tape& t, int self) {
        const Matrix& g = t.grad(self);
        if (t.needs_grad(ia)) t.grad_ref(ia) += g;
        if (t.needs_grad(ir)) t.grad_ref(ir) += g.colwise().sum();
    });
}

Var mul_row(Var a, Var row) {
    check_same_tape(a, row);
    if (row.rows() != 1 || row.cols() != a.cols()) shape_error("mul_row", a.value(), row.value());
    const int ia = a.id(), ir = row.id();
    Matrix out = a.value().array().rowwise() * row.value().row(0).array();
    return a.tape()->record(std::move(out), {a, row}, [ia, ir](Tape& t, int self) {
        const Matrix& g = t.grad(self);
        if (t.needs_grad(ia)) t.grad_ref(ia).array() += g.array().rowwise() * t.value(ir).row(0).array();
        if (t.needs_grad(ir)) t.grad_ref(ir) += g.cwiseProduct(t.value(ia)).colwise().sum();
    });
}

Var scale(Var a, double s) {
    const int ia = a.id();
    return a.tape()->record(a.value() * s, {a}, [ia, s](Tape& t, int self) {
        t.grad_ref(ia) += s * t.grad(self);
    });
}

Var relu(Var a) {
    const int ia = a.id();
    return a.tape()->record(a.value().cwiseMax(0.0), {a}, [ia](Tape& t, int self) {
        t.grad_ref(ia).array() += (t.value(ia).array() > 0.0).select(t.grad(self).array(), 0.0);
    });
}

Var log(Var a) {
    if ((a.value().array() <= 0.0).any()) throw DomainError("log: non-positive argument");
    const int ia = a.id();
    return a.tape()->record(a.value().array().log().matrix(), {a}, [ia](Tape& t, int self) {
        t.grad_ref(ia).array() += t.grad(self).array() / t.value(ia).array();
    });
}

Var tanh_clip(Var a, double c) {
    if (!(c > 0.0)) throw DomainError("tanh_clip: bound must be positive");
    const int ia = a.id();
    Matrix th = (a.value().array() / c).tanh().matrix();
    Matrix out = c * th;
    return a.tape()->record(std::move(out), {a}, [ia, th = std::move(th)](Tape& t, int self) {
        t.grad_ref(ia).array() += t.grad(self).array() * (1.0 - th.array().square());
    });
}

Var softmax(Var a) {
    const int ia = a.id();
    return a.tape()->record(softmax_values(a.value()), {a}, [ia](Tape& t, int self) {
        t.grad_ref(ia) += softmax_backward(t.value(self), t.grad(self));
    });
}

Var mask_columns(Var a, std::span<const int> masked) {
    Matrix out = a.value();
    std::vector<int> cols(masked.begin(), masked.end());
    for (int c : cols) {
        if (c < 0 || c >= out.cols()) throw ShapeError("mask_columns: column out of range");
        out.col(c).setConstant(kNegInf);
    }
    const int ia = a.id();
    return a.tape()->record(std::move(out), {a}, [ia, cols = std::move(cols)](Tape& t, int self) {
        Matrix g = t.grad(self);
        for (int c : cols) g.col(c).setZero();
        t.grad_ref(ia) += g;
    });
}

Var sum(Var a) {
    const int ia = a.id();
    Matrix out(1, 1);
    out(0, 0) = a.value().sum();
    return a.tape()->record(std::move(out), {a}, [ia](Tape& t, int self) {
        t.grad_ref(ia).array() += t.grad(self)(0, 0);
    });
}

Var mean_rows(Var a) {
    if (a.rows() == 0) throw ShapeError("mean_rows: empty input");
    const int ia = a.id();
    const double inv = 1.0 / static_cast<double>(a.rows());
    Matrix out = a.value().colwise().mean();
    return a.tape()->record(std::move(out), {a}, [ia, inv](Tape& t, int self) {
        Matrix& g = t.grad_ref(ia);
        g.rowwise() += inv * t.grad(self).row(0);
    });
}

Var row(Var a, Eigen::Index r) { return slice_rows(a, r, 1); }

Var slice_rows(Var a, Eigen::Index start, Eigen::Index count) {
    if (start < 0 || count < 0 || start + count > a.rows()) throw ShapeError("slice_rows: range out of bounds");
    const int ia = a.id();
    return a.tape()->record(a.value().middleRows(start, count), {a}, [ia, start, count](Tape& t, int self) {
        t.grad_ref(ia).middleRows(start, count) += t.grad(self);
    });
}

Var concat_cols(Var a, Var b) {
    check_same_tape(a, b);
    if (a.rows() != b.rows()) shape_error("concat_cols", a.value(), b.value());
    Matrix out(a.rows(), a.cols() + b.cols());
    out << a.value(), b.value();
    const int ia = a.id(), ib = b.id();
    const Eigen::Index ca = a.cols(), cb = b.cols();
    return a.tape()->record(std::move(out), {a, b}, [ia, ib, ca, cb](Tape& t, int self) {
        const Matrix& g = t.grad(self);
        if (t.needs_grad(ia)) t.grad_ref(ia) += g.leftCols(ca);
        if (t.needs_grad(ib)) t.grad_ref(ib) += g.rightCols(cb);
    });
}

Var pick(Var a, Eigen::Index r, Eigen::Index c) {
    if (r < 0 || c < 0 || r >= a.rows() || c >= a.cols()) throw ShapeError("pick: index out of range");
    Matrix out(1, 1);
    out(0, 0) = a.value()(r, c);
    const int ia = a.id();
    return a.tape()->record(std::move(out), {a}, [ia, r, c](Tape& t, int self) {
        t.grad_ref(ia)(r, c) += t.grad(self)(0, 0);
    });
}

namespace {

// Shared kernel of the two attention ops. For each head h and each segment,
// rows [q_off, q_off+q_len) of Q attend over rows [k_off, k_off+k_len) of K/V.
struct AttentionBlock {
    Eigen::Index q_off, q_len, k_off, k_len;
};

void check_attention_shapes(Var q, Var k, Var v, int heads) {
    check_same_tape(q, k);
    check_same_tape(q, v);
    if (heads <= 0 || q.cols() % heads != 0) throw ShapeError("attention: width not divisible by head count");
    if (k.cols() != q.cols() || v.cols() != q.cols()) shape_error("attention", q.value(), k.value());
    if (k.rows() != v.rows()) shape_error("attention", k.value(), v.value());
}

Var attention(Var q, Var k, Var v, int heads, std::vector<AttentionBlock> blocks, std::vector<int> masked) {
    const Eigen::Index d = q.cols() / heads;
    const double s = 1.0 / std::sqrt(static_cast<double>(d));
    const Matrix& Q = q.value();
    const Matrix& K = k.value();
    const Matrix& V = v.value();

    // probabilities per (block, head), kept for the backward pass
    std::vector<Matrix> probs;
    probs.reserve(blocks.size() * static_cast<std::size_t>(heads));
    Matrix out = Matrix::Zero(Q.rows(), Q.cols());
    for (const AttentionBlock& b : blocks) {
        for (int h = 0; h < heads; ++h) {
            Matrix scores = s * Q.block(b.q_off, h * d, b.q_len, d) * K.block(b.k_off, h * d, b.k_len, d).transpose();
            for (int m : masked) scores.col(m).setConstant(kNegInf);
            Matrix a = softmax_values(scores);
            out.block(b.q_off, h * d, b.q_len, d).noalias() = a * V.block(b.k_off, h * d, b.k_len, d);
            probs.push_back(std::move(a));
        }
    }

    const int iq = q.id(), ik = k.id(), iv = v.id();
    return q.tape()->record(
        std::move(out), {q, k, v},
        [iq, ik, iv, heads, d, s, blocks = std::move(blocks), probs = std::move(probs)](Tape& t, int self) {
            const Matrix& g = t.grad(self);
            const Matrix& Qv = t.value(iq);
            const Matrix& Kv = t.value(ik);
            const Matrix& Vv = t.value(iv);
            const bool gq = t.needs_grad(iq), gk = t.needs_grad(ik), gv = t.needs_grad(iv);
            std::size_t idx = 0;
            for (const AttentionBlock& b : blocks) {
                for (int h = 0; h < heads; ++h, ++idx) {
                    const Matrix& a = probs[idx];
                    const auto go = g.block(b.q_off, h * d, b.q_len, d);
                    if (gv) t.grad_ref(iv).block(b.k_off, h * d, b.k_len, d).noalias() += a.transpose() * go;
                    const Matrix da = go * Vv.block(b.k_off, h * d, b.k_len, d).transpose();
                    const Matrix ds = s * softmax_backward(a, da);
                    if (gq) t.grad_ref(iq).block(b.q_off, h * d, b.q_len, d).noalias() += ds * Kv.block(b.k_off, h * d, b.k_len, d);
                    if (gk) t.grad_ref(ik).block(b.k_off, h * d, b.k_len, d).noalias() += ds.transpose() * Qv.block(b.q_off, h * d, b.q_len, d);
                }
            }
        });
}

}  // namespace

Var segment_attention(Var q, Var k, Var v, int heads, std::span<const Segment> segments) {
    check_attention_shapes(q, k, v, heads);
    if (q.rows() != k.rows()) shape_error("segment_attention", q.value(), k.value());
    std::vector<AttentionBlock> blocks;
    for (const Segment& seg : segments) {
        if (seg.offset < 0 || seg.length <= 0 || seg.offset + seg.length > q.rows())
            throw ShapeError("segment_attention: segment out of range");
        blocks.push_back({seg.offset, seg.length, seg.offset, seg.length});
    }
    return attention(q, k, v, heads, std::move(blocks), {});
}

Var query_attention(Var q, Var k, Var v, int heads, std::span<const int> masked) {
    check_attention_shapes(q, k, v, heads);
    if (q.rows() != 1) throw ShapeError("query_attention: query must be a single row");
    for (int m : masked)
        if (m < 0 || m >= k.rows()) throw ShapeError("query_attention: masked index out of range");
    return attention(q, k, v, heads, {{0, 1, 0, k.rows()}}, std::vector<int>(masked.begin(), masked.end()));
}

Var batch_norm(Var x, Var w, Var b, const BatchStats* fixed, BatchStats* observed) {
    check_same_tape(x, w);
    check_same_tape(x, b);
    const Eigen::Index rows = x.rows(), cols = x.cols();
    if (w.rows() != 1 || w.cols() != cols) shape_error("batch_norm", x.value(), w.value());
    if (b.rows() != 1 || b.cols() != cols) shape_error("batch_norm", x.value(), b.value());

    const Matrix& X = x.value();
    Eigen::RowVectorXd mean, var;
    if (fixed) {
        if (fixed->mean.size() != cols || fixed->var.size() != cols) throw ShapeError("batch_norm: running statistics width");
        mean = fixed->mean;
        var = fixed->var;
    } else {
        if (rows < 2) throw ShapeError("batch_norm: training mode needs at least two rows");
        mean = X.colwise().mean();
        var = (X.rowwise() - mean).array().square().colwise().mean();
        if (observed) *observed = {mean, var};
    }
    const Eigen::RowVectorXd inv_std = (var.array() + kBatchNormEps).rsqrt().matrix();
    Matrix xhat = (X.rowwise() - mean).array().rowwise() * inv_std.array();
    Matrix out = (xhat.array().rowwise() * w.value().row(0).array()).rowwise() + b.value().row(0).array();

    const int ix = x.id(), iw = w.id(), ib = b.id();
    const bool training = fixed == nullptr;
    return x.tape()->record(
        std::move(out), {x, w, b},
        [ix, iw, ib, training, inv_std, xhat = std::move(xhat)](Tape& t, int self) {
            const Matrix& g = t.grad(self);
            if (t.needs_grad(iw)) t.grad_ref(iw) += g.cwiseProduct(xhat).colwise().sum();
            if (t.needs_grad(ib)) t.grad_ref(ib) += g.colwise().sum();
            if (!t.needs_grad(ix)) return;
            const Matrix dxhat = g.array().rowwise() * t.value(iw).row(0).array();
            if (!training) {
                t.grad_ref(ix).array() += dxhat.array().rowwise() * inv_std.array();
                return;
            }
            const double n = static_cast<double>(xhat.rows());
            const Eigen::RowVectorXd sum_d = dxhat.colwise().sum();
            const Eigen::RowVectorXd sum_dx = dxhat.cwiseProduct(xhat).colwise().sum();
            Matrix dx = (n * dxhat).rowwise() - sum_d;
            dx -= (xhat.array().rowwise() * sum_dx.array()).matrix();
            t.grad_ref(ix).array() += (dx.array().rowwise() * inv_std.array()) / n;
        });
}

}  // namespace noma::ad
