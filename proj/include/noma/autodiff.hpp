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

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <utility>
#include <vector>

namespace noma::ad {

using Matrix = Eigen::MatrixXd;

class Tape;

/// Handle to a node on a Tape. Cheap to copy; only valid while the tape lives.
class Var {
public:
    Var() = default;

    const Matrix& value() const;
    const Matrix& grad() const;
    Eigen::Index rows() const { return value().rows(); }
    Eigen::Index cols() const { return value().cols(); }
    double scalar() const;

    Tape* tape() const { return tape_; }
    int id() const { return id_; }
    bool valid() const { return tape_ != nullptr; }

private:
    friend class Tape;
    Var(Tape* tape, int id) : tape_(tape), id_(id) {}

    Tape* tape_ = nullptr;
    int id_ = -1;
};

/// Define-by-run reverse-mode tape. Nodes are appended in evaluation order,
/// which is a topological order, so backward() walks the node list once in
/// reverse and accumulates gradients into parents.
///
/// A tape is single-threaded. Distinct tapes may run concurrently.
class Tape {
public:
    using Backward = std::function<void(Tape&, int self)>;

    Tape() { nodes_.reserve(256); }
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    /// Leaf that receives a gradient (parameters, differentiable inputs).
    Var variable(Matrix value);
    /// Leaf without gradient.
    Var constant(Matrix value);

    /// Records an op result. `backward` is skipped when no parent needs a grad.
    Var record(Matrix value, std::initializer_list<Var> parents, Backward backward);

    const Matrix& value(int id) const { return nodes_[static_cast<std::size_t>(id)].value; }
    const Matrix& grad(int id) const;
    bool needs_grad(int id) const { return nodes_[static_cast<std::size_t>(id)].needs_grad; }
    /// Gradient accumulator of a node; allocated (zeroed) on first use.
    Matrix& grad_ref(int id);

    /// Seeds d(root)/d(root) = 1 (root must be 1x1) and propagates.
    void backward(Var root);
    /// Seeds an arbitrary upstream gradient of root's shape.
    void backward(Var root, const Matrix& seed);

    std::size_t size() const { return nodes_.size(); }

private:
    struct Node {
        Matrix value;
        Matrix grad;
        bool needs_grad = false;
        bool has_grad = false;
        Backward backward;
    };

    std::vector<Node> nodes_;
};

// Shape-checked dense ops. All throw ShapeError on mismatched operands.

Var matmul(Var a, Var b);
/// a * b^T, the layout used for row-major activations times weight matrices.
Var matmul_nt(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
/// Adds a 1xC row to every row of a.
Var add_row(Var a, Var row);
/// Multiplies every row of a elementwise by a 1xC row.
Var mul_row(Var a, Var row);
Var scale(Var a, double s);
Var relu(Var a);
Var log(Var a);
/// c * tanh(a / c): smooth clip into (-c, c).
Var tanh_clip(Var a, double c);
/// Row-wise softmax. -inf entries yield exact zeros; a row of all -inf is a
/// DomainError.
Var softmax(Var a);
/// Sets the listed columns to -inf (gradient does not flow through them).
Var mask_columns(Var a, std::span<const int> masked);
Var sum(Var a);
Var mean_rows(Var a);
Var row(Var a, Eigen::Index r);
Var slice_rows(Var a, Eigen::Index start, Eigen::Index count);
Var concat_cols(Var a, Var b);
Var pick(Var a, Eigen::Index r, Eigen::Index c);

/// Multi-head scaled dot-product self-attention restricted to row segments:
/// rows of segment s only attend to rows of segment s. Q, K, V are R x (H*d).
/// Returns R x (H*d), the per-head outputs concatenated by columns.
struct Segment {
    Eigen::Index offset;
    Eigen::Index length;
};
Var segment_attention(Var q, Var k, Var v, int heads, std::span<const Segment> segments);

/// Multi-head attention of a single query row (1 x H*d) over K, V (n x H*d)
/// with masked key rows. Returns 1 x (H*d).
Var query_attention(Var q, Var k, Var v, int heads, std::span<const int> masked);

/// Statistics of a batch-norm input, per column.
struct BatchStats {
    Eigen::RowVectorXd mean;
    Eigen::RowVectorXd var;
};

inline constexpr double kBatchNormEps = 1e-5;

/// w * (x - mean) / sqrt(var + eps) + b, per column over rows of x.
/// With `fixed` null the statistics come from x itself (training mode, needs
/// at least two rows) and are written to `observed` when given; otherwise
/// the supplied running statistics are used.
Var batch_norm(Var x, Var w, Var b, const BatchStats* fixed, BatchStats* observed = nullptr);

}  // namespace noma::ad
