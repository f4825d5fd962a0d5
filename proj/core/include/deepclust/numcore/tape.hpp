#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <vector>

#include "deepclust/numcore/matrix.hpp"

namespace deepclust {

class Tape;

// Handle to a node recorded on a Tape. Cheap to copy; valid while the tape lives.
class Var {
public:
    Var() = default;

    const Matrix& value() const;
    double scalar() const;  // value of a 1x1 node
    std::size_t rows() const { return value().rows(); }
    std::size_t cols() const { return value().cols(); }
    std::size_t id() const noexcept { return id_; }
    Tape* tape() const noexcept { return tape_; }
    bool valid() const noexcept { return tape_ != nullptr; }

private:
    friend class Tape;
    Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

    Tape* tape_ = nullptr;
    std::size_t id_ = 0;
};

// Reverse-mode gradient tape over matrix-valued nodes.
//
// Nodes are appended in evaluation order, so the record is a topological
// order by construction and backward() is a single reverse sweep. Nodes that
// descend only from constants carry no backward closure.
class Tape {
public:
    // Backward closure: reads the node's upstream gradient and accumulates into parents.
    using Backprop = std::function<void(Tape&, std::size_t self)>;

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Var leaf(Matrix value);      // gradient collected
    Var constant(Matrix value);  // treated as fixed data

    // Appends an op node. `fn` is dropped when no parent requires a gradient.
    Var record(Matrix value, std::initializer_list<Var> parents, Backprop fn);

    // Seeds d(loss)/d(loss) = 1 and replays adjoints. Throws NotScalar unless loss is 1x1.
    void backward(Var loss);

    // Gradient of the last backward() loss w.r.t. `v`; zeros if `v` was not reached.
    const Matrix& grad(Var v) const;

    const Matrix& value(std::size_t id) const { return nodes_[id].value; }
    const Matrix& upstream(std::size_t id) const { return nodes_[id].grad; }
    // Gradient accumulator of a parent, or nullptr when that parent needs none.
    Matrix* accumulator(std::size_t id);
    bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }

    std::size_t size() const noexcept { return nodes_.size(); }

private:
    struct Node {
        Matrix value;
        Matrix grad;
        Backprop backprop;
        bool requires_grad = false;
    };

    Var push(Node node);

    std::vector<Node> nodes_;
    Matrix empty_;
};

// ---- primitive ops -------------------------------------------------------

Var matmul(Var a, Var b);
// x: r x c, bias: r x 1 broadcast over columns.
Var add_bias(Var x, Var bias);
Var relu(Var x);
// Elementwise product with constant data (dropout masks, fixed weights).
Var hadamard_const(Var x, const Matrix& c);
Var cols(Var x, std::size_t begin, std::size_t count);
Var row(Var x, std::size_t r);
// r x 1 -> r x n.
Var repeat_cols(Var v, std::size_t n);
// Column-wise dot products / Euclidean norms: 1 x c.
Var col_dot(Var a, Var b);
Var col_norm(Var a);

Var operator+(Var a, Var b);
Var operator-(Var a, Var b);
Var operator*(Var a, Var b);  // elementwise
Var operator/(Var a, Var b);  // elementwise
// a * x + b elementwise.
Var affine(Var x, double a, double b);
inline Var operator*(double s, Var x) { return affine(x, s, 0.0); }
inline Var operator-(double s, Var x) { return affine(x, -1.0, s); }

// max(0, x); subgradient 0 at x == 0.
Var hinge(Var x);
Var log(Var x);
Var sigmoid(Var x);
// log(sigmoid(x)) without forming 1 - sigmoid(x).
Var log_sigmoid(Var x);
// Clamp into [lo, hi]; zero gradient outside the interval.
Var clamp(Var x, double lo, double hi);
Var sum(Var x);   // 1 x 1
Var mean(Var x);  // 1 x 1

}  // namespace deepclust
