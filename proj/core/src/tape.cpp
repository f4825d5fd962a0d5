#include "deepclust/numcore/tape.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "deepclust/errors.hpp"

namespace deepclust {

const Matrix& Var::value() const { return tape_->value(id_); }

double Var::scalar() const {
    const Matrix& v = value();
    if (v.rows() != 1 || v.cols() != 1) throw NotScalar("node is not 1x1");
    return v[0];
}

Var Tape::push(Node node) {
    nodes_.push_back(std::move(node));
    return Var(this, nodes_.size() - 1);
}

Var Tape::leaf(Matrix value) {
    Node n;
    n.value = std::move(value);
    n.requires_grad = true;
    return push(std::move(n));
}

Var Tape::constant(Matrix value) {
    Node n;
    n.value = std::move(value);
    return push(std::move(n));
}

Var Tape::record(Matrix value, std::initializer_list<Var> parents, Backprop fn) {
    Node n;
    n.value = std::move(value);
    for (const Var& p : parents) {
        if (p.tape() != this) throw ShapeMismatch("operand recorded on a different tape");
        n.requires_grad = n.requires_grad || nodes_[p.id()].requires_grad;
    }
    if (n.requires_grad) n.backprop = std::move(fn);
    return push(std::move(n));
}

void Tape::backward(Var loss) {
    if (loss.tape() != this) throw NotScalar("loss belongs to a different tape");
    const Matrix& lv = nodes_[loss.id()].value;
    if (lv.rows() != 1 || lv.cols() != 1) {
        throw NotScalar("backward needs a 1x1 loss, got " + std::to_string(lv.rows()) + "x" +
                        std::to_string(lv.cols()));
    }
    for (std::size_t i = 0; i <= loss.id(); ++i) {
        Node& n = nodes_[i];
        if (n.requires_grad) n.grad = Matrix(n.value.rows(), n.value.cols());
    }
    if (!nodes_[loss.id()].requires_grad) return;
    nodes_[loss.id()].grad[0] = 1.0;
    for (std::size_t i = loss.id() + 1; i-- > 0;) {
        Node& n = nodes_[i];
        if (n.requires_grad && n.backprop) n.backprop(*this, i);
    }
}

const Matrix& Tape::grad(Var v) const {
    const Node& n = nodes_[v.id()];
    return n.grad.same_shape(n.value) ? n.grad : empty_;
}

Matrix* Tape::accumulator(std::size_t id) {
    Node& n = nodes_[id];
    return n.requires_grad ? &n.grad : nullptr;
}

// ---- primitive ops -------------------------------------------------------

namespace {

void require_same_shape(Var a, Var b, const char* op) {
    if (a.tape() != b.tape()) throw ShapeMismatch(std::string(op) + ": operands on different tapes");
    if (!a.value().same_shape(b.value())) {
        throw ShapeMismatch(std::string(op) + ": operand shapes differ");
    }
}

template <typename F>
Var elementwise_unary(Var x, F&& f, Tape::Backprop bp) {
    Matrix out = x.value();
    for (double& v : out.data()) v = f(v);
    return x.tape()->record(std::move(out), {x}, std::move(bp));
}

}  // namespace

Var matmul(Var a, Var b) {
    Tape& t = *a.tape();
    if (b.tape() != &t) throw ShapeMismatch("matmul: operands on different tapes");
    const std::size_t ia = a.id(), ib = b.id();
    return t.record(deepclust::matmul(a.value(), b.value()), {a, b}, [ia, ib](Tape& tp, std::size_t self) {
        const Matrix& g = tp.upstream(self);
        if (Matrix* ga = tp.accumulator(ia)) *ga += matmul_nt(g, tp.value(ib));
        if (Matrix* gb = tp.accumulator(ib)) *gb += matmul_tn(tp.value(ia), g);
    });
}

Var add_bias(Var x, Var bias) {
    const Matrix& xv = x.value();
    const Matrix& bv = bias.value();
    if (bv.rows() != xv.rows() || bv.cols() != 1) throw ShapeMismatch("add_bias: bias must be rows x 1");
    Matrix out = xv;
    for (std::size_t r = 0; r < out.rows(); ++r) {
        for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) += bv[r];
    }
    const std::size_t ix = x.id(), ib = bias.id();
    return x.tape()->record(std::move(out), {x, bias}, [ix, ib](Tape& tp, std::size_t self) {
        const Matrix& g = tp.upstream(self);
        if (Matrix* gx = tp.accumulator(ix)) *gx += g;
        if (Matrix* gb = tp.accumulator(ib)) {
            for (std::size_t r = 0; r < g.rows(); ++r) {
                double acc = 0.0;
                for (std::size_t c = 0; c < g.cols(); ++c) acc += g(r, c);
                (*gb)[r] += acc;
            }
        }
    });
}

Var relu(Var x) {
    const std::size_t ix = x.id();
    return elementwise_unary(x, [](double v) { return v > 0.0 ? v : 0.0; },
                             [ix](Tape& tp, std::size_t self) {
                                 Matrix* gx = tp.accumulator(ix);
                                 const Matrix& g = tp.upstream(self);
                                 const Matrix& xv = tp.value(ix);
                                 for (std::size_t i = 0; i < g.size(); ++i) {
                                     if (xv[i] > 0.0) (*gx)[i] += g[i];
                                 }
                             });
}

Var hadamard_const(Var x, const Matrix& c) {
    if (!x.value().same_shape(c)) throw ShapeMismatch("hadamard_const: shape mismatch");
    Matrix out = x.value();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= c[i];
    const std::size_t ix = x.id();
    return x.tape()->record(std::move(out), {x}, [ix, c](Tape& tp, std::size_t self) {
        Matrix* gx = tp.accumulator(ix);
        const Matrix& g = tp.upstream(self);
        for (std::size_t i = 0; i < g.size(); ++i) (*gx)[i] += g[i] * c[i];
    });
}

Var cols(Var x, std::size_t begin, std::size_t count) {
    const std::size_t ix = x.id();
    return x.tape()->record(x.value().cols_range(begin, count), {x},
                            [ix, begin, count](Tape& tp, std::size_t self) {
                                Matrix* gx = tp.accumulator(ix);
                                const Matrix& g = tp.upstream(self);
                                for (std::size_t r = 0; r < g.rows(); ++r) {
                                    for (std::size_t c = 0; c < count; ++c) (*gx)(r, begin + c) += g(r, c);
                                }
                            });
}

Var row(Var x, std::size_t r) {
    const Matrix& xv = x.value();
    if (r >= xv.rows()) throw ShapeMismatch("row index out of range");
    Matrix out(1, xv.cols());
    for (std::size_t c = 0; c < xv.cols(); ++c) out[c] = xv(r, c);
    const std::size_t ix = x.id();
    return x.tape()->record(std::move(out), {x}, [ix, r](Tape& tp, std::size_t self) {
        Matrix* gx = tp.accumulator(ix);
        const Matrix& g = tp.upstream(self);
        for (std::size_t c = 0; c < g.cols(); ++c) (*gx)(r, c) += g[c];
    });
}

Var repeat_cols(Var v, std::size_t n) {
    const Matrix& vv = v.value();
    if (vv.cols() != 1) throw ShapeMismatch("repeat_cols expects a column vector");
    Matrix out(vv.rows(), n);
    for (std::size_t r = 0; r < vv.rows(); ++r) {
        for (std::size_t c = 0; c < n; ++c) out(r, c) = vv[r];
    }
    const std::size_t iv = v.id();
    return v.tape()->record(std::move(out), {v}, [iv](Tape& tp, std::size_t self) {
        Matrix* gv = tp.accumulator(iv);
        const Matrix& g = tp.upstream(self);
        for (std::size_t r = 0; r < g.rows(); ++r) {
            double acc = 0.0;
            for (std::size_t c = 0; c < g.cols(); ++c) acc += g(r, c);
            (*gv)[r] += acc;
        }
    });
}

Var col_dot(Var a, Var b) {
    require_same_shape(a, b, "col_dot");
    const Matrix& av = a.value();
    const Matrix& bv = b.value();
    Matrix out(1, av.cols());
    for (std::size_t r = 0; r < av.rows(); ++r) {
        for (std::size_t c = 0; c < av.cols(); ++c) out[c] += av(r, c) * bv(r, c);
    }
    const std::size_t ia = a.id(), ib = b.id();
    return a.tape()->record(std::move(out), {a, b}, [ia, ib](Tape& tp, std::size_t self) {
        const Matrix& g = tp.upstream(self);
        const Matrix& av = tp.value(ia);
        const Matrix& bv = tp.value(ib);
        Matrix* ga = tp.accumulator(ia);
        Matrix* gb = tp.accumulator(ib);
        for (std::size_t r = 0; r < av.rows(); ++r) {
            for (std::size_t c = 0; c < av.cols(); ++c) {
                if (ga) (*ga)(r, c) += g[c] * bv(r, c);
                if (gb) (*gb)(r, c) += g[c] * av(r, c);
            }
        }
    });
}

Var col_norm(Var a) {
    const Matrix& av = a.value();
    Matrix out(1, av.cols());
    for (std::size_t r = 0; r < av.rows(); ++r) {
        for (std::size_t c = 0; c < av.cols(); ++c) out[c] += av(r, c) * av(r, c);
    }
    for (double& v : out.data()) v = std::sqrt(v);
    const std::size_t ia = a.id();
    return a.tape()->record(std::move(out), {a}, [ia](Tape& tp, std::size_t self) {
        const Matrix& g = tp.upstream(self);
        const Matrix& av = tp.value(ia);
        const Matrix& nv = tp.value(self);
        Matrix* ga = tp.accumulator(ia);
        for (std::size_t r = 0; r < av.rows(); ++r) {
            for (std::size_t c = 0; c < av.cols(); ++c) {
                if (nv[c] > 0.0) (*ga)(r, c) += g[c] * av(r, c) / nv[c];
            }
        }
    });
}

Var operator+(Var a, Var b) {
    require_same_shape(a, b, "add");
    const std::size_t ia = a.id(), ib = b.id();
    return a.tape()->record(a.value() + b.value(), {a, b}, [ia, ib](Tape& tp, std::size_t self) {
        const Matrix& g = tp.upstream(self);
        if (Matrix* ga = tp.accumulator(ia)) *ga += g;
        if (Matrix* gb = tp.accumulator(ib)) *gb += g;
    });
}

Var operator-(Var a, Var b) {
    require_same_shape(a, b, "sub");
    const std::size_t ia = a.id(), ib = b.id();
    return a.tape()->record(a.value() - b.value(), {a, b}, [ia, ib](Tape& tp, std::size_t self) {
        const Matrix& g = tp.upstream(self);
        if (Matrix* ga = tp.accumulator(ia)) *ga += g;
        if (Matrix* gb = tp.accumulator(ib)) *gb -= g;
    });
}

Var operator*(Var a, Var b) {
    require_same_shape(a, b, "mul");
    Matrix out = a.value();
    const Matrix& bv = b.value();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
    const std::size_t ia = a.id(), ib = b.id();
    return a.tape()->record(std::move(out), {a, b}, [ia, ib](Tape& tp, std::size_t self) {
        const Matrix& g = tp.upstream(self);
        const Matrix& av = tp.value(ia);
        const Matrix& bv = tp.value(ib);
        Matrix* ga = tp.accumulator(ia);
        Matrix* gb = tp.accumulator(ib);
        for (std::size_t i = 0; i < g.size(); ++i) {
            if (ga) (*ga)[i] += g[i] * bv[i];
            if (gb) (*gb)[i] += g[i] * av[i];
        }
    });
}

Var operator/(Var a, Var b) {
    require_same_shape(a, b, "div");
    Matrix out = a.value();
    const Matrix& bv = b.value();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] /= bv[i];
    const std::size_t ia = a.id(), ib = b.id();
    return a.tape()->record(std::move(out), {a, b}, [ia, ib](Tape& tp, std::size_t self) {
        const Matrix& g = tp.upstream(self);
        const Matrix& q = tp.value(self);
        const Matrix& bv = tp.value(ib);
        Matrix* ga = tp.accumulator(ia);
        Matrix* gb = tp.accumulator(ib);
        for (std::size_t i = 0; i < g.size(); ++i) {
            if (ga) (*ga)[i] += g[i] / bv[i];
            if (gb) (*gb)[i] -= g[i] * q[i] / bv[i];
        }
    });
}

Var affine(Var x, double a, double b) {
    const std::size_t ix = x.id();
    return elementwise_unary(x, [a, b](double v) { return a * v + b; },
                             [ix, a](Tape& tp, std::size_t self) {
                                 Matrix* gx = tp.accumulator(ix);
                                 const Matrix& g = tp.upstream(self);
                                 for (std::size_t i = 0; i < g.size(); ++i) (*gx)[i] += a * g[i];
                             });
}

Var hinge(Var x) {
    const std::size_t ix = x.id();
    return elementwise_unary(x, [](double v) { return v > 0.0 ? v : 0.0; },
                             [ix](Tape& tp, std::size_t self) {
                                 Matrix* gx = tp.accumulator(ix);
                                 const Matrix& g = tp.upstream(self);
                                 const Matrix& xv = tp.value(ix);
                                 for (std::size_t i = 0; i < g.size(); ++i) {
                                     if (xv[i] > 0.0) (*gx)[i] += g[i];
                                 }
                             });
}

Var log(Var x) {
    const std::size_t ix = x.id();
    return elementwise_unary(x, [](double v) { return std::log(v); },
                             [ix](Tape& tp, std::size_t self) {
                                 Matrix* gx = tp.accumulator(ix);
                                 const Matrix& g = tp.upstream(self);
                                 const Matrix& xv = tp.value(ix);
                                 for (std::size_t i = 0; i < g.size(); ++i) (*gx)[i] += g[i] / xv[i];
                             });
}

Var sigmoid(Var x) {
    const std::size_t ix = x.id();
    return elementwise_unary(
        x,
        [](double v) {
            if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
            const double e = std::exp(v);
            return e / (1.0 + e);
        },
        [ix](Tape& tp, std::size_t self) {
            Matrix* gx = tp.accumulator(ix);
            const Matrix& g = tp.upstream(self);
            const Matrix& s = tp.value(self);
            for (std::size_t i = 0; i < g.size(); ++i) (*gx)[i] += g[i] * s[i] * (1.0 - s[i]);
        });
}

Var log_sigmoid(Var x) {
    const std::size_t ix = x.id();
    return elementwise_unary(x, [](double v) { return std::min(v, 0.0) - std::log1p(std::exp(-std::abs(v))); },
                             [ix](Tape& tp, std::size_t self) {
                                 Matrix* gx = tp.accumulator(ix);
                                 const Matrix& g = tp.upstream(self);
                                 const Matrix& xv = tp.value(ix);
                                 for (std::size_t i = 0; i < g.size(); ++i) {
                                     // d/dx = sigmoid(-x)
                                     const double v = xv[i];
                                     const double s = v <= 0.0 ? 1.0 / (1.0 + std::exp(v)) : std::exp(-v) / (1.0 + std::exp(-v));
                                     (*gx)[i] += g[i] * s;
                                 }
                             });
}

Var clamp(Var x, double lo, double hi) {
    const std::size_t ix = x.id();
    return elementwise_unary(x, [lo, hi](double v) { return std::clamp(v, lo, hi); },
                             [ix, lo, hi](Tape& tp, std::size_t self) {
                                 Matrix* gx = tp.accumulator(ix);
                                 const Matrix& g = tp.upstream(self);
                                 const Matrix& xv = tp.value(ix);
                                 for (std::size_t i = 0; i < g.size(); ++i) {
                                     if (xv[i] >= lo && xv[i] <= hi) (*gx)[i] += g[i];
                                 }
                             });
}

Var sum(Var x) {
    double acc = 0.0;
    for (double v : x.value().data()) acc += v;
    const std::size_t ix = x.id();
    return x.tape()->record(Matrix(1, 1, acc), {x}, [ix](Tape& tp, std::size_t self) {
        Matrix* gx = tp.accumulator(ix);
        const double g = tp.upstream(self)[0];
        for (double& v : gx->data()) v += g;
    });
}

Var mean(Var x) {
    const std::size_t n = x.value().size();
    if (n == 0) throw EmptyBatch("mean of an empty node");
    return affine(sum(x), 1.0 / static_cast<double>(n), 0.0);
}

}  // namespace deepclust
