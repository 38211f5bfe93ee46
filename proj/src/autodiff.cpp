#include "omas/autodiff.hpp"

#include <algorithm>
#include <cmath>

namespace omas {

const char* op_name(OpKind k) {
    switch (k) {
        case OpKind::Leaf: return "leaf";
        case OpKind::Add: return "add";
        case OpKind::Sub: return "sub";
        case OpKind::Mul: return "mul";
        case OpKind::Div: return "div";
        case OpKind::MatMul: return "matmul";
        case OpKind::AddRowVec: return "add_rowvec";
        case OpKind::Neg: return "neg";
        case OpKind::Exp: return "exp";
        case OpKind::Log: return "log";
        case OpKind::Sigmoid: return "sigmoid";
        case OpKind::Tanh: return "tanh";
        case OpKind::LeakyRelu: return "leaky_relu";
        case OpKind::Square: return "square";
        case OpKind::Sqrt: return "sqrt";
        case OpKind::Softplus: return "softplus";
        case OpKind::Affine: return "affine";
        case OpKind::Clamp: return "clamp";
        case OpKind::RecipClamped: return "recip_clamped";
        case OpKind::Sum: return "sum";
        case OpKind::Mean: return "mean";
        case OpKind::RowL2Norm: return "row_l2norm";
        case OpKind::MinReduce: return "min_reduce";
        case OpKind::Concat: return "concat";
        case OpKind::BroadcastScalar: return "broadcast_scalar";
        case OpKind::CDist: return "cdist";
    }
    return "?";
}

namespace {

double stable_sigmoid(double x) {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double stable_softplus(double x) {
    // log(1 + e^x) without overflow
    if (x > 0.0) return x + std::log1p(std::exp(-x));
    return std::log1p(std::exp(x));
}

} // namespace

Var Tape::push(TapeNode n) {
    if (n.kind != OpKind::Leaf && !n.value.all_finite())
        throw NumericError(std::string(op_name(n.kind)) + ": non-finite forward value");
    nodes_.push_back(std::move(n));
    return Var{this, static_cast<int>(nodes_.size()) - 1};
}

void Tape::check_same_tape(Var v) const {
    if (v.tape != this || v.id < 0 || static_cast<size_t>(v.id) >= nodes_.size())
        throw ContractError("variable does not belong to this tape");
}

Var Tape::leaf(Tensor t) {
    if (!t.all_finite()) throw NumericError("leaf: non-finite input tensor");
    TapeNode n;
    n.kind = OpKind::Leaf;
    n.value = std::move(t);
    return push(std::move(n));
}

static void require_same_shape(OpKind k, const Tensor& a, const Tensor& b) {
    if (!same_shape(a, b))
        throw ShapeError(std::string(op_name(k)) + ": shapes " + shape_str(a.shape) + " and " +
                         shape_str(b.shape) + " differ");
}

Var Tape::add(Var x, Var y) {
    check_same_tape(x);
    check_same_tape(y);
    const Tensor& a = value(x);
    const Tensor& b = value(y);
    require_same_shape(OpKind::Add, a, b);
    TapeNode n;
    n.kind = OpKind::Add;
    n.inputs = {x.id, y.id};
    n.value = Tensor(a.shape);
    for (size_t i = 0; i < a.numel(); ++i) n.value.values[i] = a.values[i] + b.values[i];
    return push(std::move(n));
}

Var Tape::sub(Var x, Var y) {
    check_same_tape(x);
    check_same_tape(y);
    const Tensor& a = value(x);
    const Tensor& b = value(y);
    require_same_shape(OpKind::Sub, a, b);
    TapeNode n;
    n.kind = OpKind::Sub;
    n.inputs = {x.id, y.id};
    n.value = Tensor(a.shape);
    for (size_t i = 0; i < a.numel(); ++i) n.value.values[i] = a.values[i] - b.values[i];
    return push(std::move(n));
}

Var Tape::mul(Var x, Var y) {
    check_same_tape(x);
    check_same_tape(y);
    const Tensor& a = value(x);
    const Tensor& b = value(y);
    require_same_shape(OpKind::Mul, a, b);
    TapeNode n;
    n.kind = OpKind::Mul;
    n.inputs = {x.id, y.id};
    n.value = Tensor(a.shape);
    for (size_t i = 0; i < a.numel(); ++i) n.value.values[i] = a.values[i] * b.values[i];
    return push(std::move(n));
}

Var Tape::div(Var x, Var y) {
    check_same_tape(x);
    check_same_tape(y);
    const Tensor& a = value(x);
    const Tensor& b = value(y);
    require_same_shape(OpKind::Div, a, b);
    TapeNode n;
    n.kind = OpKind::Div;
    n.inputs = {x.id, y.id};
    n.value = Tensor(a.shape);
    for (size_t i = 0; i < a.numel(); ++i) n.value.values[i] = a.values[i] / b.values[i];
    return push(std::move(n));
}

Var Tape::matmul(Var x, Var y) {
    check_same_tape(x);
    check_same_tape(y);
    const Tensor& a = value(x);
    const Tensor& b = value(y);
    if (a.rank() != 2 || b.rank() != 2 || a.shape[1] != b.shape[0])
        throw ShapeError(std::string("matmul: incompatible shapes ") + shape_str(a.shape) +
                         " and " + shape_str(b.shape));
    const size_t n = a.shape[0], m = a.shape[1], p = b.shape[1];
    TapeNode node;
    node.kind = OpKind::MatMul;
    node.inputs = {x.id, y.id};
    node.value = Tensor(Shape{n, p});
    const double* A = a.values.data();
    const double* B = b.values.data();
    double* C = node.value.values.data();
    for (size_t i = 0; i < n; ++i) {
        for (size_t k = 0; k < m; ++k) {
            const double aik = A[i * m + k];
            const double* Brow = B + k * p;
            double* Crow = C + i * p;
            for (size_t j = 0; j < p; ++j) Crow[j] += aik * Brow[j];
        }
    }
    return push(std::move(node));
}

Var Tape::add_rowvec(Var m, Var v) {
    check_same_tape(m);
    check_same_tape(v);
    const Tensor& a = value(m);
    const Tensor& b = value(v);
    if (a.rank() != 2 || b.rank() != 1 || a.shape[1] != b.shape[0])
        throw ShapeError(std::string("add_rowvec: shapes ") + shape_str(a.shape) + " and " +
                         shape_str(b.shape) + " do not broadcast");
    TapeNode n;
    n.kind = OpKind::AddRowVec;
    n.inputs = {m.id, v.id};
    n.value = Tensor(a.shape);
    const size_t rows = a.shape[0], cols = a.shape[1];
    for (size_t r = 0; r < rows; ++r)
        for (size_t c = 0; c < cols; ++c)
            n.value.values[r * cols + c] = a.values[r * cols + c] + b.values[c];
    return push(std::move(n));
}

namespace {

template <typename F>
TapeNode unary_node(OpKind kind, Var x, const Tensor& in, F&& f) {
    TapeNode n;
    n.kind = kind;
    n.inputs = {x.id};
    n.value = Tensor(in.shape);
    for (size_t i = 0; i < in.numel(); ++i) n.value.values[i] = f(in.values[i]);
    return n;
}

} // namespace

Var Tape::neg(Var x) {
    check_same_tape(x);
    return push(unary_node(OpKind::Neg, x, value(x), [](double v) { return -v; }));
}

Var Tape::exp(Var x) {
    check_same_tape(x);
    return push(unary_node(OpKind::Exp, x, value(x), [](double v) { return std::exp(v); }));
}

Var Tape::log(Var x) {
    check_same_tape(x);
    return push(unary_node(OpKind::Log, x, value(x), [](double v) { return std::log(v); }));
}

Var Tape::sigmoid(Var x) {
    check_same_tape(x);
    return push(unary_node(OpKind::Sigmoid, x, value(x), stable_sigmoid));
}

Var Tape::tanh(Var x) {
    check_same_tape(x);
    return push(unary_node(OpKind::Tanh, x, value(x), [](double v) { return std::tanh(v); }));
}

Var Tape::leaky_relu(Var x, double slope) {
    check_same_tape(x);
    TapeNode n = unary_node(OpKind::LeakyRelu, x, value(x),
                            [slope](double v) { return v >= 0.0 ? v : slope * v; });
    n.a = slope;
    return push(std::move(n));
}

Var Tape::square(Var x) {
    check_same_tape(x);
    return push(unary_node(OpKind::Square, x, value(x), [](double v) { return v * v; }));
}

Var Tape::sqrt(Var x) {
    check_same_tape(x);
    return push(unary_node(OpKind::Sqrt, x, value(x), [](double v) { return std::sqrt(v); }));
}

Var Tape::softplus(Var x) {
    check_same_tape(x);
    return push(unary_node(OpKind::Softplus, x, value(x), stable_softplus));
}

Var Tape::affine(Var x, double scale, double shift) {
    check_same_tape(x);
    TapeNode n = unary_node(OpKind::Affine, x, value(x),
                            [scale, shift](double v) { return scale * v + shift; });
    n.a = scale;
    n.b = shift;
    return push(std::move(n));
}

Var Tape::clamp(Var x, double lo, double hi) {
    check_same_tape(x);
    TapeNode n = unary_node(OpKind::Clamp, x, value(x),
                            [lo, hi](double v) { return std::min(std::max(v, lo), hi); });
    n.a = lo;
    n.b = hi;
    return push(std::move(n));
}

Var Tape::recip_clamped(Var x, double eps) {
    check_same_tape(x);
    TapeNode n = unary_node(OpKind::RecipClamped, x, value(x),
                            [eps](double v) { return 1.0 / std::max(v, eps); });
    n.a = eps;
    return push(std::move(n));
}

Var Tape::sum(Var x) {
    check_same_tape(x);
    const Tensor& a = value(x);
    double s = 0.0;
    for (double v : a.values) s += v;
    TapeNode n;
    n.kind = OpKind::Sum;
    n.inputs = {x.id};
    n.value = Tensor::scalar(s);
    return push(std::move(n));
}

Var Tape::mean(Var x) {
    check_same_tape(x);
    const Tensor& a = value(x);
    if (a.numel() == 0) throw ContractError("mean: empty tensor");
    double s = 0.0;
    for (double v : a.values) s += v;
    TapeNode n;
    n.kind = OpKind::Mean;
    n.inputs = {x.id};
    n.value = Tensor::scalar(s / static_cast<double>(a.numel()));
    return push(std::move(n));
}

Var Tape::row_l2norm(Var x) {
    check_same_tape(x);
    const Tensor& a = value(x);
    if (a.rank() != 2)
        throw ShapeError("row_l2norm: expected matrix, got " + shape_str(a.shape));
    const size_t rows = a.shape[0], cols = a.shape[1];
    TapeNode n;
    n.kind = OpKind::RowL2Norm;
    n.inputs = {x.id};
    n.value = Tensor(Shape{rows});
    for (size_t r = 0; r < rows; ++r) {
        double s = 0.0;
        for (size_t c = 0; c < cols; ++c) {
            const double v = a.values[r * cols + c];
            s += v * v;
        }
        n.value.values[r] = std::sqrt(s);
    }
    return push(std::move(n));
}

Var Tape::min_reduce(Var x, int axis) {
    check_same_tape(x);
    const Tensor& a = value(x);
    if (a.numel() == 0) throw ContractError("min_reduce: empty tensor");
    TapeNode n;
    n.kind = OpKind::MinReduce;
    n.inputs = {x.id};
    n.axis = axis;
    if (a.rank() <= 1 || axis < 0) {
        n.axis = -1;
        n.value = Tensor::scalar(*std::min_element(a.values.begin(), a.values.end()));
    } else if (a.rank() == 2 && axis == 1) {
        const size_t rows = a.shape[0], cols = a.shape[1];
        n.value = Tensor(Shape{rows});
        for (size_t r = 0; r < rows; ++r) {
            double m = a.values[r * cols];
            for (size_t c = 1; c < cols; ++c) m = std::min(m, a.values[r * cols + c]);
            n.value.values[r] = m;
        }
    } else if (a.rank() == 2 && axis == 0) {
        const size_t rows = a.shape[0], cols = a.shape[1];
        n.value = Tensor(Shape{cols});
        for (size_t c = 0; c < cols; ++c) {
            double m = a.values[c];
            for (size_t r = 1; r < rows; ++r) m = std::min(m, a.values[r * cols + c]);
            n.value.values[c] = m;
        }
    } else {
        throw ShapeError("min_reduce: axis " + std::to_string(axis) + " invalid for shape " +
                         shape_str(a.shape));
    }
    return push(std::move(n));
}

Var Tape::concat_rows(const std::vector<Var>& xs) {
    if (xs.empty()) throw ContractError("concat: no inputs");
    for (Var v : xs) check_same_tape(v);
    const Tensor& first = value(xs[0]);
    if (first.rank() == 1) {
        size_t total = 0;
        for (Var v : xs) {
            if (value(v).rank() != 1)
                throw ShapeError("concat: mixing ranks");
            total += value(v).numel();
        }
        TapeNode n;
        n.kind = OpKind::Concat;
        n.value = Tensor(Shape{total});
        size_t off = 0;
        for (Var v : xs) {
            n.inputs.push_back(v.id);
            const Tensor& t = value(v);
            std::copy(t.values.begin(), t.values.end(), n.value.values.begin() + off);
            off += t.numel();
        }
        return push(std::move(n));
    }
    const size_t cols = first.shape.at(1);
    size_t rows = 0;
    for (Var v : xs) {
        const Tensor& t = value(v);
        if (t.rank() != 2 || t.shape[1] != cols)
            throw ShapeError(std::string("concat: shapes ") + shape_str(first.shape) + " and " +
                             shape_str(t.shape) + " disagree on columns");
        rows += t.shape[0];
    }
    TapeNode n;
    n.kind = OpKind::Concat;
    n.value = Tensor(Shape{rows, cols});
    size_t off = 0;
    for (Var v : xs) {
        n.inputs.push_back(v.id);
        const Tensor& t = value(v);
        std::copy(t.values.begin(), t.values.end(), n.value.values.begin() + off);
        off += t.numel();
    }
    return push(std::move(n));
}

Var Tape::broadcast_scalar(Var x, const Shape& shape) {
    check_same_tape(x);
    const Tensor& a = value(x);
    if (a.numel() != 1)
        throw ShapeError("broadcast_scalar: input has shape " + shape_str(a.shape));
    TapeNode n;
    n.kind = OpKind::BroadcastScalar;
    n.inputs = {x.id};
    n.value = Tensor(shape, a.values[0]);
    return push(std::move(n));
}

Var Tape::cdist(Var x, Var y) {
    check_same_tape(x);
    check_same_tape(y);
    const Tensor& a = value(x);
    const Tensor& b = value(y);
    if (a.rank() != 2 || b.rank() != 2 || a.shape[1] != b.shape[1])
        throw ShapeError(std::string("cdist: shapes ") + shape_str(a.shape) + " and " +
                         shape_str(b.shape) + " disagree on point dimension");
    const size_t n = a.shape[0], m = b.shape[0], k = a.shape[1];
    TapeNode node;
    node.kind = OpKind::CDist;
    node.inputs = {x.id, y.id};
    node.value = Tensor(Shape{n, m});
    for (size_t i = 0; i < n; ++i) {
        const double* pa = a.values.data() + i * k;
        for (size_t j = 0; j < m; ++j) {
            const double* pb = b.values.data() + j * k;
            double s = 0.0;
            for (size_t c = 0; c < k; ++c) {
                const double d = pa[c] - pb[c];
                s += d * d;
            }
            node.value.values[i * m + j] = std::sqrt(s);
        }
    }
    return push(std::move(node));
}

void Tape::zero_grads() {
    for (auto& n : nodes_) {
        n.grad = Tensor(n.value.shape);
        n.touched = false;
    }
}

void Tape::backward(Var root) {
    check_same_tape(root);
    if (!value(root).is_scalar() && value(root).numel() != 1)
        throw ContractError("backward: root must be scalar, got shape " +
                            shape_str(value(root).shape));
    zero_grads();
    TapeNode& r = node(root.id);
    r.grad.values[0] = 1.0;
    r.touched = true;
    for (int id = root.id; id >= 0; --id) {
        if (node(id).touched) propagate(id);
    }
}

void Tape::propagate(int id) {
    TapeNode& n = node(id);
    auto touch = [this](int input) { node(input).touched = true; };
    switch (n.kind) {
        case OpKind::Leaf:
            return;
        case OpKind::Add: {
            TapeNode& a = node(n.inputs[0]);
            TapeNode& b = node(n.inputs[1]);
            for (size_t i = 0; i < n.grad.numel(); ++i) {
                a.grad.values[i] += n.grad.values[i];
                b.grad.values[i] += n.grad.values[i];
            }
            touch(n.inputs[0]);
            touch(n.inputs[1]);
            return;
        }
        case OpKind::Sub: {
            TapeNode& a = node(n.inputs[0]);
            TapeNode& b = node(n.inputs[1]);
            for (size_t i = 0; i < n.grad.numel(); ++i) {
                a.grad.values[i] += n.grad.values[i];
                b.grad.values[i] -= n.grad.values[i];
            }
            touch(n.inputs[0]);
            touch(n.inputs[1]);
            return;
        }
        case OpKind::Mul: {
            TapeNode& a = node(n.inputs[0]);
            TapeNode& b = node(n.inputs[1]);
            for (size_t i = 0; i < n.grad.numel(); ++i) {
                a.grad.values[i] += n.grad.values[i] * b.value.values[i];
                b.grad.values[i] += n.grad.values[i] * a.value.values[i];
            }
            touch(n.inputs[0]);
            touch(n.inputs[1]);
            return;
        }
        case OpKind::Div: {
            TapeNode& a = node(n.inputs[0]);
            TapeNode& b = node(n.inputs[1]);
            for (size_t i = 0; i < n.grad.numel(); ++i) {
                const double bv = b.value.values[i];
                a.grad.values[i] += n.grad.values[i] / bv;
                b.grad.values[i] -= n.grad.values[i] * a.value.values[i] / (bv * bv);
            }
            touch(n.inputs[0]);
            touch(n.inputs[1]);
            return;
        }
        case OpKind::MatMul: {
            TapeNode& a = node(n.inputs[0]);
            TapeNode& b = node(n.inputs[1]);
            const size_t rows = a.value.shape[0], inner = a.value.shape[1],
                         cols = b.value.shape[1];
            const double* G = n.grad.values.data();
            const double* A = a.value.values.data();
            const double* B = b.value.values.data();
            double* dA = a.grad.values.data();
            double* dB = b.grad.values.data();
            // dA = G * B^T
            for (size_t i = 0; i < rows; ++i)
                for (size_t j = 0; j < cols; ++j) {
                    const double g = G[i * cols + j];
                    const double* Brow = B; // B[k*cols + j]
                    for (size_t k = 0; k < inner; ++k) dA[i * inner + k] += g * Brow[k * cols + j];
                }
            // dB = A^T * G
            for (size_t k = 0; k < inner; ++k)
                for (size_t i = 0; i < rows; ++i) {
                    const double av = A[i * inner + k];
                    const double* Grow = G + i * cols;
                    double* dBrow = dB + k * cols;
                    for (size_t j = 0; j < cols; ++j) dBrow[j] += av * Grow[j];
                }
            touch(n.inputs[0]);
            touch(n.inputs[1]);
            return;
        }
        case OpKind::AddRowVec: {
            TapeNode& a = node(n.inputs[0]);
            TapeNode& b = node(n.inputs[1]);
            const size_t rows = a.value.shape[0], cols = a.value.shape[1];
            for (size_t r = 0; r < rows; ++r)
                for (size_t c = 0; c < cols; ++c) {
                    const double g = n.grad.values[r * cols + c];
                    a.grad.values[r * cols + c] += g;
                    b.grad.values[c] += g;
                }
            touch(n.inputs[0]);
            touch(n.inputs[1]);
            return;
        }
        case OpKind::Neg: {
            TapeNode& a = node(n.inputs[0]);
            for (size_t i = 0; i < n.grad.numel(); ++i) a.grad.values[i] -= n.grad.values[i];
            touch(n.inputs[0]);
            return;
        }
        case OpKind::Exp: {
            TapeNode& a = node(n.inputs[0]);
            for (size_t i = 0; i < n.grad.numel(); ++i)
                a.grad.values[i] += n.grad.values[i] * n.value.values[i];
            touch(n.inputs[0]);
            return;
        }
        case OpKind::Log: {
            TapeNode& a = node(n.inputs[0]);
            for (size_t i = 0; i < n.grad.numel(); ++i)
                a.grad.values[i] += n.grad.values[i] / a.value.values[i];
            touch(n.inputs[0]);
            return;
        }
        case OpKind::Sigmoid: {
            TapeNode& a = node(n.inputs[0]);
            for (size_t i = 0; i < n.grad.numel(); ++i) {
                const double s = n.value.values[i];
                a.grad.values[i] += n.grad.values[i] * s * (1.0 - s);
            }
            touch(n.inputs[0]);
            return;
        }
        case OpKind::Tanh: {
            TapeNode& a = node(n.inputs[0]);
            for (size_t i = 0; i < n.grad.numel(); ++i) {
                const double t = n.value.values[i];
                a.grad.values[i] += n.grad.values[i] * (1.0 - t * t);
            }
            touch(n.inputs[0]);
            return;
        }
        case OpKind::LeakyRelu: {
            TapeNode& a = node(n.inputs[0]);
            for (size_t i = 0; i < n.grad.numel(); ++i) {
                const double x = a.value.values[i];
                a.grad.values[i] += n.grad.values[i] * (x >= 0.0 ? 1.0 : n.a);
            }
            touch(n.inputs[0]);
            return;
        }
        case OpKind::Square: {
            TapeNode& a = node(n.inputs[0]);
            for (size_t i = 0; i < n.grad.numel(); ++i)
                a.grad.values[i] += n.grad.values[i] * 2.0 * a.value.values[i];
            touch(n.inputs[0]);
            return;
        }
        case OpKind::Sqrt: {
            TapeNode& a = node(n.inputs[0]);
            for (size_t i = 0; i < n.grad.numel(); ++i)
                a.grad.values[i] += n.grad.values[i] * 0.5 / n.value.values[i];
            touch(n.inputs[0]);
            return;
        }
        case OpKind::Softplus: {
            TapeNode& a = node(n.inputs[0]);
            for (size_t i = 0; i < n.grad.numel(); ++i)
                a.grad.values[i] += n.grad.values[i] * stable_sigmoid(a.value.values[i]);
            touch(n.inputs[0]);
            return;
        }
        case OpKind::Affine: {
            TapeNode& a = node(n.inputs[0]);
            for (size_t i = 0; i < n.grad.numel(); ++i)
                a.grad.values[i] += n.grad.values[i] * n.a;
            touch(n.inputs[0]);
            return;
        }
        case OpKind::Clamp: {
            TapeNode& a = node(n.inputs[0]);
            for (size_t i = 0; i < n.grad.numel(); ++i) {
                const double x = a.value.values[i];
                if (x > n.a && x < n.b) a.grad.values[i] += n.grad.values[i];
            }
            touch(n.inputs[0]);
            return;
        }
        case OpKind::RecipClamped: {
            TapeNode& a = node(n.inputs[0]);
            for (size_t i = 0; i < n.grad.numel(); ++i) {
                const double x = a.value.values[i];
                if (x > n.a) a.grad.values[i] -= n.grad.values[i] / (x * x);
            }
            touch(n.inputs[0]);
            return;
        }
        case OpKind::Sum: {
            TapeNode& a = node(n.inputs[0]);
            const double g = n.grad.values[0];
            for (double& v : a.grad.values) v += g;
            touch(n.inputs[0]);
            return;
        }
        case OpKind::Mean: {
            TapeNode& a = node(n.inputs[0]);
            const double g = n.grad.values[0] / static_cast<double>(a.value.numel());
            for (double& v : a.grad.values) v += g;
            touch(n.inputs[0]);
            return;
        }
        case OpKind::RowL2Norm: {
            TapeNode& a = node(n.inputs[0]);
            const size_t rows = a.value.shape[0], cols = a.value.shape[1];
            for (size_t r = 0; r < rows; ++r) {
                const double norm = n.value.values[r];
                if (norm <= 0.0) continue;
                const double g = n.grad.values[r] / norm;
                for (size_t c = 0; c < cols; ++c)
                    a.grad.values[r * cols + c] += g * a.value.values[r * cols + c];
            }
            touch(n.inputs[0]);
            return;
        }
        case OpKind::MinReduce: {
            TapeNode& a = node(n.inputs[0]);
            if (n.axis == -1) {
                size_t arg = 0;
                for (size_t i = 1; i < a.value.numel(); ++i)
                    if (a.value.values[i] < a.value.values[arg]) arg = i;
                a.grad.values[arg] += n.grad.values[0];
            } else if (n.axis == 1) {
                const size_t rows = a.value.shape[0], cols = a.value.shape[1];
                for (size_t r = 0; r < rows; ++r) {
                    size_t arg = 0;
                    for (size_t c = 1; c < cols; ++c)
                        if (a.value.values[r * cols + c] < a.value.values[r * cols + arg]) arg = c;
                    a.grad.values[r * cols + arg] += n.grad.values[r];
                }
            } else {
                const size_t rows = a.value.shape[0], cols = a.value.shape[1];
                for (size_t c = 0; c < cols; ++c) {
                    size_t arg = 0;
                    for (size_t r = 1; r < rows; ++r)
                        if (a.value.values[r * cols + c] < a.value.values[arg * cols + c]) arg = r;
                    a.grad.values[arg * cols + c] += n.grad.values[c];
                }
            }
            touch(n.inputs[0]);
            return;
        }
        case OpKind::Concat: {
            size_t off = 0;
            for (int input : n.inputs) {
                TapeNode& a = node(input);
                for (size_t i = 0; i < a.value.numel(); ++i)
                    a.grad.values[i] += n.grad.values[off + i];
                off += a.value.numel();
                touch(input);
            }
            return;
        }
        case OpKind::BroadcastScalar: {
            TapeNode& a = node(n.inputs[0]);
            double s = 0.0;
            for (double g : n.grad.values) s += g;
            a.grad.values[0] += s;
            touch(n.inputs[0]);
            return;
        }
        case OpKind::CDist: {
            TapeNode& a = node(n.inputs[0]);
            TapeNode& b = node(n.inputs[1]);
            const size_t rows = a.value.shape[0], cols = b.value.shape[0],
                         k = a.value.shape[1];
            for (size_t i = 0; i < rows; ++i) {
                for (size_t j = 0; j < cols; ++j) {
                    const double g = n.grad.values[i * cols + j];
                    if (g == 0.0) continue;
                    const double d = n.value.values[i * cols + j];
                    if (d <= 0.0) continue; // coincident points: zero subgradient
                    const double scale = g / d;
                    for (size_t c = 0; c < k; ++c) {
                        const double diff = a.value.values[i * k + c] - b.value.values[j * k + c];
                        a.grad.values[i * k + c] += scale * diff;
                        b.grad.values[j * k + c] -= scale * diff;
                    }
                }
            }
            touch(n.inputs[0]);
            touch(n.inputs[1]);
            return;
        }
    }
}

Tensor finite_difference_gradient(const std::function<double(const Tensor&)>& f,
                                  const Tensor& params, double eps) {
    if (!(eps > 0.0)) throw ContractError("finite_difference_gradient: eps must be > 0");
    Tensor grad(params.shape);
    Tensor p = params;
    for (size_t i = 0; i < p.numel(); ++i) {
        const double orig = p.values[i];
        p.values[i] = orig + eps;
        const double fp = f(p);
        p.values[i] = orig - eps;
        const double fm = f(p);
        p.values[i] = orig;
        grad.values[i] = (fp - fm) / (2.0 * eps);
    }
    return grad;
}

} // namespace omas
