#pragma once

#include <functional>
#include <string>
#include <vector>

#include "omas/tensor.hpp"

namespace omas {

// Reverse-mode autodiff over a per-graph tape. Nodes are appended in
// topological order (inputs always precede consumers), so the backward
// pass is a single reverse scan with a fixed, deterministic accumulation
// order. There is no global tape: every Var carries its Tape.
//
// Forward values are checked for NaN/Inf after every op; a non-finite
// result throws NumericError so diverging training stops immediately.

enum class OpKind {
    Leaf,
    Add,
    Sub,
    Mul,
    Div,
    MatMul,
    AddRowVec,
    Neg,
    Exp,
    Log,
    Sigmoid,
    Tanh,
    LeakyRelu,
    Square,
    Sqrt,
    Softplus,
    Affine,       // a*x + b
    Clamp,        // clamp to [a, b], zero gradient outside
    RecipClamped, // 1 / max(x, a), zero gradient in the clamped region
    Sum,
    Mean,
    RowL2Norm,    // (n x k) -> (n), L2 norm along axis 1
    MinReduce,    // min along axis; subgradient to the first argmin
    Concat,       // row-wise concatenation
    BroadcastScalar,
    CDist,        // (n x k), (m x k) -> (n x m) pairwise Euclidean distances
};

const char* op_name(OpKind k);

struct TapeNode {
    OpKind kind = OpKind::Leaf;
    std::vector<int> inputs;
    Tensor value;
    Tensor grad;
    double a = 0.0; // first op attribute (slope / lo / epsilon / scale)
    double b = 0.0; // second op attribute (hi / shift)
    int axis = -1;
    bool touched = false; // received gradient during the current backward pass
};

class Tape;

struct Var {
    Tape* tape = nullptr;
    int id = -1;
    bool valid() const { return tape != nullptr && id >= 0; }
};

class Tape {
public:
    Var leaf(Tensor t);
    // Constants share the leaf mechanics; the name records intent only.
    Var constant(Tensor t) { return leaf(std::move(t)); }
    Var scalar(double v) { return leaf(Tensor::scalar(v)); }

    Var add(Var x, Var y);
    Var sub(Var x, Var y);
    Var mul(Var x, Var y);
    Var div(Var x, Var y);
    Var matmul(Var x, Var y);
    Var add_rowvec(Var m, Var v);
    Var neg(Var x);
    Var exp(Var x);
    Var log(Var x);
    Var sigmoid(Var x);
    Var tanh(Var x);
    Var leaky_relu(Var x, double slope = 0.2);
    Var square(Var x);
    Var sqrt(Var x);
    Var softplus(Var x);
    Var affine(Var x, double scale, double shift);
    Var clamp(Var x, double lo, double hi);
    Var recip_clamped(Var x, double eps);
    Var sum(Var x);
    Var mean(Var x);
    Var row_l2norm(Var x);
    Var min_reduce(Var x, int axis = -1);
    Var concat_rows(const std::vector<Var>& xs);
    Var broadcast_scalar(Var x, const Shape& shape);
    Var cdist(Var x, Var y);

    // Gradient of a scalar root w.r.t. every reachable node. Results are
    // readable through grad(); repeated calls recompute from scratch and
    // are bit-identical for the same graph.
    void backward(Var root);
    void zero_grads();

    const Tensor& value(Var v) const { return node(v.id).value; }
    const Tensor& grad(Var v) const { return node(v.id).grad; }
    const Tensor& grad(int id) const { return node(id).grad; }

    size_t size() const { return nodes_.size(); }
    const TapeNode& node(int id) const { return nodes_.at(static_cast<size_t>(id)); }

private:
    Var push(TapeNode n);
    TapeNode& node(int id) { return nodes_.at(static_cast<size_t>(id)); }
    void check_same_tape(Var v) const;
    void propagate(int id);

    std::vector<TapeNode> nodes_;
};

// Central finite differences (f(p+eps e_i) - f(p-eps e_i)) / (2 eps) per
// coordinate. Test oracle for backward(); lives here so any module can
// gradient-check against it.
Tensor finite_difference_gradient(const std::function<double(const Tensor&)>& f,
                                  const Tensor& params, double eps);

} // namespace omas
