#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "regenn/rng.hpp"
#include "regenn/tensor.hpp"

namespace regenn {

enum class Mode { Train, Eval };
enum class ActKind { Sigmoid, Tanh, Relu, Softmax };

class Tape;

/// Handle to a node on a tape.
struct Var {
    Tape* tape = nullptr;
    std::uint32_t id = 0;
    bool valid() const { return tape != nullptr; }
};

/// Reverse-mode differentiation tape. Nodes are appended in evaluation order,
/// so creation order is a topological order; every node keeps its forward
/// value and a gradient slot that backward() fills by sweeping the nodes in
/// reverse. Gradients at shared nodes accumulate additively.
///
/// A tape is owned by a single forward/backward pass; tensors placed on it
/// are immutable once recorded.
class Tape {
public:
    /// Records an input node. Parameters use requires_grad = true.
    Var leaf(Tensor value, bool requires_grad = false);

    // Element-wise arithmetic (operands must have equal shapes).
    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var mul(Var a, Var b);
    /// out = scale * x + shift
    Var affine(Var x, double scale, double shift);
    /// Adds a length-n bias along the last axis: out[..., j] = x[..., j] + b[j].
    Var add_bias_last(Var x, Var bias);

    /// Batch-wise product with a shared right matrix: X (s×m×n or m×n) times
    /// W (n×p). Rank-2 X is treated as a batch of size 1 and keeps rank 2.
    Var matmul(Var x, Var w);
    /// Fully batched product: X (s×m×n) times Y (s×n×p) -> s×m×p.
    Var bmm(Var x, Var y);
    /// Swaps the last two axes (plain transpose for rank-2 input).
    Var transpose12(Var x);

    Var activation(ActKind kind, Var x);
    Var sigmoid(Var x) { return activation(ActKind::Sigmoid, x); }
    Var tanh(Var x) { return activation(ActKind::Tanh, x); }
    Var relu(Var x) { return activation(ActKind::Relu, x); }
    /// Softmax over the last axis with max-subtraction stabilization.
    Var softmax(Var x) { return activation(ActKind::Softmax, x); }

    /// Inverted dropout: train mode zeroes each element with probability p and
    /// scales survivors by 1/(1-p); eval mode or p = 0 returns x unchanged.
    Var dropout(Var x, double p, Mode mode, RngStream* rng);

    /// Per-last-axis-slice normalization with biased variance and eps = 1e-5:
    /// out = (x - mean) / sqrt(var + eps) * gamma + beta.
    Var layer_norm(Var x, Var gamma, Var beta);

    /// Cosine matrix similarity of a square matrix: S[i,j] is the cosine of
    /// the angle between rows i and j; rows with zero norm yield 0 entries.
    Var cosine_similarity(Var a);

    /// Takes column j of the last axis: x (s×m×n) -> s×m.
    Var col_slice(Var x, std::size_t col);
    /// Stacks k rank-2 tensors (s×m) into s×m×k along a new last axis.
    Var stack_cols(const std::vector<Var>& cols);

    /// Mean absolute error over all elements; returns a scalar node.
    /// Subgradient at ties is 0.
    Var mae(Var a, Var b);
    /// Sum of all elements; returns a scalar node.
    Var sum(Var x);

    const Tensor& value(Var v) const;
    /// Gradient of the last backward() with respect to node v.
    const Tensor& grad(Var v) const;
    Tensor grad_or_zero(Var v) const;
    bool requires_grad(Var v) const;

    /// Reverse sweep from a scalar loss node. Errors on non-scalar loss.
    void backward(Var loss);

    std::size_t size() const { return nodes_.size(); }

private:
    struct Node {
        Tensor value;
        Tensor grad; // empty vector until touched by backward
        bool requires_grad = false;
        std::function<void(Tape&, std::uint32_t)> backprop;
    };

    Var push(Tensor value, bool requires_grad,
             std::function<void(Tape&, std::uint32_t)> backprop);
    const Node& node(Var v) const;
    bool needs(std::uint32_t id) const { return nodes_[id].requires_grad; }
    /// Gradient slot for a node, allocated (zeroed) on first use.
    Tensor& grad_slot(std::uint32_t id);
    void check_same_tape(Var v) const;

    std::vector<Node> nodes_;
};

} // namespace regenn
