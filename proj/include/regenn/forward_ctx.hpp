#pragma once

#include <unordered_map>

#include "regenn/tape.hpp"

namespace regenn {

/// Per-pass context threading the tape, the dropout mode and rng through the
/// layers. Parameter tensors are bound to tape leaves once per pass, keyed by
/// address, so a tensor used by several layers maps to a single node.
struct ForwardCtx {
    Tape& tape;
    Mode mode = Mode::Eval;
    RngStream* rng = nullptr;

    std::unordered_map<const Tensor*, std::uint32_t> bound;

    /// Leaf with requires_grad for a (persistent) parameter tensor.
    Var param(Tensor& t) {
        auto it = bound.find(&t);
        if (it != bound.end()) return Var{&tape, it->second};
        Var v = tape.leaf(t, true);
        bound.emplace(&t, v.id);
        return v;
    }

    /// Leaf without gradient for inputs, targets and fixed matrices.
    Var constant(const Tensor& t) { return tape.leaf(t, false); }

    /// Gradient of the bound parameter after backward (zeros if untouched).
    Tensor grad_of(const Tensor& t) const {
        auto it = bound.find(&t);
        if (it == bound.end()) return Tensor(t.shape);
        return tape.grad_or_zero(Var{const_cast<Tape*>(&tape), it->second});
    }
};

} // namespace regenn
