#pragma once

#include "regenn/forward_ctx.hpp"
#include "regenn/gse.hpp"

namespace regenn {

/// Single-head self-attention encoder. The variable axis is the attention
/// sequence and the window axis the feature axis (d_k = ω); the input feeds
/// the scaled dot-product directly as query, key and value — there are no
/// projection weights. Two residual + layer-norm stages wrap the attention
/// and a position-wise ω -> d_ff -> ω feed-forward with ReLU.
struct EncoderParams {
    Tensor w_in, b_in;   // ω×d_ff, d_ff
    Tensor w_out, b_out; // d_ff×ω, ω
    Tensor gamma1, beta1; // layer norm after attention (length ω)
    Tensor gamma2, beta2; // layer norm after the feed-forward (length ω)
    double dropout_p = 0.0;

    static EncoderParams init(std::size_t window, std::size_t d_ff, double dropout_p,
                              RngStream& rng);
    void for_each_param(const std::string& prefix, const ParamVisitor& fn);
};

/// Maps s×ω×v to s×ω×v.
Var encoder_forward(ForwardCtx& ctx, Var y_alpha, EncoderParams& params);

} // namespace regenn
