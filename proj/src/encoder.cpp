#include "regenn/encoder.hpp"

#include <cmath>

#include "regenn/errors.hpp"
#include "regenn/init.hpp"

namespace regenn {

EncoderParams EncoderParams::init(std::size_t window, std::size_t d_ff, double dropout_p,
                                  RngStream& rng) {
    EncoderParams p;
    p.w_in = fan_in_init(Shape{window, d_ff}, window, rng);
    p.b_in = fan_in_init(Shape{d_ff}, window, rng);
    p.w_out = fan_in_init(Shape{d_ff, window}, d_ff, rng);
    p.b_out = fan_in_init(Shape{window}, d_ff, rng);
    p.gamma1 = Tensor::full(Shape{window}, 1.0);
    p.beta1 = Tensor(Shape{window});
    p.gamma2 = Tensor::full(Shape{window}, 1.0);
    p.beta2 = Tensor(Shape{window});
    p.dropout_p = dropout_p;
    return p;
}

void EncoderParams::for_each_param(const std::string& prefix, const ParamVisitor& fn) {
    fn(prefix + ".w_in", w_in);
    fn(prefix + ".b_in", b_in);
    fn(prefix + ".w_out", w_out);
    fn(prefix + ".b_out", b_out);
    fn(prefix + ".gamma1", gamma1);
    fn(prefix + ".beta1", beta1);
    fn(prefix + ".gamma2", gamma2);
    fn(prefix + ".beta2", beta2);
}

Var encoder_forward(ForwardCtx& ctx, Var y_alpha, EncoderParams& params) {
    Tape& t = ctx.tape;
    const Shape in_shape = t.value(y_alpha).shape;
    if (in_shape.rank() != 3) {
        throw ShapeError("encoder_forward: expected s×ω×v input, got " + in_shape.to_string());
    }
    const std::size_t window = in_shape.extent(1);
    if (params.w_in.shape.extent(0) != window) {
        throw ShapeError("encoder_forward: window " + std::to_string(window) +
                         " does not match feed-forward weights " +
                         params.w_in.shape.to_string());
    }

    // Sequence view: s×v×ω.
    Var x = t.transpose12(y_alpha);
    Var scores = t.affine(t.bmm(x, t.transpose12(x)),
                          1.0 / std::sqrt(static_cast<double>(window)), 0.0);
    Var attn = t.bmm(t.softmax(scores), x);

    Var x1 = t.layer_norm(t.add(x, t.dropout(attn, params.dropout_p, ctx.mode, ctx.rng)),
                          ctx.param(params.gamma1), ctx.param(params.beta1));

    Var hidden = t.relu(t.add_bias_last(t.matmul(x1, ctx.param(params.w_in)),
                                        ctx.param(params.b_in)));
    Var ffn = t.add_bias_last(
        t.matmul(t.dropout(hidden, params.dropout_p, ctx.mode, ctx.rng),
                 ctx.param(params.w_out)),
        ctx.param(params.b_out));

    Var x2 = t.layer_norm(t.add(x1, t.dropout(ffn, params.dropout_p, ctx.mode, ctx.rng)),
                          ctx.param(params.gamma2), ctx.param(params.beta2));
    return t.transpose12(x2);
}

} // namespace regenn
