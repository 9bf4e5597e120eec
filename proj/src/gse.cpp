#include "regenn/gse.hpp"

#include "regenn/errors.hpp"
#include "regenn/init.hpp"

namespace regenn {

GseSourceParams GseSourceParams::init(std::size_t v, double dropout_p, RngStream& rng) {
    GseSourceParams p;
    p.w_mu = fan_in_init(Shape{v, v}, v, rng);
    p.b_mu = fan_in_init(Shape{v}, v, rng);
    p.w_eta = fan_in_init(Shape{v, v}, v, rng);
    p.b_eta = fan_in_init(Shape{v}, v, rng);
    p.w_alpha = fan_in_init(Shape{v, v}, v, rng);
    p.b_alpha = fan_in_init(Shape{v}, v, rng);
    p.dropout_p = dropout_p;
    return p;
}

GseSourceParams GseSourceParams::identity(std::size_t v) {
    GseSourceParams p;
    p.w_mu = identity_matrix(v);
    p.b_mu = Tensor(Shape{v});
    p.w_eta = Tensor::full(Shape{v, v}, 1.0);
    p.b_eta = Tensor(Shape{v});
    p.w_alpha = identity_matrix(v);
    p.b_alpha = Tensor(Shape{v});
    p.dropout_p = 0.0;
    return p;
}

void GseSourceParams::for_each_param(const std::string& prefix, const ParamVisitor& fn) {
    fn(prefix + ".w_mu", w_mu);
    fn(prefix + ".b_mu", b_mu);
    fn(prefix + ".w_eta", w_eta);
    fn(prefix + ".b_eta", b_eta);
    fn(prefix + ".w_alpha", w_alpha);
    fn(prefix + ".b_alpha", b_alpha);
}

GseTargetParams GseTargetParams::init(std::size_t v, RngStream& rng) {
    GseTargetParams p;
    p.w_mu = fan_in_init(Shape{v, v}, v, rng);
    p.b_mu = fan_in_init(Shape{v}, v, rng);
    p.w_eta = fan_in_init(Shape{v, v}, v, rng);
    p.b_eta = fan_in_init(Shape{v}, v, rng);
    return p;
}

GseTargetParams GseTargetParams::identity(std::size_t v) {
    GseTargetParams p;
    p.w_mu = identity_matrix(v);
    p.b_mu = Tensor(Shape{v});
    p.w_eta = Tensor::full(Shape{v, v}, 1.0);
    p.b_eta = Tensor(Shape{v});
    return p;
}

void GseTargetParams::for_each_param(const std::string& prefix, const ParamVisitor& fn) {
    fn(prefix + ".w_mu", w_mu);
    fn(prefix + ".b_mu", b_mu);
    fn(prefix + ".w_eta", w_eta);
    fn(prefix + ".b_eta", b_eta);
}

namespace {
void check_variable_axis(const Shape& y, const Shape& a, const char* who) {
    if (a.rank() != 2 || a.extent(0) != a.extent(1)) {
        throw ShapeError(std::string(who) + ": adjacency must be square, got " + a.to_string());
    }
    if (y.rank() != 3 || y.extent(2) != a.extent(0)) {
        throw ShapeError(std::string(who) + ": variable axis of " + y.to_string() +
                         " does not match adjacency " + a.to_string());
    }
}
} // namespace

GseSourceOut gse_source_forward(ForwardCtx& ctx, Var adjacency, Var y,
                                GseSourceParams& params) {
    Tape& t = ctx.tape;
    check_variable_axis(t.value(y).shape, t.value(adjacency).shape, "gse_source_forward");
    Var a_mu = t.add_bias_last(t.matmul(ctx.param(params.w_mu), adjacency),
                               ctx.param(params.b_mu));
    Var a_eta = t.add_bias_last(
        t.mul(ctx.param(params.w_eta), t.cosine_similarity(a_mu)), ctx.param(params.b_eta));
    Var mixed = t.dropout(t.matmul(y, a_eta), params.dropout_p, ctx.mode, ctx.rng);
    Var y_alpha =
        t.add_bias_last(t.matmul(mixed, ctx.param(params.w_alpha)), ctx.param(params.b_alpha));
    return GseSourceOut{y_alpha, a_mu, a_eta};
}

GseTargetOut gse_target_forward(ForwardCtx& ctx, Var a_mu, Var y_tilde,
                                GseTargetParams& params) {
    Tape& t = ctx.tape;
    check_variable_axis(t.value(y_tilde).shape, t.value(a_mu).shape, "gse_target_forward");
    Var a_phi = t.add_bias_last(t.matmul(ctx.param(params.w_mu), a_mu),
                                ctx.param(params.b_mu));
    Var a_psi = t.add_bias_last(
        t.mul(ctx.param(params.w_eta), t.cosine_similarity(a_phi)), ctx.param(params.b_eta));
    Var y_psi = t.matmul(y_tilde, a_psi);
    return GseTargetOut{y_psi, a_phi, a_psi};
}

Tensor cosine_similarity_values(const Tensor& square) {
    Tape t;
    Var a = t.leaf(square, false);
    return t.value(t.cosine_similarity(a));
}

} // namespace regenn
