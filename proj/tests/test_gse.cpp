#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "regenn/errors.hpp"
#include "regenn/gradcheck.hpp"
#include "regenn/gse.hpp"
#include "test_util.hpp"

using namespace regenn;

TEST_CASE("identity configuration is the identity map on Y") {
    GseSourceParams p = GseSourceParams::identity(2);
    Tensor a(Shape{2, 2}, {1, 0, 0, 1});
    RngStream rng(1);
    Tensor y = testutil::random_tensor(Shape{3, 4, 2}, rng);

    Tape tape;
    ForwardCtx ctx{tape, Mode::Eval, nullptr, {}};
    GseSourceOut out = gse_source_forward(ctx, ctx.constant(a), ctx.constant(y), p);
    CHECK(tape.value(out.a_mu).same_values(a));
    CHECK(tape.value(out.y_alpha).max_abs_diff(y) < 1e-12);
}

TEST_CASE("source layer hand computation on a 2-variable graph") {
    GseSourceParams p = GseSourceParams::identity(2);
    Tensor a = Tensor::matrix({{10, 3}, {3, 10}});
    Tensor y(Shape{1, 2, 2}, {1, 0, 0, 1}); // single identity window

    Tape tape;
    ForwardCtx ctx{tape, Mode::Eval, nullptr, {}};
    GseSourceOut out = gse_source_forward(ctx, ctx.constant(a), ctx.constant(y), p);
    // cos rows (10,3),(3,10): off-diagonal 60/109
    const double c = 60.0 / 109.0;
    CHECK(tape.value(out.a_mu).same_values(a));
    const Tensor& ya = tape.value(out.y_alpha);
    CHECK(ya.at(0, 0, 0) == doctest::Approx(1.0));
    CHECK(ya.at(0, 0, 1) == doctest::Approx(c));
    CHECK(ya.at(0, 1, 0) == doctest::Approx(c));
    CHECK(ya.at(0, 1, 1) == doctest::Approx(1.0));
}

TEST_CASE("zero output map absorbs everything") {
    GseSourceParams p = GseSourceParams::identity(2);
    p.w_alpha = Tensor(Shape{2, 2});
    RngStream rng(2);
    Tensor a = testutil::random_tensor(Shape{2, 2}, rng);
    Tensor y = testutil::random_tensor(Shape{2, 3, 2}, rng);

    Tape tape;
    ForwardCtx ctx{tape, Mode::Eval, nullptr, {}};
    GseSourceOut out = gse_source_forward(ctx, ctx.constant(a), ctx.constant(y), p);
    for (double x : tape.value(out.y_alpha).v) CHECK(x == 0.0);
}

TEST_CASE("target layer: identity scaling and absorption") {
    {
        // parameters chosen so A_psi = I
        GseTargetParams p = GseTargetParams::identity(2);
        Tensor a_mu = Tensor::matrix({{1, 0}, {0, 1}});
        RngStream rng(3);
        Tensor y = testutil::random_tensor(Shape{2, 3, 2}, rng);
        Tape tape;
        ForwardCtx ctx{tape, Mode::Eval, nullptr, {}};
        GseTargetOut out = gse_target_forward(ctx, ctx.constant(a_mu), ctx.constant(y), p);
        CHECK(tape.value(out.y_psi).max_abs_diff(y) < 1e-12);
    }
    {
        // zero similarity scaling kills the output
        GseTargetParams p = GseTargetParams::identity(2);
        p.w_eta = Tensor(Shape{2, 2});
        RngStream rng(4);
        Tensor a_mu = testutil::random_tensor(Shape{2, 2}, rng);
        Tensor y = testutil::random_tensor(Shape{2, 3, 2}, rng);
        Tape tape;
        ForwardCtx ctx{tape, Mode::Eval, nullptr, {}};
        GseTargetOut out = gse_target_forward(ctx, ctx.constant(a_mu), ctx.constant(y), p);
        for (double x : tape.value(out.y_psi).v) CHECK(x == 0.0);
    }
}

TEST_CASE("target layer hand computation") {
    GseTargetParams p = GseTargetParams::identity(2);
    Tensor a_mu = Tensor::matrix({{10, 3}, {3, 10}});
    Tensor y(Shape{1, 1, 2}, {1, 0});
    Tape tape;
    ForwardCtx ctx{tape, Mode::Eval, nullptr, {}};
    GseTargetOut out = gse_target_forward(ctx, ctx.constant(a_mu), ctx.constant(y), p);
    CHECK(tape.value(out.a_phi).same_values(a_mu));
    CHECK(tape.value(out.y_psi).at(0, 0, 0) == doctest::Approx(1.0));
    CHECK(tape.value(out.y_psi).at(0, 0, 1) == doctest::Approx(60.0 / 109.0));
}

TEST_CASE("shape preservation for arbitrary extents") {
    RngStream rng(5);
    for (const auto& [s, w, v] : std::vector<std::array<std::size_t, 3>>{
             {1, 1, 1}, {2, 3, 2}, {3, 5, 4}, {1, 7, 3}}) {
        GseSourceParams src = GseSourceParams::init(v, 0.0, rng);
        GseTargetParams tgt = GseTargetParams::init(v, rng);
        Tensor a = testutil::random_tensor(Shape{v, v}, rng);
        Tensor y = testutil::random_tensor(Shape{s, w, v}, rng);
        Tape tape;
        ForwardCtx ctx{tape, Mode::Eval, nullptr, {}};
        GseSourceOut so = gse_source_forward(ctx, ctx.constant(a), ctx.constant(y), src);
        CHECK(tape.value(so.y_alpha).shape == y.shape);
        GseTargetOut to = gse_target_forward(ctx, so.a_mu, so.y_alpha, tgt);
        CHECK(tape.value(to.y_psi).shape == y.shape);
        // the A_mu consumed by the target is the node the source produced
        CHECK(to.a_phi.valid());
    }
}

TEST_CASE("dimension mismatches are rejected") {
    GseSourceParams p = GseSourceParams::identity(2);
    Tape tape;
    ForwardCtx ctx{tape, Mode::Eval, nullptr, {}};
    Var a3 = ctx.constant(Tensor(Shape{3, 3}));
    Var y2 = ctx.constant(Tensor(Shape{1, 2, 2}));
    CHECK_THROWS_AS(gse_source_forward(ctx, a3, y2, p), ShapeError);
    GseTargetParams tp = GseTargetParams::identity(2);
    CHECK_THROWS_AS(gse_target_forward(ctx, a3, y2, tp), ShapeError);
}

TEST_CASE("gradients flow through both layers") {
    // loss = MAE(target(source(Y)), T): every parameter of both layers gets a
    // finite-difference-consistent gradient.
    const std::size_t v = 2;
    RngStream rng(6);
    const Tensor a = Tensor::matrix({{5, 2}, {2, 7}});
    const Tensor y = testutil::random_tensor_off_zero(Shape{2, 3, v}, rng);
    const Tensor target = testutil::random_tensor_off_zero(Shape{2, 3, v}, rng);

    GseSourceParams src = GseSourceParams::init(v, 0.0, rng);
    GseTargetParams tgt = GseTargetParams::init(v, rng);

    std::vector<Tensor*> slots;
    src.for_each_param("s", [&](const std::string&, Tensor& t) { slots.push_back(&t); });
    tgt.for_each_param("t", [&](const std::string&, Tensor& t) { slots.push_back(&t); });

    // One check per parameter tensor: bind it to theta, freeze the rest.
    for (Tensor* slot : slots) {
        auto g = [&](Tape& tape, Var th) -> Var {
            GseSourceParams s2 = src;
            GseTargetParams t2 = tgt;
            std::vector<Tensor*> slots2;
            s2.for_each_param("s", [&](const std::string&, Tensor& t) { slots2.push_back(&t); });
            t2.for_each_param("t", [&](const std::string&, Tensor& t) { slots2.push_back(&t); });
            ForwardCtx ctx{tape, Mode::Eval, nullptr, {}};
            // bind the probed tensor to theta, keep the rest constant
            for (std::size_t i = 0; i < slots.size(); ++i) {
                if (slots[i] == slot) {
                    ctx.bound.emplace(slots2[i], th.id);
                } else {
                    ctx.bound.emplace(slots2[i], ctx.constant(*slots2[i]).id);
                }
            }
            GseSourceOut so = gse_source_forward(ctx, ctx.constant(a), ctx.constant(y), s2);
            GseTargetOut to = gse_target_forward(ctx, so.a_mu, so.y_alpha, t2);
            return tape.mae(to.y_psi, ctx.constant(target));
        };
        Tensor probe = *slot;
        auto res = finite_difference_check(g, probe);
        CHECK(res.max_rel_error < 1e-4);
    }
}

TEST_CASE("evolution weight extraction basics") {
    Tensor a = Tensor::matrix({{10, 3}, {3, 10}});
    Tensor cos_a = cosine_similarity_values(a);
    CHECK(cos_a.at(0, 0) == doctest::Approx(1.0));
    CHECK(cos_a.at(0, 1) == doctest::Approx(60.0 / 109.0));
    CHECK(cos_a.at(0, 1) == cos_a.at(1, 0));
}
