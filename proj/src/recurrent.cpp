#include "regenn/recurrent.hpp"

#include "regenn/errors.hpp"
#include "regenn/init.hpp"

namespace regenn {

CellKind cell_kind_from_string(const std::string& s) {
    if (s == "LSTM" || s == "lstm") return CellKind::LSTM;
    if (s == "GRU" || s == "gru") return CellKind::GRU;
    if (s == "Elman" || s == "elman" || s == "ELMAN") return CellKind::Elman;
    throw UsageError("unknown cell kind '" + s + "' (expected Elman, GRU or LSTM)");
}

std::string to_string(CellKind k) {
    switch (k) {
    case CellKind::LSTM: return "LSTM";
    case CellKind::GRU: return "GRU";
    case CellKind::Elman: return "Elman";
    }
    return "?";
}

std::size_t CellParams::gate_count(CellKind kind) {
    switch (kind) {
    case CellKind::LSTM: return 4;
    case CellKind::GRU: return 3;
    case CellKind::Elman: return 1;
    }
    return 0;
}

namespace {
const char* gate_name(CellKind kind, std::size_t g) {
    static const char* lstm[] = {"f", "i", "o", "c"};
    static const char* gru[] = {"z", "r", "n"};
    static const char* elman[] = {"h"};
    switch (kind) {
    case CellKind::LSTM: return lstm[g];
    case CellKind::GRU: return gru[g];
    case CellKind::Elman: return elman[g];
    }
    return "?";
}
} // namespace

CellParams CellParams::init(CellKind kind, std::size_t input_size, std::size_t hidden,
                            RngStream& rng) {
    CellParams c;
    c.kind = kind;
    const std::size_t n = gate_count(kind);
    c.gates.resize(n);
    for (std::size_t g = 0; g < n; ++g) {
        c.gates[g].w_x = fan_in_init(Shape{input_size, hidden}, hidden, rng);
        c.gates[g].w_h = fan_in_init(Shape{hidden, hidden}, hidden, rng);
        c.gates[g].b = fan_in_init(Shape{hidden}, hidden, rng);
    }
    return c;
}

void CellParams::for_each_param(const std::string& prefix, const ParamVisitor& fn) {
    for (std::size_t g = 0; g < gates.size(); ++g) {
        const std::string base = prefix + "." + gate_name(kind, g);
        fn(base + ".w_x", gates[g].w_x);
        fn(base + ".w_h", gates[g].w_h);
        fn(base + ".b", gates[g].b);
    }
}

RecurrentParams RecurrentParams::init(CellKind kind, Direction dir, std::size_t input_size,
                                      std::size_t hidden, double dropout_p, RngStream& rng) {
    RecurrentParams p;
    p.kind = kind;
    p.direction = dir;
    p.input_size = input_size;
    p.hidden = hidden;
    p.dropout_p = dropout_p;
    p.fwd = CellParams::init(kind, input_size, hidden, rng);
    if (dir == Direction::Bi) p.bwd = CellParams::init(kind, input_size, hidden, rng);
    return p;
}

void RecurrentParams::for_each_param(const std::string& prefix, const ParamVisitor& fn) {
    fwd.for_each_param(prefix + ".fwd", fn);
    if (direction == Direction::Bi) bwd.for_each_param(prefix + ".bwd", fn);
}

namespace {
Var gate_pre(ForwardCtx& ctx, GateParams& g, Var x, Var h) {
    Tape& t = ctx.tape;
    return t.add_bias_last(t.add(t.matmul(x, ctx.param(g.w_x)), t.matmul(h, ctx.param(g.w_h))),
                           ctx.param(g.b));
}
} // namespace

CellState recurrent_cell_step(ForwardCtx& ctx, CellParams& cell, Var x, CellState prev) {
    Tape& t = ctx.tape;
    switch (cell.kind) {
    case CellKind::LSTM: {
        Var f = t.sigmoid(gate_pre(ctx, cell.gates[0], x, prev.h));
        Var i = t.sigmoid(gate_pre(ctx, cell.gates[1], x, prev.h));
        Var o = t.sigmoid(gate_pre(ctx, cell.gates[2], x, prev.h));
        Var cand = t.tanh(gate_pre(ctx, cell.gates[3], x, prev.h));
        Var c = t.add(t.mul(f, prev.c), t.mul(i, cand));
        Var h = t.mul(o, t.tanh(c));
        return CellState{h, c};
    }
    case CellKind::GRU: {
        Var z = t.sigmoid(gate_pre(ctx, cell.gates[0], x, prev.h));
        Var r = t.sigmoid(gate_pre(ctx, cell.gates[1], x, prev.h));
        Var n = t.tanh(t.add(
            t.add_bias_last(t.matmul(x, ctx.param(cell.gates[2].w_x)),
                            ctx.param(cell.gates[2].b)),
            t.mul(r, t.matmul(prev.h, ctx.param(cell.gates[2].w_h)))));
        Var h = t.add(t.mul(t.affine(z, -1.0, 1.0), n), t.mul(z, prev.h));
        return CellState{h, Var{}};
    }
    case CellKind::Elman: {
        Var h = t.tanh(gate_pre(ctx, cell.gates[0], x, prev.h));
        return CellState{h, Var{}};
    }
    }
    throw UsageError("unknown cell kind");
}

CellStepValues recurrent_cell_step_values(CellParams& cell, const Tensor& x, const Tensor& h,
                                          const Tensor& c) {
    if (x.shape.rank() != 1 || h.shape.rank() != 1) {
        throw ShapeError("recurrent_cell_step_values: x and h must be vectors");
    }
    Tape tape;
    ForwardCtx ctx{tape, Mode::Eval, nullptr, {}};
    Var xv = tape.leaf(Tensor(Shape{1, x.shape.extent(0)}, x.v), false);
    CellState prev;
    prev.h = tape.leaf(Tensor(Shape{1, h.shape.extent(0)}, h.v), false);
    if (cell.kind == CellKind::LSTM) {
        Tensor cc = c.numel() == h.numel() ? c : Tensor(h.shape);
        prev.c = tape.leaf(Tensor(Shape{1, h.shape.extent(0)}, std::move(cc.v)), false);
    }
    CellState next = recurrent_cell_step(ctx, cell, xv, prev);
    CellStepValues out;
    out.h = Tensor(h.shape, tape.value(next.h).v);
    if (next.c.valid()) out.c = Tensor(h.shape, tape.value(next.c).v);
    return out;
}

namespace {

/// Runs one direction of the recurrence over the variable axis and returns
/// the emitted hidden state per variable position.
std::vector<Var> run_direction(ForwardCtx& ctx, CellParams& cell, Var input,
                               std::size_t hidden, bool reversed) {
    Tape& t = ctx.tape;
    const Shape s = t.value(input).shape;
    const std::size_t samples = s.extent(0);
    const std::size_t vars = s.extent(2);
    CellState state;
    state.h = t.leaf(Tensor(Shape{samples, hidden}), false);
    if (cell.kind == CellKind::LSTM) state.c = t.leaf(Tensor(Shape{samples, hidden}), false);
    std::vector<Var> emitted(vars);
    for (std::size_t step = 0; step < vars; ++step) {
        const std::size_t pos = reversed ? vars - 1 - step : step;
        Var x = t.col_slice(input, pos);
        state = recurrent_cell_step(ctx, cell, x, state);
        emitted[pos] = state.h;
    }
    return emitted;
}

Var recur_over_variables(ForwardCtx& ctx, Var input, RecurrentParams& params) {
    Tape& t = ctx.tape;
    const Shape s = t.value(input).shape;
    if (s.rank() != 3) {
        throw ShapeError("recurrent decoder expects a rank-3 input, got " + s.to_string());
    }
    if (s.extent(1) != params.input_size) {
        throw ShapeError("recurrent decoder: input slice length " +
                         std::to_string(s.extent(1)) + " does not match input_size " +
                         std::to_string(params.input_size));
    }
    std::vector<Var> states = run_direction(ctx, params.fwd, input, params.hidden, false);
    if (params.direction == Direction::Bi) {
        std::vector<Var> back = run_direction(ctx, params.bwd, input, params.hidden, true);
        for (std::size_t i = 0; i < states.size(); ++i) states[i] = t.add(states[i], back[i]);
    }
    return t.stack_cols(states);
}

} // namespace

Var decode_time_axis(ForwardCtx& ctx, Var y_eps, RecurrentParams& params) {
    Var stacked = recur_over_variables(ctx, y_eps, params);
    return ctx.tape.dropout(stacked, params.dropout_p, ctx.mode, ctx.rng);
}

Var decode_variable_axis(ForwardCtx& ctx, Var y, RecurrentParams& params) {
    if (params.input_size != params.hidden) {
        throw ShapeError("decode_variable_axis: input_size must equal hidden size");
    }
    Var stacked = recur_over_variables(ctx, y, params);
    return ctx.tape.add(y, ctx.tape.dropout(stacked, params.dropout_p, ctx.mode, ctx.rng));
}

} // namespace regenn
