#pragma once

#include <string>
#include <vector>

#include "regenn/forward_ctx.hpp"
#include "regenn/gse.hpp"

namespace regenn {

enum class CellKind { LSTM, GRU, Elman };
enum class Direction { Uni, Bi };

CellKind cell_kind_from_string(const std::string& s);
std::string to_string(CellKind k);

/// One gate: pre-activation = x·w_x + h·w_h + b.
struct GateParams {
    Tensor w_x; // input_size×hidden
    Tensor w_h; // hidden×hidden
    Tensor b;   // hidden
};

/// Parameters of a single recurrence direction. LSTM holds four gates
/// (forget, input, output, candidate), GRU three (update, reset, candidate),
/// Elman one.
struct CellParams {
    CellKind kind = CellKind::LSTM;
    std::vector<GateParams> gates;

    static CellParams init(CellKind kind, std::size_t input_size, std::size_t hidden,
                           RngStream& rng);
    static std::size_t gate_count(CellKind kind);
    void for_each_param(const std::string& prefix, const ParamVisitor& fn);
};

/// A recurrent decoder unit. Bidirectional units hold two independent
/// parameter sets and sum the hidden states of both directions.
struct RecurrentParams {
    CellKind kind = CellKind::LSTM;
    Direction direction = Direction::Uni;
    std::size_t input_size = 0;
    std::size_t hidden = 0;
    CellParams fwd, bwd; // bwd used only when bidirectional
    double dropout_p = 0.0;

    static RecurrentParams init(CellKind kind, Direction dir, std::size_t input_size,
                                std::size_t hidden, double dropout_p, RngStream& rng);
    void for_each_param(const std::string& prefix, const ParamVisitor& fn);
};

struct CellState {
    Var h;
    Var c; // LSTM only; invalid otherwise
};

/// One step of the recurrence on the tape; x is a batch of input rows (s×in),
/// prev holds s×hidden state rows.
CellState recurrent_cell_step(ForwardCtx& ctx, CellParams& cell, Var x, CellState prev);

/// Plain-tensor convenience for a single input vector with explicit state.
struct CellStepValues {
    Tensor h;
    Tensor c;
};
CellStepValues recurrent_cell_step_values(CellParams& cell, const Tensor& x, const Tensor& h,
                                          const Tensor& c);

/// First decoder pass: the variable axis is the recurrence sequence, each
/// step consumes a length-ω feature slice and emits a length-z hidden state,
/// turning s×ω×v into s×z×v. Emitted states pass through dropout.
Var decode_time_axis(ForwardCtx& ctx, Var y_eps, RecurrentParams& params);

/// Second decoder pass over the variable axis with length-z slices; output is
/// the input plus dropout of the hidden states (residual), shape unchanged.
Var decode_variable_axis(ForwardCtx& ctx, Var y, RecurrentParams& params);

} // namespace regenn
