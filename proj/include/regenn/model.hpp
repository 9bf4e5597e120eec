#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "regenn/encoder.hpp"
#include "regenn/gse.hpp"
#include "regenn/recurrent.hpp"
#include "regenn/variant.hpp"

namespace regenn {

struct ModelDims {
    std::size_t window = 0;    // ω, timestamps fed per prediction
    std::size_t stride = 0;    // z, timestamps predicted per window
    std::size_t variables = 0; // v
    std::size_t d_ff = 0;      // feed-forward width; 0 means "use window"

    std::size_t ffn_width() const { return d_ff == 0 ? window : d_ff; }
    bool operator==(const ModelDims&) const = default;
};

/// Linear shortcut between input and output: one ω -> z map shared across
/// samples and variables.
struct ArParams {
    Tensor w; // ω×z
    Tensor b; // z

    static ArParams init(std::size_t window, std::size_t stride, RngStream& rng);
    void for_each_param(const std::string& prefix, const ParamVisitor& fn);
};

/// Y_lambda[s,j,v] = sum_i W[i,j]·Y[s,i,v] + b[j].
Var autoregression(ForwardCtx& ctx, Var y, ArParams& params);

/// Handles to every intermediate of a forward pass. Vars for components the
/// variant does not engage are left invalid.
struct ForwardResult {
    Var y_hat;       // s×z×v final prediction
    Var y_alpha;     // source-layer output
    Var y_eps;       // encoder output
    Var y_tilde_eps; // first decoder output
    Var y_tilde;     // second decoder output
    Var y_psi;       // non-linear branch output
    Var y_lambda;    // linear branch output
    Var a_mu, a_phi, a_psi;
};

/// A forecasting model assembled from a VariantSpec: optionally a pair of
/// graph-evolution layers around an attention encoder and two recurrent
/// decoders, merged with a linear shortcut.
class Model {
public:
    VariantSpec variant;
    ModelDims dims;
    std::uint64_t seed = 0;
    double dropout_p = 0.0;
    CellKind cell = CellKind::LSTM;

    GseSourceParams gse_source;
    GseTargetParams gse_target;
    EncoderParams encoder;
    RecurrentParams ru1, ru2;
    ArParams ar;

    /// Attaches the input co-occurrence graph (required when the variant uses
    /// the evolution layers) along with variable labels for exports.
    void set_adjacency(Tensor adjacency, std::vector<std::string> variable_names = {});
    const Tensor& adjacency() const { return adjacency_; }

    ForwardResult forward(ForwardCtx& ctx, Var inputs);
    ForwardResult forward(ForwardCtx& ctx, const Tensor& inputs);

    /// Visits every trainable tensor in a fixed order (data-flow order).
    void for_each_param(const ParamVisitor& fn);
    std::size_t param_count();
    std::vector<double> flatten_params();
    void load_flat(std::span<const double> theta);

    /// Adjacency matrices captured by the most recent forward pass, plus
    /// cosine views of the input and evolved graphs.
    EvolutionWeights extract_evolution_weights() const;
    bool has_run() const { return ran_; }

    /// Snapshot: 8-byte magic, big-endian header length, JSON manifest
    /// (variant tag, cell, dims, seed, epoch), then raw little-endian float64
    /// parameter blocks in manifest order.
    void save_snapshot(const std::string& path, std::size_t epoch = 0);
    static Model load_snapshot(const std::string& path);

    std::vector<std::string> variable_names;

private:
    Tensor adjacency_;
    Tensor last_a_mu_, last_a_phi_, last_a_psi_;
    bool ran_ = false;
};

/// Builds a model for an architecture tag; "regenn" yields the full model
/// with graph-evolution layers. Parameters are drawn from a stream seeded
/// with `seed` in a fixed registration order.
Model build_variant(const std::string& tag, CellKind cell, const ModelDims& dims,
                    std::uint64_t seed, double dropout_p = 0.0);

} // namespace regenn
