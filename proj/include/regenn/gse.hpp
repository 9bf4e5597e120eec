#pragma once

#include <functional>
#include <string>
#include <vector>

#include "regenn/forward_ctx.hpp"
#include "regenn/tensor.hpp"

namespace regenn {

using ParamVisitor = std::function<void(const std::string&, Tensor&)>;

/// Source-side Graph Soft Evolution layer: transforms the shared adjacency,
/// applies cosine matrix similarity as an activation-like step, and mixes the
/// result into the series tensor ahead of the encoder.
struct GseSourceParams {
    Tensor w_mu, b_mu;       // adjacency linear transform (v×v, v)
    Tensor w_eta, b_eta;     // similarity scaling (v×v, v)
    Tensor w_alpha, b_alpha; // output feature map (v×v, v)
    double dropout_p = 0.0;

    static GseSourceParams init(std::size_t variables, double dropout_p, RngStream& rng);
    /// W_mu = W_alpha = I, W_eta = ones, all biases 0: the layer becomes the
    /// identity map on Y in eval mode.
    static GseSourceParams identity(std::size_t variables);
    void for_each_param(const std::string& prefix, const ParamVisitor& fn);
};

/// Target-side layer: rescales the decoded tensor by the evolved adjacency.
/// No dropout and no output linear map ahead of the prediction.
struct GseTargetParams {
    Tensor w_mu, b_mu;   // evolves the shared A_mu into A_phi
    Tensor w_eta, b_eta; // similarity scaling into A_psi

    static GseTargetParams init(std::size_t variables, RngStream& rng);
    static GseTargetParams identity(std::size_t variables);
    void for_each_param(const std::string& prefix, const ParamVisitor& fn);
};

struct GseSourceOut {
    Var y_alpha; // s×ω×v
    Var a_mu;    // v×v, shared with the target layer within the same pass
    Var a_eta;   // v×v similarity-scaled matrix (kept for inspection)
};

struct GseTargetOut {
    Var y_psi; // s×z×v
    Var a_phi; // v×v evolved adjacency
    Var a_psi; // v×v similarity-scaled matrix used in the output product
};

/// A_mu = W_mu·A + b_mu; A_eta = W_eta ∘ cos(A_mu) + b_eta;
/// Y_alpha = dropout(Y·A_eta)·W_alpha + b_alpha. Products that touch Y run
/// along the variable (last) axis; biases broadcast along the last axis.
GseSourceOut gse_source_forward(ForwardCtx& ctx, Var adjacency, Var y,
                                GseSourceParams& params);

/// A_phi = W_mu'·A_mu + b_mu'; A_psi = W_eta' ∘ cos(A_phi) + b_eta';
/// Y_psi = Y_tilde·A_psi. A_mu must be the source layer's live output from
/// the same forward pass.
GseTargetOut gse_target_forward(ForwardCtx& ctx, Var a_mu, Var y_tilde,
                                GseTargetParams& params);

/// The adjacency matrices materialized by a forward pass, plus the cosine
/// views used to compare the input graph against the evolved one.
struct EvolutionWeights {
    Tensor a_input, a_mu, a_phi, a_psi;
    Tensor a_input_cosine, a_phi_cosine;
    std::vector<std::string> variable_names;
};

/// Cosine matrix similarity of a plain tensor (no tape involved).
Tensor cosine_similarity_values(const Tensor& square);

} // namespace regenn
