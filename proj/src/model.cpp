#include "regenn/model.hpp"

#include <fstream>

#include <json.hpp>

#include "binary_io.hpp"
#include "regenn/errors.hpp"
#include "regenn/init.hpp"

namespace regenn {

ArParams ArParams::init(std::size_t window, std::size_t stride, RngStream& rng) {
    ArParams p;
    p.w = fan_in_init(Shape{window, stride}, window, rng);
    p.b = fan_in_init(Shape{stride}, window, rng);
    return p;
}

void ArParams::for_each_param(const std::string& prefix, const ParamVisitor& fn) {
    fn(prefix + ".w", w);
    fn(prefix + ".b", b);
}

Var autoregression(ForwardCtx& ctx, Var y, ArParams& params) {
    Tape& t = ctx.tape;
    const Shape s = t.value(y).shape;
    if (s.rank() != 3 || s.extent(1) != params.w.shape.extent(0)) {
        throw ShapeError("autoregression: input " + s.to_string() + " does not match weights " +
                         params.w.shape.to_string());
    }
    // s×ω×v -> s×v×ω, contract the window axis, bias along the stride axis.
    Var swapped = t.transpose12(y);
    Var out = t.add_bias_last(t.matmul(swapped, ctx.param(params.w)), ctx.param(params.b));
    return t.transpose12(out);
}

void Model::set_adjacency(Tensor adjacency, std::vector<std::string> names) {
    if (adjacency.shape.rank() != 2 || adjacency.shape.extent(0) != dims.variables ||
        adjacency.shape.extent(1) != dims.variables) {
        throw ShapeError("set_adjacency: expected " + std::to_string(dims.variables) + "x" +
                         std::to_string(dims.variables) + ", got " +
                         adjacency.shape.to_string());
    }
    adjacency_ = std::move(adjacency);
    if (!names.empty()) variable_names = std::move(names);
}

ForwardResult Model::forward(ForwardCtx& ctx, const Tensor& inputs) {
    return forward(ctx, ctx.constant(inputs));
}

ForwardResult Model::forward(ForwardCtx& ctx, Var inputs) {
    Tape& t = ctx.tape;
    const Shape in = t.value(inputs).shape;
    if (in.rank() != 3 || in.extent(1) != dims.window || in.extent(2) != dims.variables) {
        throw ShapeError("model forward: expected s x " + std::to_string(dims.window) + " x " +
                         std::to_string(dims.variables) + " input, got " + in.to_string());
    }

    ForwardResult r;
    Var cur = inputs;
    Var a_mu;
    if (variant.use_gse) {
        if (adjacency_.numel() == 0) {
            throw StateError("model uses evolution layers but no adjacency matrix was set");
        }
        Var a = ctx.constant(adjacency_);
        GseSourceOut src = gse_source_forward(ctx, a, cur, gse_source);
        r.y_alpha = src.y_alpha;
        r.a_mu = src.a_mu;
        a_mu = src.a_mu;
        cur = src.y_alpha;
    }
    if (variant.use_encoder) {
        cur = encoder_forward(ctx, cur, encoder);
        r.y_eps = cur;
    }
    if (variant.ru1) {
        cur = decode_time_axis(ctx, cur, ru1);
        r.y_tilde_eps = cur;
    }
    if (variant.ru2) {
        cur = decode_variable_axis(ctx, cur, ru2);
        r.y_tilde = cur;
    }

    Var y_psi;
    if (variant.use_gse) {
        GseTargetOut tgt = gse_target_forward(ctx, a_mu, cur, gse_target);
        y_psi = tgt.y_psi;
        r.a_phi = tgt.a_phi;
        r.a_psi = tgt.a_psi;
        last_a_mu_ = t.value(a_mu);
        last_a_phi_ = t.value(tgt.a_phi);
        last_a_psi_ = t.value(tgt.a_psi);
        ran_ = true;
    } else if (variant.ru1) {
        y_psi = cur;
    }
    r.y_psi = y_psi;

    if (variant.use_ar) {
        Var y_lambda = autoregression(ctx, inputs, ar);
        r.y_lambda = y_lambda;
        r.y_hat = y_psi.valid() ? t.add(y_lambda, y_psi) : y_lambda;
    } else {
        r.y_hat = y_psi;
    }
    return r;
}

void Model::for_each_param(const ParamVisitor& fn) {
    if (variant.use_gse) gse_source.for_each_param("gse_source", fn);
    if (variant.use_encoder) encoder.for_each_param("encoder", fn);
    if (variant.ru1) ru1.for_each_param("ru1", fn);
    if (variant.ru2) ru2.for_each_param("ru2", fn);
    if (variant.use_gse) gse_target.for_each_param("gse_target", fn);
    if (variant.use_ar) ar.for_each_param("ar", fn);
}

std::size_t Model::param_count() {
    std::size_t n = 0;
    for_each_param([&](const std::string&, Tensor& t) { n += t.numel(); });
    return n;
}

std::vector<double> Model::flatten_params() {
    std::vector<double> flat;
    for_each_param([&](const std::string&, Tensor& t) {
        flat.insert(flat.end(), t.v.begin(), t.v.end());
    });
    return flat;
}

void Model::load_flat(std::span<const double> theta) {
    std::size_t off = 0;
    for_each_param([&](const std::string& name, Tensor& t) {
        if (off + t.numel() > theta.size()) {
            throw ShapeError("load_flat: parameter vector too short at " + name);
        }
        std::copy(theta.begin() + off, theta.begin() + off + t.numel(), t.v.begin());
        off += t.numel();
    });
    if (off != theta.size()) {
        throw ShapeError("load_flat: parameter vector has " + std::to_string(theta.size()) +
                         " entries, model needs " + std::to_string(off));
    }
}

EvolutionWeights Model::extract_evolution_weights() const {
    if (!variant.use_gse) {
        throw StateError("this variant has no evolution layers");
    }
    if (!ran_) {
        throw StateError("model has never run a forward pass; evolution weights are not "
                         "materialized");
    }
    EvolutionWeights e;
    e.a_input = adjacency_;
    e.a_mu = last_a_mu_;
    e.a_phi = last_a_phi_;
    e.a_psi = last_a_psi_;
    e.a_input_cosine = cosine_similarity_values(adjacency_);
    e.a_phi_cosine = cosine_similarity_values(last_a_phi_);
    e.variable_names = variable_names;
    if (e.variable_names.empty()) {
        for (std::size_t i = 0; i < dims.variables; ++i) {
            e.variable_names.push_back("v" + std::to_string(i));
        }
    }
    return e;
}

Model build_variant(const std::string& tag, CellKind cell, const ModelDims& dims,
                    std::uint64_t seed, double dropout_p) {
    if (dims.window == 0 || dims.stride == 0 || dims.variables == 0) {
        throw UsageError("build_variant: window, stride and variables must be positive");
    }
    Model m;
    m.variant = VariantSpec::parse(tag, cell);
    m.dims = dims;
    m.seed = seed;
    m.dropout_p = dropout_p;
    m.cell = cell;

    RngStream rng(seed);
    if (m.variant.use_gse) {
        m.gse_source = GseSourceParams::init(dims.variables, dropout_p, rng);
    }
    if (m.variant.use_encoder) {
        m.encoder = EncoderParams::init(dims.window, dims.ffn_width(), dropout_p, rng);
    }
    if (m.variant.ru1) {
        m.ru1 = RecurrentParams::init(m.variant.ru1->kind, m.variant.ru1->direction,
                                      dims.window, dims.stride, dropout_p, rng);
    }
    if (m.variant.ru2) {
        m.ru2 = RecurrentParams::init(m.variant.ru2->kind, m.variant.ru2->direction,
                                      dims.stride, dims.stride, dropout_p, rng);
    }
    if (m.variant.use_gse) {
        m.gse_target = GseTargetParams::init(dims.variables, rng);
    }
    if (m.variant.use_ar) {
        m.ar = ArParams::init(dims.window, dims.stride, rng);
    }
    return m;
}

// ---------------------------------------------------------------------------
// snapshot io

namespace {
constexpr char kSnapshotMagic[9] = "RGNN0001";
}

void Model::save_snapshot(const std::string& path, std::size_t epoch) {
    nlohmann::json manifest;
    manifest["variant"] = variant.tag();
    manifest["cell"] = to_string(cell);
    manifest["dims"] = {{"window", dims.window},
                        {"stride", dims.stride},
                        {"variables", dims.variables},
                        {"d_ff", dims.d_ff}};
    manifest["seed"] = seed;
    manifest["epoch"] = epoch;
    manifest["dropout"] = dropout_p;
    nlohmann::json params = nlohmann::json::array();
    for_each_param([&](const std::string& name, Tensor& t) {
        nlohmann::json shape = nlohmann::json::array();
        for (std::size_t a = 0; a < t.shape.rank(); ++a) shape.push_back(t.shape.extent(a));
        params.push_back({{"name", name}, {"shape", shape}});
    });
    manifest["params"] = params;

    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open " + path + " for writing");
    out.write(kSnapshotMagic, 8);
    const std::string header = manifest.dump();
    detail::write_u32_be(out, static_cast<std::uint32_t>(header.size()));
    out.write(header.data(), static_cast<std::streamsize>(header.size()));
    for_each_param([&](const std::string&, Tensor& t) {
        for (double x : t.v) detail::write_f64_le(out, x);
    });
    if (!out) throw DataError("failed while writing " + path);
}

Model Model::load_snapshot(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path);
    char magic[8];
    in.read(magic, 8);
    if (in.gcount() != 8 || std::string(magic, 8) != std::string(kSnapshotMagic, 8)) {
        throw DataError(path + ": bad snapshot magic");
    }
    const std::uint32_t hlen = detail::read_u32_be(in, "snapshot header");
    std::string header(hlen, '\0');
    in.read(header.data(), hlen);
    if (in.gcount() != static_cast<std::streamsize>(hlen)) {
        throw DataError(path + ": truncated snapshot header");
    }
    nlohmann::json manifest;
    try {
        manifest = nlohmann::json::parse(header);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(path + ": invalid snapshot manifest: " + e.what());
    }

    ModelDims dims;
    dims.window = manifest.at("dims").at("window").get<std::size_t>();
    dims.stride = manifest.at("dims").at("stride").get<std::size_t>();
    dims.variables = manifest.at("dims").at("variables").get<std::size_t>();
    dims.d_ff = manifest.at("dims").at("d_ff").get<std::size_t>();
    Model m = build_variant(manifest.at("variant").get<std::string>(),
                            cell_kind_from_string(manifest.at("cell").get<std::string>()),
                            dims, manifest.at("seed").get<std::uint64_t>(),
                            manifest.at("dropout").get<double>());

    std::size_t idx = 0;
    const auto& plist = manifest.at("params");
    m.for_each_param([&](const std::string& name, Tensor& t) {
        if (idx >= plist.size() || plist[idx].at("name").get<std::string>() != name) {
            throw DataError(path + ": snapshot manifest does not match model layout at " +
                            name);
        }
        ++idx;
        for (double& x : t.v) {
            if (!detail::read_f64_le(in, x)) {
                throw DataError(path + ": truncated parameter payload at " + name);
            }
        }
    });
    if (idx != plist.size()) {
        throw DataError(path + ": snapshot manifest lists more parameters than the model has");
    }
    double extra;
    if (detail::read_f64_le(in, extra)) {
        throw DataError(path + ": trailing bytes after parameter payload");
    }
    return m;
}

} // namespace regenn
