#include "regenn/training.hpp"

#include <cmath>
#include <limits>

#include <json.hpp>

#include "regenn/errors.hpp"
#include "regenn/graph.hpp"

namespace regenn {

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0)) throw UsageError("learning_rate must be positive");
    if (!(scheduler_factor > 0.0 && scheduler_factor < 1.0)) {
        throw UsageError("scheduler_factor must be in (0,1)");
    }
    if (scheduler_patience < 1) throw UsageError("scheduler_patience must be >= 1");
    if (early_stop_patience < 1) throw UsageError("early_stop_patience must be >= 1");
    if (batch_size < 1) throw UsageError("batch_size must be >= 1");
    if (!(dropout_p >= 0.0 && dropout_p < 1.0)) throw UsageError("dropout must be in [0,1)");
    if (clip_norm < 0.0) throw UsageError("clip_norm must be >= 0");
    if (scheduler_threshold < 0.0) throw UsageError("scheduler_threshold must be >= 0");
}

AdamState AdamState::for_params(const std::vector<Tensor*>& params) {
    AdamState s;
    s.m.reserve(params.size());
    s.v.reserve(params.size());
    for (const Tensor* p : params) {
        s.m.emplace_back(p->shape);
        s.v.emplace_back(p->shape);
    }
    return s;
}

double mae_value(const Tensor& a, const Tensor& b) {
    if (a.shape != b.shape) {
        throw ShapeError("mae: shape " + a.shape.to_string() + " vs " + b.shape.to_string());
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < a.numel(); ++i) acc += std::fabs(a.v[i] - b.v[i]);
    return acc / static_cast<double>(a.numel());
}

void adam_step(const std::vector<Tensor*>& params, const std::vector<Tensor>& grads,
               AdamState& state, double learning_rate) {
    if (params.size() != grads.size() || params.size() != state.m.size()) {
        throw ShapeError("adam_step: parameter/gradient/state counts disagree");
    }
    state.step += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    for (std::size_t p = 0; p < params.size(); ++p) {
        Tensor& theta = *params[p];
        const Tensor& g = grads[p];
        if (g.shape != theta.shape) {
            throw ShapeError("adam_step: gradient shape " + g.shape.to_string() +
                             " vs parameter " + theta.shape.to_string());
        }
        Tensor& m = state.m[p];
        Tensor& v = state.v[p];
        for (std::size_t i = 0; i < theta.numel(); ++i) {
            m.v[i] = state.beta1 * m.v[i] + (1.0 - state.beta1) * g.v[i];
            v.v[i] = state.beta2 * v.v[i] + (1.0 - state.beta2) * g.v[i] * g.v[i];
            const double mhat = m.v[i] / bc1;
            const double vhat = v.v[i] / bc2;
            theta.v[i] -= learning_rate * mhat / (std::sqrt(vhat) + state.eps);
        }
    }
}

double global_grad_norm(const std::vector<Tensor>& grads) {
    double sq = 0.0;
    for (const Tensor& g : grads) {
        for (double x : g.v) sq += x * x;
    }
    return std::sqrt(sq);
}

void clip_gradients(std::vector<Tensor>& grads, double max_norm) {
    if (max_norm == 0.0) return;
    if (max_norm < 0.0) throw UsageError("clip_gradients: max_norm must be >= 0");
    const double norm = global_grad_norm(grads);
    if (norm <= max_norm) return;
    const double scale = max_norm / norm;
    for (Tensor& g : grads) {
        for (double& x : g.v) x *= scale;
    }
}

PlateauScheduler::PlateauScheduler(double lr, double factor, std::size_t patience,
                                   double threshold)
    : lr_(lr), factor_(factor), threshold_(threshold), patience_(patience),
      best_(std::numeric_limits<double>::infinity()) {}

void PlateauScheduler::observe(double validation_mae) {
    if (validation_mae < best_ * (1.0 - threshold_)) {
        best_ = validation_mae;
        bad_epochs_ = 0;
        return;
    }
    ++bad_epochs_;
    if (bad_epochs_ >= patience_) {
        lr_ *= factor_;
        bad_epochs_ = 0;
    }
}

std::string TrainReport::to_json() const {
    nlohmann::json j;
    j["train_loss"] = train_loss;
    j["validation_mae"] = validation_mae;
    j["learning_rate"] = learning_rate;
    j["best_epoch"] = best_epoch;
    j["best_validation_mae"] = best_validation_mae;
    j["early_stopped"] = early_stopped;
    j["steps_per_epoch"] = steps_per_epoch;
    j["epochs_run"] = train_loss.size();
    if (!snapshot_path.empty()) j["snapshot"] = snapshot_path;
    return j.dump(2) + "\n";
}

namespace {

/// Validation forecast: predict from the last ω training timestamps and score
/// the first min(z, validation_len) steps against the validation region.
double validation_mae_of(Model& model, const SeriesTensor& normalized, const SplitPlan& plan) {
    const std::size_t w = plan.train_len;
    const Tensor inputs = time_slice(normalized.values, w - plan.window, w);
    Tape tape;
    ForwardCtx ctx{tape, Mode::Eval, nullptr, {}};
    ForwardResult res = model.forward(ctx, inputs);
    const Tensor& pred = tape.value(res.y_hat);
    const std::size_t scored = std::min(plan.test_len, plan.validation_len);
    const Tensor truth = time_slice(normalized.values, w, w + scored);
    Tensor pred_head = Tensor(Shape{pred.shape.extent(0), scored, pred.shape.extent(2)});
    for (std::size_t i = 0; i < pred_head.shape.extent(0); ++i) {
        for (std::size_t j = 0; j < scored; ++j) {
            for (std::size_t k = 0; k < pred_head.shape.extent(2); ++k) {
                pred_head.at(i, j, k) = pred.at(i, j, k);
            }
        }
    }
    return mae_value(pred_head, truth);
}

} // namespace

TrainReport train(Model& model, const SeriesTensor& normalized, const SplitPlan& plan,
                  const TrainConfig& config) {
    config.validate();
    plan.validate(normalized.timestamps());

    // The training region may be too short to hold a single (input, target)
    // pair (e.g. w = ω with a long stride); the run then degenerates to
    // validation tracking with zero optimizer steps.
    std::vector<WindowBatch> windows;
    if (plan.train_len >= plan.window + plan.test_len) {
        windows = make_windows(time_slice(normalized.values, 0, plan.train_len), plan.window,
                               plan.test_len);
    }

    std::vector<Tensor*> params;
    model.for_each_param([&](const std::string&, Tensor& t) { params.push_back(&t); });
    AdamState adam = AdamState::for_params(params);
    PlateauScheduler scheduler(config.learning_rate, config.scheduler_factor,
                               config.scheduler_patience, config.scheduler_threshold);
    RngStream train_rng = RngStream::derive(config.seed, 1);

    const std::size_t samples = normalized.samples();
    const std::size_t batches = (samples + config.batch_size - 1) / config.batch_size;

    TrainReport report;
    report.steps_per_epoch = batches * windows.size();
    report.best_validation_mae = std::numeric_limits<double>::infinity();
    std::vector<double> best_params;
    std::size_t stale_epochs = 0;

    for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
        double loss_sum = 0.0;
        std::size_t steps = 0;
        for (std::size_t b = 0; b < batches; ++b) {
            const std::size_t s0 = b * config.batch_size;
            const std::size_t s1 = std::min(samples, s0 + config.batch_size);
            for (const WindowBatch& wdw : windows) {
                const Tensor inputs = sample_slice(wdw.inputs, s0, s1);
                const Tensor targets = sample_slice(wdw.targets, s0, s1);
                Tape tape;
                ForwardCtx ctx{tape, Mode::Train, &train_rng, {}};
                ForwardResult res = model.forward(ctx, inputs);
                Var loss = tape.mae(res.y_hat, ctx.constant(targets));
                const double loss_val = tape.value(loss).scalar_value();
                if (!std::isfinite(loss_val)) {
                    throw NumericError("non-finite training loss at epoch " +
                                       std::to_string(epoch) + ", batch " + std::to_string(b) +
                                       ", window start " + std::to_string(wdw.start));
                }
                tape.backward(loss);
                std::vector<Tensor> grads;
                grads.reserve(params.size());
                for (Tensor* p : params) grads.push_back(ctx.grad_of(*p));
                clip_gradients(grads, config.clip_norm);
                adam_step(params, grads, adam, scheduler.lr());
                loss_sum += loss_val;
                ++steps;
            }
        }
        report.train_loss.push_back(steps == 0 ? 0.0 : loss_sum / static_cast<double>(steps));
        report.learning_rate.push_back(scheduler.lr());

        const double val = validation_mae_of(model, normalized, plan);
        if (!std::isfinite(val)) {
            throw NumericError("non-finite validation MAE at epoch " + std::to_string(epoch));
        }
        report.validation_mae.push_back(val);
        scheduler.observe(val);

        if (val < report.best_validation_mae) {
            report.best_validation_mae = val;
            report.best_epoch = epoch;
            best_params = model.flatten_params();
            stale_epochs = 0;
        } else {
            ++stale_epochs;
            if (stale_epochs >= config.early_stop_patience) {
                report.early_stopped = true;
                break;
            }
        }
    }

    if (report.best_epoch > 0) model.load_flat(best_params);
    if (report.train_loss.empty()) report.best_validation_mae = 0.0;
    return report;
}

// ---------------------------------------------------------------------------
// transfer learning over time slices

SplitPlan PlanTemplate::for_timestamps(std::size_t t) const {
    if (t <= validation_len + test_len) {
        throw UsageError("slice of " + std::to_string(t) +
                         " timestamps cannot hold validation " +
                         std::to_string(validation_len) + " + test " +
                         std::to_string(test_len));
    }
    SplitPlan plan;
    plan.window = window;
    plan.validation_len = validation_len;
    plan.test_len = test_len;
    plan.train_len = t - validation_len - test_len;
    return plan;
}

std::vector<std::size_t> transfer_mask_indices(std::size_t n, double fraction, RngStream rng) {
    const auto k = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    for (std::size_t i = 0; i < k; ++i) {
        const std::uint64_t r = rng.bits_at(rng.reserve(1));
        const std::size_t j = i + static_cast<std::size_t>(r % (n - i));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(k);
    return idx;
}

namespace {
SeriesTensor prefix_of(const SeriesTensor& raw, std::size_t t_end) {
    SeriesTensor s;
    s.values = time_slice(raw.values, 0, t_end);
    s.sample_ids = raw.sample_ids;
    s.variable_names = raw.variable_names;
    s.timestamp_labels.assign(raw.timestamp_labels.begin(),
                              raw.timestamp_labels.begin() + static_cast<std::ptrdiff_t>(t_end));
    return s;
}
} // namespace

std::vector<TransferSlice> transfer_train(const SeriesTensor& raw,
                                          const std::vector<std::size_t>& slice_ends,
                                          const PlanTemplate& tmpl, const TrainConfig& config,
                                          const TransferSetup& setup) {
    if (slice_ends.empty()) throw UsageError("transfer_train: empty slice schedule");
    for (std::size_t k = 0; k < slice_ends.size(); ++k) {
        if (slice_ends[k] > raw.timestamps()) {
            throw UsageError("transfer_train: slice end " + std::to_string(slice_ends[k]) +
                             " exceeds the dataset's " + std::to_string(raw.timestamps()) +
                             " timestamps");
        }
        if (k > 0 && slice_ends[k] <= slice_ends[k - 1]) {
            throw UsageError("transfer_train: slice ends must be strictly increasing");
        }
    }

    std::vector<TransferSlice> out;
    std::vector<double> prev_params;
    for (std::size_t k = 0; k < slice_ends.size(); ++k) {
        TransferSlice slice;
        slice.slice_end = slice_ends[k];
        const SeriesTensor prefix = prefix_of(raw, slice_ends[k]);
        const SplitPlan plan = tmpl.for_timestamps(slice_ends[k]);
        plan.validate(prefix.timestamps());

        slice.stats = compute_norm_stats(prefix, config.norm_scope, plan.train_len);
        const SeriesTensor norm = normalize(prefix, slice.stats);

        ModelDims dims{tmpl.window, tmpl.test_len, prefix.variables(), setup.d_ff};
        slice.model =
            build_variant(setup.variant_tag, setup.cell, dims, config.seed, config.dropout_p);
        if (slice.model.variant.use_gse) {
            const Tensor& graph_source = setup.graph_on_raw ? prefix.values : norm.values;
            CoOccurrenceGraph g = build_cooccurrence(time_slice(graph_source, 0, plan.train_len),
                                                     prefix.variable_names);
            slice.model.set_adjacency(g.adjacency, prefix.variable_names);
        }

        if (k > 0) {
            // Seed from the previous slice with an exact-count zero mask —
            // a perturbation, not an expectation-preserving layer, so
            // survivors are not rescaled.
            std::vector<double> seeded = prev_params;
            const auto mask = transfer_mask_indices(seeded.size(), 0.2,
                                                    RngStream::derive(config.seed, 1000 + k));
            for (std::size_t i : mask) seeded[i] = 0.0;
            slice.model.load_flat(seeded);
            slice.mask_zeroed = mask.size();
        }
        slice.init_params = slice.model.flatten_params();

        slice.report = train(slice.model, norm, plan, config);
        prev_params = slice.model.flatten_params();
        out.push_back(std::move(slice));
    }
    return out;
}

} // namespace regenn
