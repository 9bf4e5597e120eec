#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "regenn/model.hpp"
#include "regenn/pipeline.hpp"

namespace regenn {

struct TrainConfig {
    double learning_rate = 1e-3;
    double clip_norm = 10.0; // global L2 ceiling; 0 disables clipping
    double dropout_p = 0.1;
    double scheduler_factor = 0.95;
    std::size_t scheduler_patience = 25;
    double scheduler_threshold = 0.1; // relative improvement threshold
    std::size_t max_epochs = 500;
    std::size_t early_stop_patience = 100;
    std::size_t batch_size = 32; // samples per optimizer step
    std::uint64_t seed = 42;
    NormScope norm_scope = NormScope::TrainOnly;

    void validate() const;
};

/// Bias-corrected Adam moments, one slot pair per parameter tensor.
struct AdamState {
    std::vector<Tensor> m;
    std::vector<Tensor> v;
    std::size_t step = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    static AdamState for_params(const std::vector<Tensor*>& params);
};

/// Mean absolute error of two plain tensors (no tape).
double mae_value(const Tensor& a, const Tensor& b);

/// One bias-corrected Adam update over matching parameter/gradient lists.
void adam_step(const std::vector<Tensor*>& params, const std::vector<Tensor>& grads,
               AdamState& state, double learning_rate);

double global_grad_norm(const std::vector<Tensor>& grads);

/// Scales all gradients by max_norm/norm when the global L2 norm exceeds
/// max_norm; max_norm = 0 disables.
void clip_gradients(std::vector<Tensor>& grads, double max_norm);

/// Reduce-on-plateau: when the observed validation MAE fails to improve on
/// the best seen by more than the relative threshold for `patience`
/// consecutive epochs, the learning rate is multiplied by `factor` and the
/// counter resets.
class PlateauScheduler {
public:
    PlateauScheduler(double lr, double factor, std::size_t patience, double threshold);
    void observe(double validation_mae);
    double lr() const { return lr_; }

private:
    double lr_;
    double factor_;
    double threshold_;
    std::size_t patience_;
    std::size_t bad_epochs_ = 0;
    double best_;
};

struct TrainReport {
    std::vector<double> train_loss;     // mean step loss per epoch
    std::vector<double> validation_mae; // per epoch, normalized scale
    std::vector<double> learning_rate;  // rate in force during each epoch
    std::size_t best_epoch = 0;         // 1-based; 0 when no epoch ran
    double best_validation_mae = 0.0;
    bool early_stopped = false;
    std::size_t steps_per_epoch = 0;
    std::string snapshot_path;

    std::string to_json() const;
};

/// Trains in place on a normalized dataset: epochs iterate contiguous sample
/// batches and, within each, every training window in start order. The model
/// is left holding the parameters of the best-validation epoch.
TrainReport train(Model& model, const SeriesTensor& normalized, const SplitPlan& plan,
                  const TrainConfig& config);

/// Window/validation/test lengths shared by every transfer slice; the train
/// length follows from each slice's extent.
struct PlanTemplate {
    std::size_t window = 0;
    std::size_t validation_len = 0;
    std::size_t test_len = 0;

    SplitPlan for_timestamps(std::size_t t) const;
};

struct TransferSlice {
    std::size_t slice_end = 0;
    Model model;
    TrainReport report;
    NormStats stats;
    std::size_t mask_zeroed = 0;       // entries zeroed when seeding from k-1
    std::vector<double> init_params;   // parameters the slice started from
};

struct TransferSetup {
    std::string variant_tag = "regenn";
    CellKind cell = CellKind::LSTM;
    std::size_t d_ff = 0;
    bool graph_on_raw = true;
};

/// Exactly round(fraction·n) distinct indices drawn by a seeded partial
/// shuffle; the transfer-learning perturbation zeroes these entries.
std::vector<std::size_t> transfer_mask_indices(std::size_t n, double fraction, RngStream rng);

/// Trains one model per growing time prefix. Slice 0 starts fresh; slice k>0
/// starts from slice k-1's trained parameters with 20% of entries zeroed
/// (seeded, no survivor rescaling). Each slice normalizes and builds its
/// graph from its own prefix.
std::vector<TransferSlice> transfer_train(const SeriesTensor& raw,
                                          const std::vector<std::size_t>& slice_ends,
                                          const PlanTemplate& tmpl, const TrainConfig& config,
                                          const TransferSetup& setup);

} // namespace regenn
