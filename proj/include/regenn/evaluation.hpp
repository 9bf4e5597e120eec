#pragma once

#include <string>
#include <vector>

#include "regenn/model.hpp"
#include "regenn/pipeline.hpp"

namespace regenn {

struct MetricTriple {
    double mae = 0.0;
    double rmse = 0.0;
    double msle = 0.0;
};

/// Denormalized-scale error report: global MAE/RMSE/MSLE plus per-variable
/// and per-sample breakdowns for rank-3 inputs.
struct MetricsReport {
    MetricTriple global;
    std::vector<MetricTriple> per_variable;
    std::vector<MetricTriple> per_sample;
    std::vector<std::string> variable_names;
    std::vector<std::string> sample_ids;
    std::size_t n = 0; // elements behind the global figures

    std::string to_json() const;
    /// CSV table of the per-variable metrics.
    std::string per_variable_csv() const;
};

/// Element-wise max(0, x).
Tensor clamp_nonnegative(const Tensor& x);

/// MAE = mean|p-t|, RMSE = sqrt(mean (p-t)^2), MSLE = mean log((p+1)/(t+1))^2.
/// Errors when shapes differ or any entry is <= -1 (MSLE domain).
MetricsReport compute_metrics(const Tensor& pred, const Tensor& truth,
                              std::vector<std::string> variable_names = {},
                              std::vector<std::string> sample_ids = {});

struct EvalFlags {
    bool clamp_negative = true; // sensible default for strictly-positive data
};

/// Denormalizes normalized-scale predictions and targets, optionally clamps
/// the predictions at zero, then computes the metrics.
MetricsReport evaluate_forecast(const Tensor& pred_norm, const Tensor& truth_norm,
                                const NormStats& stats, const EvalFlags& flags,
                                std::vector<std::string> variable_names = {},
                                std::vector<std::string> sample_ids = {});

/// Normalized-scale prediction of the test region: one forward pass over the
/// window of ω timestamps immediately preceding it.
Tensor forecast_test_region(Model& model, const SeriesTensor& normalized,
                            const SplitPlan& plan);

/// Forecasts the test region, denormalizes predictions and targets, and
/// reports metrics on the original scale.
MetricsReport evaluate(Model& model, const SeriesTensor& normalized, const SplitPlan& plan,
                       const NormStats& stats, const EvalFlags& flags);

} // namespace regenn
