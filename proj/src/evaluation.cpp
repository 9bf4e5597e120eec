#include "regenn/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

#include <json.hpp>

#include "regenn/errors.hpp"

namespace regenn {

namespace {

MetricTriple metrics_over(const Tensor& pred, const Tensor& truth,
                          const std::function<bool(std::size_t)>& in_slice) {
    double abs_sum = 0.0, sq_sum = 0.0, log_sum = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < pred.numel(); ++i) {
        if (!in_slice(i)) continue;
        const double d = pred.v[i] - truth.v[i];
        abs_sum += std::fabs(d);
        sq_sum += d * d;
        const double lr = std::log((pred.v[i] + 1.0) / (truth.v[i] + 1.0));
        log_sum += lr * lr;
        ++n;
    }
    MetricTriple m;
    if (n == 0) return m;
    m.mae = abs_sum / static_cast<double>(n);
    m.rmse = std::sqrt(sq_sum / static_cast<double>(n));
    m.msle = log_sum / static_cast<double>(n);
    return m;
}

nlohmann::json triple_json(const MetricTriple& m) {
    return {{"mae", m.mae}, {"rmse", m.rmse}, {"msle", m.msle}};
}

} // namespace

Tensor clamp_nonnegative(const Tensor& x) {
    Tensor out = x;
    for (double& e : out.v) e = e < 0.0 ? 0.0 : e;
    return out;
}

MetricsReport compute_metrics(const Tensor& pred, const Tensor& truth,
                              std::vector<std::string> variable_names,
                              std::vector<std::string> sample_ids) {
    if (pred.shape != truth.shape) {
        throw ShapeError("compute_metrics: shape " + pred.shape.to_string() + " vs " +
                         truth.shape.to_string());
    }
    for (std::size_t i = 0; i < pred.numel(); ++i) {
        if (pred.v[i] <= -1.0 || truth.v[i] <= -1.0) {
            throw DataError("compute_metrics: MSLE undefined for entries <= -1 (found " +
                            std::to_string(std::min(pred.v[i], truth.v[i])) + ")");
        }
    }

    MetricsReport r;
    r.n = pred.numel();
    r.global = metrics_over(pred, truth, [](std::size_t) { return true; });

    if (pred.shape.rank() == 3) {
        const std::size_t s = pred.shape.extent(0);
        const std::size_t z = pred.shape.extent(1);
        const std::size_t v = pred.shape.extent(2);
        for (std::size_t k = 0; k < v; ++k) {
            r.per_variable.push_back(
                metrics_over(pred, truth, [&](std::size_t i) { return i % v == k; }));
        }
        for (std::size_t i = 0; i < s; ++i) {
            const std::size_t lo = i * z * v, hi = (i + 1) * z * v;
            r.per_sample.push_back(metrics_over(
                pred, truth, [&](std::size_t e) { return e >= lo && e < hi; }));
        }
        if (variable_names.size() == v) r.variable_names = std::move(variable_names);
        if (sample_ids.size() == s) r.sample_ids = std::move(sample_ids);
        if (r.variable_names.empty()) {
            for (std::size_t k = 0; k < v; ++k) r.variable_names.push_back("v" + std::to_string(k));
        }
        if (r.sample_ids.empty()) {
            for (std::size_t i = 0; i < s; ++i) r.sample_ids.push_back("s" + std::to_string(i));
        }
    }
    return r;
}

std::string MetricsReport::to_json() const {
    nlohmann::json j;
    j["n"] = n;
    j["global"] = triple_json(global);
    nlohmann::json pv = nlohmann::json::array();
    for (std::size_t i = 0; i < per_variable.size(); ++i) {
        nlohmann::json e = triple_json(per_variable[i]);
        e["name"] = variable_names[i];
        pv.push_back(e);
    }
    j["per_variable"] = pv;
    nlohmann::json ps = nlohmann::json::array();
    for (std::size_t i = 0; i < per_sample.size(); ++i) {
        nlohmann::json e = triple_json(per_sample[i]);
        e["id"] = sample_ids[i];
        ps.push_back(e);
    }
    j["per_sample"] = ps;
    return j.dump(2) + "\n";
}

std::string MetricsReport::per_variable_csv() const {
    std::ostringstream os;
    os << "variable,mae,rmse,msle\n";
    os.precision(17);
    for (std::size_t i = 0; i < per_variable.size(); ++i) {
        os << variable_names[i] << ',' << per_variable[i].mae << ',' << per_variable[i].rmse
           << ',' << per_variable[i].msle << '\n';
    }
    return os.str();
}

MetricsReport evaluate_forecast(const Tensor& pred_norm, const Tensor& truth_norm,
                                const NormStats& stats, const EvalFlags& flags,
                                std::vector<std::string> variable_names,
                                std::vector<std::string> sample_ids) {
    Tensor pred = denormalize_values(pred_norm, stats);
    const Tensor truth = denormalize_values(truth_norm, stats);
    if (flags.clamp_negative) pred = clamp_nonnegative(pred);
    return compute_metrics(pred, truth, std::move(variable_names), std::move(sample_ids));
}

Tensor forecast_test_region(Model& model, const SeriesTensor& normalized,
                            const SplitPlan& plan) {
    plan.validate(normalized.timestamps());
    const std::size_t test_start = plan.train_len + plan.validation_len;
    if (test_start < plan.window) {
        throw UsageError("forecast: no full input window precedes the test region");
    }
    const Tensor inputs = time_slice(normalized.values, test_start - plan.window, test_start);
    Tape tape;
    ForwardCtx ctx{tape, Mode::Eval, nullptr, {}};
    ForwardResult res = model.forward(ctx, inputs);
    return tape.value(res.y_hat);
}

MetricsReport evaluate(Model& model, const SeriesTensor& normalized, const SplitPlan& plan,
                       const NormStats& stats, const EvalFlags& flags) {
    const Tensor pred_norm = forecast_test_region(model, normalized, plan);
    const std::size_t test_start = plan.train_len + plan.validation_len;
    const Tensor truth_norm =
        time_slice(normalized.values, test_start, test_start + plan.test_len);
    return evaluate_forecast(pred_norm, truth_norm, stats, flags, normalized.variable_names,
                             normalized.sample_ids);
}

} // namespace regenn
