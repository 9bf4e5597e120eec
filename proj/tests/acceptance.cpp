// Acceptance suite: one pass/fail line per criterion, non-zero exit when any
// criterion fails. Criteria marked by tolerances below are pinned in code.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <vector>

#include <json.hpp>

#include "regenn/cli.hpp"
#include "regenn/evaluation.hpp"
#include "regenn/gradcheck.hpp"
#include "regenn/graph.hpp"
#include "regenn/model.hpp"
#include "regenn/training.hpp"
#include "test_util.hpp"

using namespace regenn;
using Clock = std::chrono::steady_clock;

namespace {

int g_failures = 0;

void report(const std::string& name, bool pass, const std::string& detail) {
    printf("[%s] %s — %s\n", pass ? "PASS" : "FAIL", name.c_str(), detail.c_str());
    fflush(stdout);
    if (!pass) ++g_failures;
}

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

Tensor toy_adjacency(std::size_t v) {
    Tensor a(Shape{v, v});
    for (std::size_t i = 0; i < v; ++i) {
        for (std::size_t j = 0; j < v; ++j) a.at(i, j) = i == j ? 10.0 : 3.0;
    }
    return a;
}

/// Finite-difference check of every parameter tensor of a module against the
/// tape gradients of an MAE loss, via per-tensor leaf binding.
struct FdSummary {
    double max_rel = 0.0;
    std::size_t coords = 0;
};

template <typename ForwardFn>
FdSummary fd_check_params(std::vector<Tensor*> slots, const ForwardFn& forward_with_binding) {
    FdSummary sum;
    for (std::size_t probe = 0; probe < slots.size(); ++probe) {
        auto f = [&](Tape& tape, Var th) -> Var {
            return forward_with_binding(tape, th, probe);
        };
        GradCheckResult r = finite_difference_check(f, *slots[probe], 1e-6);
        sum.max_rel = std::max(sum.max_rel, r.max_rel_error);
        sum.coords += r.coords;
    }
    return sum;
}

FdSummary fd_check_model(Model& model, const Tensor& inputs, const Tensor& targets) {
    std::vector<Tensor*> slots;
    model.for_each_param([&](const std::string&, Tensor& t) { slots.push_back(&t); });
    return fd_check_params(slots, [&](Tape& tape, Var th, std::size_t probe) -> Var {
        Model m2 = model;
        std::vector<Tensor*> slots2;
        m2.for_each_param([&](const std::string&, Tensor& t) { slots2.push_back(&t); });
        ForwardCtx ctx{tape, Mode::Eval, nullptr, {}};
        for (std::size_t i = 0; i < slots.size(); ++i) {
            if (i == probe) {
                ctx.bound.emplace(slots2[i], th.id);
            } else {
                ctx.bound.emplace(slots2[i], ctx.constant(*slots2[i]).id);
            }
        }
        return tape.mae(m2.forward(ctx, inputs).y_hat, ctx.constant(targets));
    });
}

// ---------------------------------------------------------------------------

void criterion_gradient_suite() {
    const auto t0 = Clock::now();
    const ModelDims dims{3, 2, 2, 0};
    RngStream rng(2025);
    const Tensor inputs = testutil::random_tensor_off_zero(Shape{2, 3, 2}, rng);
    const Tensor targets = testutil::random_tensor_off_zero(Shape{2, 2, 2}, rng);

    double worst = 0.0;
    std::size_t coords = 0;
    std::vector<std::string> layers;

    // per-layer checks: every architecture component in isolation
    for (const char* tag : {"AR", "URU", "BRU", "E \xe2\x86\x92 URU"}) {
        for (CellKind cell : {CellKind::LSTM, CellKind::GRU, CellKind::Elman}) {
            Model m = build_variant(tag, cell, dims, 3, 0.0);
            FdSummary s = fd_check_model(m, inputs, targets);
            worst = std::max(worst, s.max_rel);
            coords += s.coords;
            if (cell != CellKind::LSTM && (std::string(tag) == "AR")) break;
        }
    }
    // two-decoder chain exercises decode_variable_axis
    {
        Model m = build_variant("(E \xe2\x86\x92 URU + BRU) + AR", CellKind::LSTM, dims, 5, 0.0);
        FdSummary s = fd_check_model(m, inputs, targets);
        worst = std::max(worst, s.max_rel);
        coords += s.coords;
    }
    // gse source + target around the full pipeline, and the full model
    std::size_t full_params = 0;
    {
        Model m = build_variant("regenn", CellKind::LSTM, dims, 7, 0.0);
        m.set_adjacency(toy_adjacency(2));
        full_params = m.param_count();
        FdSummary s = fd_check_model(m, inputs, targets);
        worst = std::max(worst, s.max_rel);
        coords += s.coords;
    }
    const double elapsed = seconds_since(t0);
    std::ostringstream detail;
    detail << coords << " parameter coordinates checked (full model " << full_params
           << "), max relative error " << worst << " (limit 1e-4), " << elapsed
           << "s (limit 120s)";
    report("gradient-suite", worst < 1e-4 && elapsed < 120.0 && coords > 0, detail.str());
}

void criterion_graph_oracle() {
    RngStream rng(31337);
    std::size_t mismatches = 0;
    for (int rep = 0; rep < 1000; ++rep) {
        const std::size_t s = 1 + rng.bits_at(rng.reserve(1)) % 3;
        const std::size_t w = 1 + rng.bits_at(rng.reserve(1)) % 5;
        const std::size_t v = 1 + rng.bits_at(rng.reserve(1)) % 4;
        Tensor t(Shape{s, w, v});
        for (auto& e : t.v) {
            e = rng.next_uniform() < 0.3 ? 0.0 : rng.next_uniform(0.1, 5.0);
        }
        const Tensor got = build_cooccurrence(t).adjacency;
        // brute-force triple-loop oracle
        Tensor want(Shape{v, v});
        for (std::size_t u = 0; u < v; ++u) {
            for (std::size_t q = 0; q < v; ++q) {
                double acc = 0.0;
                for (std::size_t i = 0; i < s; ++i) {
                    for (std::size_t j = 0; j < w; ++j) {
                        const double xu = t.at(i, j, u);
                        const double xq = t.at(i, j, q);
                        if (xu != 0.0 && xq != 0.0) acc += xu + xq;
                    }
                }
                want.at(u, q) = acc;
            }
        }
        if (!got.same_values(want)) ++mismatches;
    }
    report("graph-oracle", mismatches == 0,
           "1000 random tensors (s<=3, w<=5, v<=4, ~30% zeros), " +
               std::to_string(mismatches) + " mismatches (exact equality required)");
}

void criterion_metric_oracle() {
    RngStream rng(99);
    double worst = 0.0;
    std::size_t order_violations = 0;
    for (int rep = 0; rep < 1000; ++rep) {
        const std::size_t n = 1 + rng.bits_at(rng.reserve(1)) % 32;
        Tensor a(Shape{n}), b(Shape{n});
        for (std::size_t i = 0; i < n; ++i) {
            a.v[i] = rng.next_uniform(0.0, 10.0);
            b.v[i] = rng.next_uniform(0.0, 10.0);
        }
        MetricsReport m = compute_metrics(a, b);
        // direct-formula evaluation
        double abs_sum = 0.0, sq_sum = 0.0, log_sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            abs_sum += std::fabs(a.v[i] - b.v[i]);
            sq_sum += (a.v[i] - b.v[i]) * (a.v[i] - b.v[i]);
            const double lr = std::log((a.v[i] + 1.0) / (b.v[i] + 1.0));
            log_sum += lr * lr;
        }
        const double nd = static_cast<double>(n);
        worst = std::max(worst, std::fabs(m.global.mae - abs_sum / nd));
        worst = std::max(worst, std::fabs(m.global.rmse - std::sqrt(sq_sum / nd)));
        worst = std::max(worst, std::fabs(m.global.msle - log_sum / nd));
        if (m.global.rmse < m.global.mae) ++order_violations;
    }
    report("metric-oracle", worst < 1e-12 && order_violations == 0,
           "1000 random vectors, max deviation " + std::to_string(worst) +
               " (limit 1e-12), RMSE>=MAE violations: " + std::to_string(order_violations));
}

void criterion_ablation_grid() {
    static const std::vector<std::string> tags = {
        "BRU", "E \xe2\x86\x92 BRU", "(E \xe2\x86\x92 BRU + BRU) + AR",
        "(E \xe2\x86\x92 BRU + URU) + AR", "(E \xe2\x86\x92 BRU) + AR", "E \xe2\x86\x92 URU",
        "(E \xe2\x86\x92 URU + BRU) + AR", "(E \xe2\x86\x92 URU + URU) + AR",
        "(E \xe2\x86\x92 URU) + AR", "URU"};
    const ModelDims dims{3, 2, 2, 0};
    RngStream rng(6);
    const Tensor inputs = testutil::random_tensor(Shape{2, 3, 2}, rng);
    std::size_t finite_ok = 0;
    for (CellKind cell : {CellKind::Elman, CellKind::GRU, CellKind::LSTM}) {
        for (const auto& tag : tags) {
            Model m = build_variant(tag, cell, dims, 11, 0.0);
            Tape tape;
            ForwardCtx ctx{tape, Mode::Eval, nullptr, {}};
            const Tensor& out = tape.value(m.forward(ctx, inputs).y_hat);
            if (out.shape == Shape{2, 2, 2} && out.all_finite()) ++finite_ok;
        }
    }

    // the ablate command must emit the 30-row summary
    testutil::TempDir dir("regenn_accept_ablate");
    SeriesTensor series = testutil::sinusoid_dataset(3, 24, 2, 99);
    write_tensor(dir.file("data.mmts"), series);
    std::ofstream(dir.file("c.json"))
        << "{\"dataset\": \"" << dir.file("data.mmts")
        << "\", \"window\": 4, \"validation\": 4, \"stride\": 6, \"max_epochs\": 1,"
           " \"dropout\": 0.0, \"out_dir\": \"" << dir.file("out") << "\"}";
    const int rc = cli::run({"ablate", "-c", dir.file("c.json")});
    std::size_t csv_rows = 0;
    {
        std::ifstream in(dir.file("out/ablation_results.csv"));
        std::string line;
        while (std::getline(in, line)) ++csv_rows;
    }
    report("ablation-grid", finite_ok == 30 && rc == 0 && csv_rows == 31,
           std::to_string(finite_ok) + "/30 variants finite on (2,3,2,2); ablate exit " +
               std::to_string(rc) + ", summary rows " + std::to_string(csv_rows - 1) + "/30");
}

struct ConvergenceData {
    SeriesTensor normalized;
    SeriesTensor raw;
    NormStats stats;
    SplitPlan plan;
};

ConvergenceData convergence_dataset() {
    ConvergenceData d;
    d.raw = testutil::sinusoid_dataset(4, 40, 3, 2024);
    d.plan = SplitPlan{32, 4, 4, 8}; // w=32, validation 4, stride z=4, window ω=8
    d.stats = compute_norm_stats(d.raw, NormScope::TrainOnly, d.plan.train_len);
    d.normalized = normalize(d.raw, d.stats);
    return d;
}

Model convergence_model(const ConvergenceData& d, const std::string& tag, std::uint64_t seed) {
    ModelDims dims{d.plan.window, d.plan.test_len, d.raw.variables(), 0};
    Model m = build_variant(tag, CellKind::LSTM, dims, seed, 0.0);
    if (m.variant.use_gse) {
        CoOccurrenceGraph g = build_cooccurrence(
            time_slice(d.raw.values, 0, d.plan.train_len), d.raw.variable_names);
        m.set_adjacency(g.adjacency, d.raw.variable_names);
    }
    return m;
}

TrainConfig convergence_config(std::uint64_t seed, std::size_t epochs) {
    TrainConfig cfg;
    cfg.seed = seed;
    cfg.max_epochs = epochs;
    cfg.early_stop_patience = epochs; // run the full budget
    cfg.dropout_p = 0.0;
    return cfg;
}

void criterion_convergence() {
    const auto t0 = Clock::now();
    ConvergenceData d = convergence_dataset();

    // 500 epochs at seed 7 must reduce the training loss to <= 10% of epoch 1
    Model m = convergence_model(d, "regenn", 7);
    TrainReport rep = train(m, d.normalized, d.plan, convergence_config(7, 500));
    const double first = rep.train_loss.front();
    const double last = rep.train_loss.back();
    const bool reduced = last <= 0.10 * first;

    // across 5 seeds the full model must not lose to its own linear shortcut
    std::vector<double> full_mae, ar_mae;
    for (std::uint64_t seed = 7; seed < 12; ++seed) {
        Model fm = convergence_model(d, "regenn", seed);
        train(fm, d.normalized, d.plan, convergence_config(seed, 500));
        full_mae.push_back(evaluate(fm, d.normalized, d.plan, d.stats, EvalFlags{true}).global.mae);

        Model am = convergence_model(d, "AR", seed);
        train(am, d.normalized, d.plan, convergence_config(seed, 500));
        ar_mae.push_back(evaluate(am, d.normalized, d.plan, d.stats, EvalFlags{true}).global.mae);
    }
    auto median = [](std::vector<double> xs) {
        std::sort(xs.begin(), xs.end());
        return xs[xs.size() / 2];
    };
    const double med_full = median(full_mae);
    const double med_ar = median(ar_mae);

    std::ostringstream detail;
    detail.precision(4);
    detail << "epoch-1 loss " << first << " -> epoch-500 loss " << last << " (need <= "
           << 0.10 * first << "); median test MAE over 5 seeds: full " << med_full
           << " vs linear-shortcut-only " << med_ar << "; " << seconds_since(t0) << "s";
    report("convergence", reduced && med_full <= med_ar, detail.str());
}

void criterion_determinism() {
    testutil::TempDir dir("regenn_accept_determinism");
    SeriesTensor series = testutil::sinusoid_dataset(3, 24, 2, 99);
    write_tensor(dir.file("data.mmts"), series);
    auto config_for = [&](const std::string& out, std::size_t threads) {
        std::string path = dir.file("c_" + out + ".json");
        std::ofstream(path) << "{\"dataset\": \"" << dir.file("data.mmts")
                            << "\", \"window\": 4, \"validation\": 4, \"stride\": 6,"
                               " \"max_epochs\": 3, \"seed\": 7, \"threads\": "
                            << threads << ", \"out_dir\": \"" << dir.file(out) << "\"}";
        return path;
    };
    const int r1 = cli::run({"train", "-c", config_for("a", 1)});
    const int r2 = cli::run({"train", "-c", config_for("b", 1)});
    const int r3 = cli::run({"train", "-c", config_for("c", 4)});
    const bool same_snap =
        testutil::read_file(dir.file("a/snapshot.rgnn")) ==
            testutil::read_file(dir.file("b/snapshot.rgnn")) &&
        testutil::read_file(dir.file("a/snapshot.rgnn")) ==
            testutil::read_file(dir.file("c/snapshot.rgnn"));
    const bool same_report =
        testutil::read_file(dir.file("a/train_report.json")) ==
            testutil::read_file(dir.file("b/train_report.json")) &&
        testutil::read_file(dir.file("a/train_report.json")) ==
            testutil::read_file(dir.file("c/train_report.json"));
    report("determinism", r1 == 0 && r2 == 0 && r3 == 0 && same_snap && same_report,
           std::string("three runs (threads 1, 1, 4): snapshots ") +
               (same_snap ? "bit-identical" : "DIFFER") + ", reports " +
               (same_report ? "bit-identical" : "DIFFER"));
}

void criterion_transfer_contract() {
    SeriesTensor raw = testutil::sinusoid_dataset(6, 120, 3, 77);
    PlanTemplate tmpl{7, 7, 14};
    TrainConfig cfg;
    cfg.seed = 7;
    cfg.max_epochs = 2;
    cfg.dropout_p = 0.0;
    cfg.early_stop_patience = 10;
    TransferSetup setup;
    const std::vector<std::size_t> schedule = {45, 60, 75, 90, 105, 120};
    auto slices = transfer_train(raw, schedule, tmpl, cfg, setup);

    bool ok = slices.size() == 6;
    std::string note;
    for (std::size_t k = 1; k < slices.size() && ok; ++k) {
        Model prev_model = slices[k - 1].model;
        const std::vector<double> prev = prev_model.flatten_params();
        const std::vector<double>& init = slices[k].init_params;
        const auto expected = static_cast<std::size_t>(
            std::llround(0.2 * static_cast<double>(prev.size())));
        std::size_t zeros = 0;
        bool changes_are_zeroings = true;
        for (std::size_t i = 0; i < init.size(); ++i) {
            if (init[i] == 0.0) ++zeros;
            if (init[i] != prev[i] && init[i] != 0.0) changes_are_zeroings = false;
        }
        if (zeros != expected || !changes_are_zeroings || slices[k].mask_zeroed != expected) {
            ok = false;
            note = "slice " + std::to_string(k) + ": " + std::to_string(zeros) + " zeros, " +
                   std::to_string(expected) + " expected";
        }
    }
    if (note.empty()) {
        const auto n = slices.empty() ? 0 : slices[0].model.param_count();
        note = std::to_string(slices.size()) +
               " snapshots for schedule 45..120; each later slice zeroes exactly round(0.2*" +
               std::to_string(n) + ") entries of its predecessor";
    }
    report("transfer-contract", ok, note);
}

void criterion_evolution_weights() {
    ConvergenceData d = convergence_dataset();
    Model m = convergence_model(d, "regenn", 7);
    // exactly 50 optimizer steps: the training region holds 21 windows per
    // epoch... cap the budget by windows: use 50 single-window epochs instead.
    TrainConfig cfg = convergence_config(7, 3); // 3 epochs x 21 windows = 63 steps >= 50
    train(m, d.normalized, d.plan, cfg);
    forecast_test_region(m, d.normalized, d.plan);
    EvolutionWeights ew = m.extract_evolution_weights();

    bool bounds_ok = true, symmetric = true, diag_ok = true;
    for (const Tensor* cosv : {&ew.a_input_cosine, &ew.a_phi_cosine}) {
        const std::size_t v = cosv->shape.extent(0);
        for (std::size_t i = 0; i < v; ++i) {
            for (std::size_t j = 0; j < v; ++j) {
                if (cosv->at(i, j) > 1.0 + 1e-12 || cosv->at(i, j) < -1.0 - 1e-12) {
                    bounds_ok = false;
                }
                if (cosv->at(i, j) != cosv->at(j, i)) symmetric = false;
            }
        }
    }
    // diagonal 1 on nonzero rows (source matrices here have no zero rows)
    for (std::size_t i = 0; i < ew.a_input_cosine.shape.extent(0); ++i) {
        if (std::fabs(ew.a_input_cosine.at(i, i) - 1.0) > 1e-12) diag_ok = false;
        if (std::fabs(ew.a_phi_cosine.at(i, i) - 1.0) > 1e-12) diag_ok = false;
    }
    double frob = 0.0;
    for (std::size_t i = 0; i < ew.a_input_cosine.numel(); ++i) {
        const double diff = ew.a_input_cosine.v[i] - ew.a_phi_cosine.v[i];
        frob += diff * diff;
    }
    frob = std::sqrt(frob);
    std::ostringstream detail;
    detail << "cosine views symmetric=" << symmetric << " bounded=" << bounds_ok
           << " unit-diagonal=" << diag_ok << "; Frobenius(input vs evolved) = " << frob
           << " (need > 0)";
    report("evolution-weights", symmetric && bounds_ok && diag_ok && frob > 0.0, detail.str());
}

void criterion_end_to_end_shape() {
    // Originally reported benchmark figures for this architecture (e.g. MAE
    // 165.41 / RMSE 915.92 / MSLE 0.05 on the epidemic dataset and the
    // 64.87%/11.96%/7.33% improvement margins) depend on specific data
    // snapshots, seeds and hardware. They are NOT targets here; the gate is
    // an end-to-end run on data of the same 188x120x3 shape with the
    // 7/7/14 plan, finishing with finite metrics inside 30 minutes.
    const auto t0 = Clock::now();
    testutil::TempDir dir("regenn_accept_e2e");

    // 188 per-sample CSVs + manifest, ingested through the CLI
    SeriesTensor series = testutil::sinusoid_dataset(188, 120, 3, 4242);
    std::ostringstream manifest;
    manifest << "{\"samples\": [";
    for (std::size_t i = 0; i < 188; ++i) {
        const std::string name = "sample_" + std::to_string(i) + ".csv";
        std::ofstream csv(dir.file(name));
        csv << "recovered,infected,deaths\n";
        for (std::size_t j = 0; j < 120; ++j) {
            csv << series.values.at(i, j, 0) << ',' << series.values.at(i, j, 1) << ','
                << series.values.at(i, j, 2) << '\n';
        }
        manifest << (i ? "," : "") << "\"" << name << "\"";
    }
    manifest << "]}";
    std::ofstream(dir.file("manifest.json")) << manifest.str();

    std::ofstream(dir.file("c.json"))
        << "{\"dataset\": \"" << dir.file("data.mmts")
        << "\", \"window\": 7, \"validation\": 7, \"stride\": 14, \"max_epochs\": 10,"
           " \"early_stop_patience\": 10, \"seed\": 7, \"out_dir\": \"" << dir.file("out")
        << "\"}";

    const int ri = cli::run({"ingest", "--manifest", dir.file("manifest.json"), "--out",
                             dir.file("data.mmts")});
    const int rg = cli::run({"build-graph", "-c", dir.file("c.json")});
    const int rt = cli::run({"train", "-c", dir.file("c.json")});
    const int re = cli::run({"evaluate", "-c", dir.file("c.json")});
    const int rf = cli::run({"forecast", "-c", dir.file("c.json")});

    bool metrics_finite = false;
    double mae = 0.0, rmse = 0.0, msle = 0.0;
    try {
        const auto metrics = nlohmann::json::parse(testutil::read_file(dir.file("out/metrics.json")));
        mae = metrics.at("global").at("mae").get<double>();
        rmse = metrics.at("global").at("rmse").get<double>();
        msle = metrics.at("global").at("msle").get<double>();
        metrics_finite = std::isfinite(mae) && std::isfinite(rmse) && std::isfinite(msle);
    } catch (const std::exception&) {
        metrics_finite = false;
    }
    const double elapsed = seconds_since(t0);
    std::ostringstream detail;
    detail << "188x120x3 series, 7/7/14 plan: ingest=" << ri << " build-graph=" << rg
           << " train=" << rt << " evaluate=" << re << " forecast=" << rf
           << ", finite metrics (MAE " << mae << ", RMSE " << rmse << ", MSLE " << msle
           << ") = " << metrics_finite << ", " << elapsed
           << "s (limit 1800s); originally reported benchmark error tables are not "
              "reproduction targets";
    report("end-to-end-shape",
           ri == 0 && rg == 0 && rt == 0 && re == 0 && rf == 0 && metrics_finite &&
               elapsed < 1800.0,
           detail.str());
}

} // namespace

int main() {
    const auto t0 = Clock::now();
    criterion_gradient_suite();
    criterion_graph_oracle();
    criterion_metric_oracle();
    criterion_ablation_grid();
    criterion_convergence();
    criterion_determinism();
    criterion_transfer_contract();
    criterion_evolution_weights();
    criterion_end_to_end_shape();
    printf("%d/9 criteria passed in %.1fs\n", 9 - g_failures, seconds_since(t0));
    return g_failures == 0 ? 0 : 1;
}
