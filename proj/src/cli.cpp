#include "regenn/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "regenn/errors.hpp"
#include "regenn/evaluation.hpp"
#include "regenn/graph.hpp"
#include "regenn/parallel.hpp"

namespace regenn::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void merge_into(json& base, const json& extra) {
    for (auto it = extra.begin(); it != extra.end(); ++it) base[it.key()] = it.value();
}

template <typename T>
void pick(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

RunConfig config_from_json(const json& j) {
    RunConfig c;
    pick(j, "dataset", c.dataset);
    pick(j, "window", c.window);
    pick(j, "validation", c.validation_len);
    pick(j, "stride", c.test_len);
    pick(j, "train_len", c.train_len);
    pick(j, "variant", c.variant);
    pick(j, "cell", c.cell);
    pick(j, "d_ff", c.d_ff);
    pick(j, "learning_rate", c.train.learning_rate);
    pick(j, "clip_norm", c.train.clip_norm);
    pick(j, "dropout", c.train.dropout_p);
    pick(j, "scheduler_factor", c.train.scheduler_factor);
    pick(j, "scheduler_patience", c.train.scheduler_patience);
    pick(j, "scheduler_threshold", c.train.scheduler_threshold);
    pick(j, "max_epochs", c.train.max_epochs);
    pick(j, "early_stop_patience", c.train.early_stop_patience);
    pick(j, "batch_size", c.train.batch_size);
    pick(j, "seed", c.train.seed);
    if (j.contains("norm_scope")) {
        c.train.norm_scope = norm_scope_from_string(j.at("norm_scope").get<std::string>());
    }
    pick(j, "clamp", c.clamp);
    pick(j, "graph_on_raw", c.graph_on_raw);
    pick(j, "out_dir", c.out_dir);
    pick(j, "threads", c.threads);
    pick(j, "slices", c.slices);
    return c;
}

} // namespace

std::string RunConfig::to_json() const {
    json j;
    j["dataset"] = dataset;
    j["window"] = window;
    j["validation"] = validation_len;
    j["stride"] = test_len;
    j["train_len"] = train_len;
    j["variant"] = variant;
    j["cell"] = cell;
    j["d_ff"] = d_ff;
    j["learning_rate"] = train.learning_rate;
    j["clip_norm"] = train.clip_norm;
    j["dropout"] = train.dropout_p;
    j["scheduler_factor"] = train.scheduler_factor;
    j["scheduler_patience"] = train.scheduler_patience;
    j["scheduler_threshold"] = train.scheduler_threshold;
    j["max_epochs"] = train.max_epochs;
    j["early_stop_patience"] = train.early_stop_patience;
    j["batch_size"] = train.batch_size;
    j["seed"] = train.seed;
    j["norm_scope"] = to_string(train.norm_scope);
    j["clamp"] = clamp;
    j["graph_on_raw"] = graph_on_raw;
    j["out_dir"] = out_dir;
    j["threads"] = threads;
    j["slices"] = slices;
    return j.dump(2) + "\n";
}

SplitPlan RunConfig::plan_for(std::size_t timestamps) const {
    SplitPlan plan;
    plan.window = window;
    plan.validation_len = validation_len;
    plan.test_len = test_len;
    if (train_len != 0) {
        plan.train_len = train_len;
    } else {
        if (timestamps <= validation_len + test_len) {
            throw UsageError("dataset has " + std::to_string(timestamps) +
                             " timestamps; validation + stride need more");
        }
        plan.train_len = timestamps - validation_len - test_len;
    }
    plan.validate(timestamps);
    return plan;
}

void RunConfig::validate() const {
    train.validate();
    if (window == 0) throw UsageError("config: 'window' must be positive");
    if (validation_len == 0) throw UsageError("config: 'validation' must be positive");
    if (test_len == 0) throw UsageError("config: 'stride' must be positive");
    cell_kind_from_string(cell); // errors on unknown kinds
}

RunConfig load_config(const std::string& path, const std::string& overrides_json) {
    json merged = json::object();
    if (!path.empty()) {
        std::ifstream in(path);
        if (!in) throw UsageError("cannot open config file " + path);
        std::string text((std::istreambuf_iterator<char>(in)),
                         std::istreambuf_iterator<char>());
        if (text.find_first_not_of(" \t\r\n") != std::string::npos) {
            try {
                merged = json::parse(text);
            } catch (const json::exception& e) {
                throw UsageError(path + ": invalid JSON: " + std::string(e.what()));
            }
            if (!merged.is_object()) {
                throw UsageError(path + ": config must be a JSON object");
            }
        }
    }
    json overrides;
    try {
        overrides = json::parse(overrides_json);
    } catch (const json::exception& e) {
        throw UsageError("invalid overrides: " + std::string(e.what()));
    }
    merge_into(merged, overrides);
    try {
        return config_from_json(merged);
    } catch (const json::exception& e) {
        throw UsageError("config: " + std::string(e.what()));
    }
}

// ---------------------------------------------------------------------------
// command helpers

namespace {

struct Prepared {
    SeriesTensor raw;
    SeriesTensor normalized;
    NormStats stats;
    SplitPlan plan;
};

Prepared prepare(const RunConfig& cfg) {
    if (cfg.dataset.empty()) throw UsageError("config: 'dataset' is required");
    Prepared p;
    p.raw = read_tensor(cfg.dataset);
    p.plan = cfg.plan_for(p.raw.timestamps());
    p.stats = compute_norm_stats(p.raw, cfg.train.norm_scope, p.plan.train_len);
    p.normalized = normalize(p.raw, p.stats);
    return p;
}

Model build_model(const RunConfig& cfg, const Prepared& p, const std::string& tag,
                  std::uint64_t seed) {
    ModelDims dims{p.plan.window, p.plan.test_len, p.raw.variables(), cfg.d_ff};
    Model m = build_variant(tag, cell_kind_from_string(cfg.cell), dims, seed,
                            cfg.train.dropout_p);
    if (m.variant.use_gse) {
        const Tensor& source = cfg.graph_on_raw ? p.raw.values : p.normalized.values;
        CoOccurrenceGraph g =
            build_cooccurrence(time_slice(source, 0, p.plan.train_len), p.raw.variable_names);
        m.set_adjacency(g.adjacency, p.raw.variable_names);
    }
    return m;
}

void write_text(const fs::path& path, const std::string& text) {
    fs::create_directories(path.parent_path().empty() ? "." : path.parent_path());
    std::ofstream out(path);
    if (!out) throw DataError("cannot open " + path.string() + " for writing");
    out << text;
    if (!out) throw DataError("failed while writing " + path.string());
}

void echo_config(const RunConfig& cfg) {
    write_text(fs::path(cfg.out_dir) / "config.json", cfg.to_json());
}

void write_matrix_csv(const fs::path& path, const Tensor& m,
                      const std::vector<std::string>& names) {
    CoOccurrenceGraph g;
    g.adjacency = m;
    g.variable_names = names;
    write_adjacency_csv(path.string(), g);
}

std::string slugify(const std::string& tag) {
    std::string s;
    for (std::size_t i = 0; i < tag.size(); ++i) {
        if (tag.compare(i, 3, "\xe2\x86\x92") == 0) {
            s += '-';
            i += 2;
        } else if (std::isalnum(static_cast<unsigned char>(tag[i]))) {
            s += static_cast<char>(std::tolower(static_cast<unsigned char>(tag[i])));
        } else if (tag[i] == '+') {
            s += '_';
        }
    }
    return s;
}

// ---------------------------------------------------------------------------
// commands

int cmd_ingest(const std::string& manifest, const std::string& out) {
    SeriesTensor series = ingest(manifest);
    fs::path out_path(out);
    if (!out_path.parent_path().empty()) fs::create_directories(out_path.parent_path());
    write_tensor(out, series);
    std::cout << "ingested " << series.samples() << " samples x " << series.timestamps()
              << " timestamps x " << series.variables() << " variables -> " << out << "\n";
    return 0;
}

int cmd_build_graph(const RunConfig& cfg, const std::string& out) {
    Prepared p = prepare(cfg);
    const Tensor& source = cfg.graph_on_raw ? p.raw.values : p.normalized.values;
    CoOccurrenceGraph g =
        build_cooccurrence(time_slice(source, 0, p.plan.train_len), p.raw.variable_names);
    const std::string path = out.empty() ? (fs::path(cfg.out_dir) / "graph.csv").string() : out;
    fs::path parent = fs::path(path).parent_path();
    if (!parent.empty()) fs::create_directories(parent);
    write_adjacency_csv(path, g);
    echo_config(cfg);
    std::cout << "graph over " << g.source_timestamps << " training timestamps -> " << path
              << "\n";
    return 0;
}

int cmd_train(const RunConfig& cfg) {
    Prepared p = prepare(cfg);
    Model model = build_model(cfg, p, cfg.variant, cfg.train.seed);
    TrainReport report = train(model, p.normalized, p.plan, cfg.train);
    fs::create_directories(cfg.out_dir);
    const std::string snap = (fs::path(cfg.out_dir) / "snapshot.rgnn").string();
    model.save_snapshot(snap, report.best_epoch);
    report.snapshot_path = "snapshot.rgnn";
    write_text(fs::path(cfg.out_dir) / "train_report.json", report.to_json());
    echo_config(cfg);
    std::cout << "trained '" << cfg.variant << "' for " << report.train_loss.size()
              << " epochs; best validation MAE "
              << (report.best_epoch ? std::to_string(report.best_validation_mae) : "n/a")
              << " -> " << snap << "\n";
    return 0;
}

int cmd_transfer_train(const RunConfig& cfg) {
    if (cfg.slices.empty()) {
        throw UsageError("transfer-train needs a slice schedule (--slices or config 'slices')");
    }
    if (cfg.dataset.empty()) throw UsageError("config: 'dataset' is required");
    Prepared p{};
    p.raw = read_tensor(cfg.dataset);
    PlanTemplate tmpl{cfg.window, cfg.validation_len, cfg.test_len};
    TransferSetup setup{cfg.variant, cell_kind_from_string(cfg.cell), cfg.d_ff,
                        cfg.graph_on_raw};
    std::vector<TransferSlice> slices = transfer_train(p.raw, cfg.slices, tmpl, cfg.train, setup);

    fs::create_directories(cfg.out_dir);
    json summary = json::array();
    for (TransferSlice& s : slices) {
        const fs::path dir = fs::path(cfg.out_dir) / ("slice_" + std::to_string(s.slice_end));
        fs::create_directories(dir);
        s.model.save_snapshot((dir / "snapshot.rgnn").string(), s.report.best_epoch);
        s.report.snapshot_path = "snapshot.rgnn";
        write_text(dir / "train_report.json", s.report.to_json());

        const SplitPlan plan = tmpl.for_timestamps(s.slice_end);
        SeriesTensor prefix;
        prefix.values = time_slice(p.raw.values, 0, s.slice_end);
        prefix.sample_ids = p.raw.sample_ids;
        prefix.variable_names = p.raw.variable_names;
        prefix.timestamp_labels.assign(p.raw.timestamp_labels.begin(),
                                       p.raw.timestamp_labels.begin() +
                                           static_cast<std::ptrdiff_t>(s.slice_end));
        const SeriesTensor norm = normalize(prefix, s.stats);
        EvalFlags flags{cfg.clamp};
        MetricsReport metrics = evaluate(s.model, norm, plan, s.stats, flags);
        write_text(dir / "metrics.json", metrics.to_json());

        summary.push_back({{"slice_end", s.slice_end},
                           {"mask_zeroed", s.mask_zeroed},
                           {"epochs", s.report.train_loss.size()},
                           {"best_validation_mae", s.report.best_validation_mae},
                           {"test_mae", metrics.global.mae}});
    }
    write_text(fs::path(cfg.out_dir) / "transfer_report.json", summary.dump(2) + "\n");
    echo_config(cfg);
    std::cout << "transfer-trained " << slices.size() << " slices -> " << cfg.out_dir << "\n";
    return 0;
}

Model load_model_with_graph(const RunConfig& cfg, const Prepared& p,
                            const std::string& snapshot) {
    Model model = Model::load_snapshot(snapshot);
    if (model.variant.use_gse) {
        const Tensor& source = cfg.graph_on_raw ? p.raw.values : p.normalized.values;
        CoOccurrenceGraph g =
            build_cooccurrence(time_slice(source, 0, p.plan.train_len), p.raw.variable_names);
        model.set_adjacency(g.adjacency, p.raw.variable_names);
    }
    return model;
}

int cmd_evaluate(const RunConfig& cfg, const std::string& snapshot) {
    Prepared p = prepare(cfg);
    Model model = load_model_with_graph(cfg, p, snapshot);
    EvalFlags flags{cfg.clamp};
    MetricsReport metrics = evaluate(model, p.normalized, p.plan, p.stats, flags);
    fs::create_directories(cfg.out_dir);
    write_text(fs::path(cfg.out_dir) / "metrics.json", metrics.to_json());
    write_text(fs::path(cfg.out_dir) / "per_variable.csv", metrics.per_variable_csv());
    echo_config(cfg);
    std::cout << "test MAE " << metrics.global.mae << ", RMSE " << metrics.global.rmse
              << ", MSLE " << metrics.global.msle << " over " << metrics.n << " elements\n";
    return 0;
}

int cmd_forecast(const RunConfig& cfg, const std::string& snapshot, const std::string& out) {
    Prepared p = prepare(cfg);
    Model model = load_model_with_graph(cfg, p, snapshot);
    Tensor pred = denormalize_values(forecast_test_region(model, p.normalized, p.plan), p.stats);
    if (cfg.clamp) pred = clamp_nonnegative(pred);

    SeriesTensor series;
    series.values = std::move(pred);
    series.sample_ids = p.raw.sample_ids;
    series.variable_names = p.raw.variable_names;
    const std::size_t test_start = p.plan.train_len + p.plan.validation_len;
    series.timestamp_labels.assign(
        p.raw.timestamp_labels.begin() + static_cast<std::ptrdiff_t>(test_start),
        p.raw.timestamp_labels.begin() + static_cast<std::ptrdiff_t>(test_start + p.plan.test_len));
    const std::string path =
        out.empty() ? (fs::path(cfg.out_dir) / "forecast.mmts").string() : out;
    fs::path parent = fs::path(path).parent_path();
    if (!parent.empty()) fs::create_directories(parent);
    write_tensor(path, series);
    echo_config(cfg);
    std::cout << "forecast for the " << p.plan.test_len << " test timestamps -> " << path
              << "\n";
    return 0;
}

int cmd_ablate(const RunConfig& cfg) {
    static const std::vector<std::string> kTags = {
        "BRU",
        "E \xe2\x86\x92 BRU",
        "(E \xe2\x86\x92 BRU + BRU) + AR",
        "(E \xe2\x86\x92 BRU + URU) + AR",
        "(E \xe2\x86\x92 BRU) + AR",
        "E \xe2\x86\x92 URU",
        "(E \xe2\x86\x92 URU + BRU) + AR",
        "(E \xe2\x86\x92 URU + URU) + AR",
        "(E \xe2\x86\x92 URU) + AR",
        "URU",
    };
    static const std::vector<std::string> kCells = {"Elman", "GRU", "LSTM"};

    Prepared p = prepare(cfg);
    fs::create_directories(cfg.out_dir);

    std::ostringstream rows;
    rows << "cell,architecture,mae,rmse,msle\n";
    rows.precision(17);
    // tag -> cell -> metrics, for the wide table
    std::vector<std::vector<MetricTriple>> table(kTags.size(),
                                                 std::vector<MetricTriple>(kCells.size()));
    for (std::size_t ci = 0; ci < kCells.size(); ++ci) {
        RunConfig sub = cfg;
        sub.cell = kCells[ci];
        for (std::size_t ti = 0; ti < kTags.size(); ++ti) {
            const std::string& tag = kTags[ti];
            Model model = build_model(sub, p, tag, cfg.train.seed);
            TrainReport report = train(model, p.normalized, p.plan, sub.train);
            EvalFlags flags{cfg.clamp};
            MetricsReport metrics = evaluate(model, p.normalized, p.plan, p.stats, flags);

            const fs::path dir = fs::path(cfg.out_dir) / "ablate" / kCells[ci] / slugify(tag);
            fs::create_directories(dir);
            model.save_snapshot((dir / "snapshot.rgnn").string(), report.best_epoch);
            report.snapshot_path = "snapshot.rgnn";
            write_text(dir / "train_report.json", report.to_json());
            write_text(dir / "metrics.json", metrics.to_json());

            rows << kCells[ci] << ",\"" << tag << "\"," << metrics.global.mae << ','
                 << metrics.global.rmse << ',' << metrics.global.msle << '\n';
            table[ti][ci] = metrics.global;
            std::cout << kCells[ci] << "  " << tag << "  MAE " << metrics.global.mae << "\n";
        }
    }
    write_text(fs::path(cfg.out_dir) / "ablation_results.csv", rows.str());

    std::ostringstream wide;
    wide << "architecture";
    for (const auto& cell : kCells) {
        wide << ',' << cell << "_mae," << cell << "_rmse," << cell << "_msle";
    }
    wide << '\n';
    wide.precision(17);
    for (std::size_t ti = 0; ti < kTags.size(); ++ti) {
        wide << '"' << kTags[ti] << '"';
        for (std::size_t ci = 0; ci < kCells.size(); ++ci) {
            wide << ',' << table[ti][ci].mae << ',' << table[ti][ci].rmse << ','
                 << table[ti][ci].msle;
        }
        wide << '\n';
    }
    write_text(fs::path(cfg.out_dir) / "ablation_table.csv", wide.str());
    echo_config(cfg);
    std::cout << "ablation grid of " << kTags.size() * kCells.size() << " variants -> "
              << cfg.out_dir << "\n";
    return 0;
}

int cmd_export_evolution(const RunConfig& cfg, const std::string& snapshot,
                         const std::string& out) {
    Prepared p = prepare(cfg);
    Model model = load_model_with_graph(cfg, p, snapshot);
    // One forward pass over the evaluation window materializes the matrices.
    forecast_test_region(model, p.normalized, p.plan);
    EvolutionWeights ew = model.extract_evolution_weights();

    const fs::path dir = out.empty() ? fs::path(cfg.out_dir) / "evolution" : fs::path(out);
    fs::create_directories(dir);
    const std::vector<std::pair<std::string, const Tensor*>> files = {
        {"a_input.csv", &ew.a_input},
        {"a_mu.csv", &ew.a_mu},
        {"a_phi.csv", &ew.a_phi},
        {"a_psi.csv", &ew.a_psi},
        {"a_input_cosine.csv", &ew.a_input_cosine},
        {"a_phi_cosine.csv", &ew.a_phi_cosine},
    };
    json manifest;
    manifest["variables"] = ew.variable_names;
    json mats = json::object();
    for (const auto& [name, tensor] : files) {
        write_matrix_csv(dir / name, *tensor, ew.variable_names);
        mats[name.substr(0, name.size() - 4)] = name;
    }
    manifest["matrices"] = mats;
    write_text(dir / "manifest.json", manifest.dump(2) + "\n");
    echo_config(cfg);
    std::cout << "evolution weights (" << files.size() << " matrices) -> " << dir.string()
              << "\n";
    return 0;
}

} // namespace

// ---------------------------------------------------------------------------
// argument parsing

int run(const std::vector<std::string>& args) {
    CLI::App app{"Multiple multivariate time-series forecasting with graph-evolution layers"};
    app.require_subcommand(1);

    std::string config_path;
    json overrides = json::object();
    std::string manifest, out, snapshot;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("-c,--config", config_path, "JSON configuration file");
        sub->add_option_function<std::string>(
            "--dataset", [&](const std::string& v) { overrides["dataset"] = v; },
            "MMTS dataset path");
        sub->add_option_function<std::string>(
            "--out-dir", [&](const std::string& v) { overrides["out_dir"] = v; },
            "output directory");
        sub->add_option_function<std::size_t>(
            "--window", [&](std::size_t v) { overrides["window"] = v; }, "window size ω");
        sub->add_option_function<std::size_t>(
            "--validation", [&](std::size_t v) { overrides["validation"] = v; },
            "validation timestamps");
        sub->add_option_function<std::size_t>(
            "--stride", [&](std::size_t v) { overrides["stride"] = v; },
            "prediction stride z (= test timestamps)");
        sub->add_option_function<std::size_t>(
            "--train-len", [&](std::size_t v) { overrides["train_len"] = v; },
            "training timestamps (default: derived)");
        sub->add_option_function<std::string>(
            "--variant", [&](const std::string& v) { overrides["variant"] = v; },
            "architecture tag ('regenn', 'AR', '(E -> URU + BRU) + AR', ...)");
        sub->add_option_function<std::string>(
            "--cell", [&](const std::string& v) { overrides["cell"] = v; },
            "recurrent cell kind: Elman, GRU or LSTM");
        sub->add_option_function<std::size_t>(
            "--d-ff", [&](std::size_t v) { overrides["d_ff"] = v; },
            "encoder feed-forward width (0 = window)");
        sub->add_option_function<double>(
            "--lr", [&](double v) { overrides["learning_rate"] = v; }, "learning rate");
        sub->add_option_function<double>(
            "--clip-norm", [&](double v) { overrides["clip_norm"] = v; },
            "gradient clipping ceiling (0 disables)");
        sub->add_option_function<double>(
            "--dropout", [&](double v) { overrides["dropout"] = v; }, "dropout probability");
        sub->add_option_function<std::size_t>(
            "--max-epochs", [&](std::size_t v) { overrides["max_epochs"] = v; }, "epoch budget");
        sub->add_option_function<std::size_t>(
            "--batch-size", [&](std::size_t v) { overrides["batch_size"] = v; },
            "samples per optimizer step");
        sub->add_option_function<std::uint64_t>(
            "--seed", [&](std::uint64_t v) { overrides["seed"] = v; }, "random seed");
        sub->add_option_function<std::string>(
            "--norm-scope", [&](const std::string& v) { overrides["norm_scope"] = v; },
            "normalization statistics scope: train-only or all");
        sub->add_flag_function(
            "--clamp,!--no-clamp",
            [&](std::int64_t v) { overrides["clamp"] = v > 0; },
            "clamp negative predictions at evaluation (default on)");
        sub->add_flag_function(
            "--graph-on-raw,!--graph-on-normalized",
            [&](std::int64_t v) { overrides["graph_on_raw"] = v > 0; },
            "build the co-occurrence graph on raw values (default) or normalized ones");
        sub->add_option_function<std::size_t>(
            "--threads", [&](std::size_t v) { overrides["threads"] = v; }, "worker threads");
        return sub;
    };

    CLI::App* ing = app.add_subcommand("ingest", "stack per-sample CSV matrices into an MMTS file");
    ing->add_option("--manifest", manifest, "JSON manifest listing per-sample CSVs")->required();
    ing->add_option("--out", out, "output MMTS path")->required();

    CLI::App* bg = add_common(
        app.add_subcommand("build-graph", "build the co-occurrence graph and export it as CSV"));
    bg->add_option("--out", out, "output CSV path (default <out_dir>/graph.csv)");

    add_common(app.add_subcommand("train", "train one architecture on the dataset"));

    CLI::App* tt = add_common(app.add_subcommand(
        "transfer-train", "train over growing time prefixes, seeding each slice from the last"));
    tt->add_option_function<std::vector<std::size_t>>(
        "--slices",
        [&](const std::vector<std::size_t>& v) { overrides["slices"] = v; },
        "slice ends in timestamps, e.g. 45 60 75 90 105 120");

    CLI::App* ev = add_common(app.add_subcommand("evaluate", "score a snapshot on the test region"));
    ev->add_option("--snapshot", snapshot, "snapshot path (default <out_dir>/snapshot.rgnn)");

    CLI::App* fc = add_common(
        app.add_subcommand("forecast", "write denormalized test-region predictions as MMTS"));
    fc->add_option("--snapshot", snapshot, "snapshot path (default <out_dir>/snapshot.rgnn)");
    fc->add_option("--out", out, "output MMTS path (default <out_dir>/forecast.mmts)");

    add_common(app.add_subcommand(
        "ablate", "train and score the 10-architecture x 3-cell ablation grid"));

    CLI::App* ee = add_common(app.add_subcommand(
        "export-evolution", "export the adjacency matrices and their cosine views"));
    ee->add_option("--snapshot", snapshot, "snapshot path (default <out_dir>/snapshot.rgnn)");
    ee->add_option("--out", out, "output directory (default <out_dir>/evolution)");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        if (ing->parsed()) return cmd_ingest(manifest, out);

        RunConfig cfg = load_config(config_path, overrides.dump());
        set_max_threads(cfg.threads == 0 ? 1 : cfg.threads);
        cfg.validate();
        const std::string snap_path =
            snapshot.empty() ? (fs::path(cfg.out_dir) / "snapshot.rgnn").string() : snapshot;

        if (bg->parsed()) return cmd_build_graph(cfg, out);
        if (app.get_subcommand("train")->parsed()) return cmd_train(cfg);
        if (tt->parsed()) return cmd_transfer_train(cfg);
        if (ev->parsed()) return cmd_evaluate(cfg, snap_path);
        if (fc->parsed()) return cmd_forecast(cfg, snap_path, out);
        if (app.get_subcommand("ablate")->parsed()) return cmd_ablate(cfg);
        if (ee->parsed()) return cmd_export_evolution(cfg, snap_path, out);
        throw UsageError("no command given");
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return 3;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

int run(int argc, char** argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run(args);
}

} // namespace regenn::cli
