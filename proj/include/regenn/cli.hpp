#pragma once

#include <string>
#include <vector>

#include "regenn/pipeline.hpp"
#include "regenn/training.hpp"

namespace regenn::cli {

/// Fully-resolved run configuration: defaults, overridden by a JSON config
/// file, overridden by command-line flags, in that precedence. Echoed beside
/// every command's outputs for provenance.
struct RunConfig {
    std::string dataset;

    // Split plan: train_len 0 derives it from the dataset extent.
    std::size_t window = 0;
    std::size_t validation_len = 0;
    std::size_t test_len = 0;
    std::size_t train_len = 0;

    std::string variant = "regenn";
    std::string cell = "LSTM";
    std::size_t d_ff = 0;

    TrainConfig train;

    bool clamp = true;
    bool graph_on_raw = true;
    std::string out_dir = "out";
    std::size_t threads = 1;
    std::vector<std::size_t> slices; // transfer-train schedule

    std::string to_json() const;
    /// Derives the split plan for a dataset with t timestamps.
    SplitPlan plan_for(std::size_t timestamps) const;
    void validate() const;
};

/// defaults <- file <- overrides (a JSON object), then validated.
RunConfig load_config(const std::string& path, const std::string& overrides_json = "{}");

/// Entry point behind main(): parses `ingest, build-graph, train,
/// transfer-train, evaluate, forecast, ablate, export-evolution` and runs the
/// command. Returns 0 on success, 1 on usage/config errors, 2 on data
/// errors, 3 on numeric failures.
int run(const std::vector<std::string>& args);
int run(int argc, char** argv);

} // namespace regenn::cli
