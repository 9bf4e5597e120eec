#pragma once

#include <string>
#include <vector>

#include "regenn/tensor.hpp"

namespace regenn {

/// The s×t×v value cube with axis labels.
struct SeriesTensor {
    Tensor values; // s×t×v
    std::vector<std::string> sample_ids;
    std::vector<std::string> variable_names;
    std::vector<std::string> timestamp_labels;

    std::size_t samples() const { return values.shape.extent(0); }
    std::size_t timestamps() const { return values.shape.extent(1); }
    std::size_t variables() const { return values.shape.extent(2); }

    void check_labels() const;
};

enum class NormScope { TrainOnly, All };

NormScope norm_scope_from_string(const std::string& s);
std::string to_string(NormScope s);

/// Per-variable min/max used by the [0,1] normalization and its inverse.
struct NormStats {
    std::vector<double> min; // length v
    std::vector<double> max; // length v
    NormScope scope = NormScope::TrainOnly;
};

/// Contiguous time split train|validation|test plus the window size.
struct SplitPlan {
    std::size_t train_len = 0;      // w
    std::size_t validation_len = 0;
    std::size_t test_len = 0;       // z, also the prediction stride
    std::size_t window = 0;         // ω

    std::size_t total() const { return train_len + validation_len + test_len; }
    /// Errors unless w >= ω, all parts positive and the parts sum to t.
    void validate(std::size_t timestamps) const;
};

/// Input/target pair for one window start: inputs cover [start, start+ω),
/// targets [start+ω, start+ω+z) of the source region, all samples.
struct WindowBatch {
    Tensor inputs;  // s×ω×v
    Tensor targets; // s×z×v
    std::size_t start = 0;
};

/// Reads a JSON manifest that lists one t×v CSV matrix per sample. Every CSV
/// must share the same variable header and row count; empty cells ingest as
/// 0 (the no-observation encoding the co-occurrence rule relies on).
SeriesTensor ingest(const std::string& manifest_path);

/// Per-variable min-max normalization to [0,1]. TrainOnly scope computes the
/// statistics over the first train_len timestamps only; All uses every
/// timestamp. Zero-range variables map to all-zeros.
NormStats compute_norm_stats(const SeriesTensor& series, NormScope scope,
                             std::size_t train_len);
SeriesTensor normalize(const SeriesTensor& series, const NormStats& stats);
SeriesTensor denormalize(const SeriesTensor& series, const NormStats& stats);
Tensor normalize_values(const Tensor& values, const NormStats& stats);
Tensor denormalize_values(const Tensor& values, const NormStats& stats);

struct SplitRegions {
    Tensor train;      // s×w×v
    Tensor validation; // s×validation_len×v
    Tensor test;       // s×z×v
};
SplitRegions split(const SeriesTensor& series, const SplitPlan& plan);

/// Time slice [t0, t1) of a raw tensor.
Tensor time_slice(const Tensor& values, std::size_t t0, std::size_t t1);
/// Sample slice [s0, s1).
Tensor sample_slice(const Tensor& values, std::size_t s0, std::size_t s1);

/// All stride-1 windows of a region: one per start index 0..n-ω-z.
/// Errors when the region is shorter than ω+z.
std::vector<WindowBatch> make_windows(const Tensor& region, std::size_t window,
                                      std::size_t stride);

/// Binary tensor format: 8-byte magic "MMTS0001", 4-byte big-endian header
/// length, UTF-8 JSON header (dims, axis labels, endianness tag), then
/// s·t·v little-endian float64 values in (sample, timestamp, variable)
/// row-major order. Round-trips bit-exactly.
void write_tensor(const std::string& path, const SeriesTensor& series);
SeriesTensor read_tensor(const std::string& path);

} // namespace regenn
