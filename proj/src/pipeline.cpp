#include "regenn/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "binary_io.hpp"
#include "regenn/errors.hpp"

namespace regenn {

namespace fs = std::filesystem;

void SeriesTensor::check_labels() const {
    if (sample_ids.size() != samples() || variable_names.size() != variables() ||
        timestamp_labels.size() != timestamps()) {
        throw ShapeError("series tensor labels do not match extents " +
                         values.shape.to_string());
    }
}

NormScope norm_scope_from_string(const std::string& s) {
    if (s == "train-only" || s == "train_only" || s == "train") return NormScope::TrainOnly;
    if (s == "all") return NormScope::All;
    throw UsageError("unknown normalization scope '" + s + "' (expected train-only or all)");
}

std::string to_string(NormScope s) {
    return s == NormScope::TrainOnly ? "train-only" : "all";
}

void SplitPlan::validate(std::size_t timestamps) const {
    if (train_len == 0 || validation_len == 0 || test_len == 0 || window == 0) {
        throw UsageError("split plan: all parts and the window must be positive");
    }
    if (train_len < window) {
        throw UsageError("split plan: training region (" + std::to_string(train_len) +
                         ") is shorter than the window (" + std::to_string(window) + ")");
    }
    if (total() != timestamps) {
        throw UsageError("split plan: " + std::to_string(train_len) + "+" +
                         std::to_string(validation_len) + "+" + std::to_string(test_len) +
                         " does not cover " + std::to_string(timestamps) + " timestamps");
    }
}

// ---------------------------------------------------------------------------
// ingestion

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            cells.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    cells.push_back(cur);
    return cells;
}

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

struct CsvMatrix {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};

CsvMatrix read_csv_matrix(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);
    CsvMatrix m;
    std::string line;
    if (!std::getline(in, line)) throw DataError(path + ": empty file");
    for (const auto& cell : split_csv_line(line)) m.header.push_back(trim(cell));
    std::size_t row_no = 1;
    while (std::getline(in, line)) {
        ++row_no;
        if (trim(line).empty()) continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != m.header.size()) {
            throw DataError(path + ": row " + std::to_string(row_no) + " has " +
                            std::to_string(cells.size()) + " cells, header has " +
                            std::to_string(m.header.size()));
        }
        std::vector<double> row(cells.size());
        for (std::size_t c = 0; c < cells.size(); ++c) {
            const std::string cell = trim(cells[c]);
            if (cell.empty()) {
                row[c] = 0.0; // absent observation
                continue;
            }
            double x = 0.0;
            const auto [p, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), x);
            if (ec != std::errc{} || p != cell.data() + cell.size()) {
                throw DataError(path + ": unparseable number '" + cell + "' at row " +
                                std::to_string(row_no) + ", column " + std::to_string(c + 1));
            }
            row[c] = x;
        }
        m.rows.push_back(std::move(row));
    }
    return m;
}

} // namespace

SeriesTensor ingest(const std::string& manifest_path) {
    std::ifstream in(manifest_path);
    if (!in) throw DataError("cannot open manifest " + manifest_path);
    nlohmann::json manifest;
    try {
        manifest = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(manifest_path + ": invalid JSON: " + std::string(e.what()));
    }
    if (!manifest.contains("samples") || !manifest["samples"].is_array() ||
        manifest["samples"].empty()) {
        throw DataError(manifest_path + ": manifest needs a non-empty 'samples' array");
    }

    const fs::path base = fs::path(manifest_path).parent_path();
    SeriesTensor series;
    std::size_t t = 0, v = 0;
    std::vector<std::vector<std::vector<double>>> stacked;
    for (const auto& entry : manifest["samples"]) {
        std::string id, rel;
        if (entry.is_string()) {
            rel = entry.get<std::string>();
            id = fs::path(rel).stem().string();
        } else {
            rel = entry.at("path").get<std::string>();
            id = entry.value("id", fs::path(rel).stem().string());
        }
        const std::string path = (base / rel).string();
        CsvMatrix m = read_csv_matrix(path);
        if (stacked.empty()) {
            t = m.rows.size();
            v = m.header.size();
            series.variable_names = m.header;
        } else {
            if (m.rows.size() != t || m.header.size() != v) {
                throw DataError("sample '" + id + "' has " + std::to_string(m.rows.size()) +
                                "x" + std::to_string(m.header.size()) +
                                " cells; peers have " + std::to_string(t) + "x" +
                                std::to_string(v));
            }
            if (m.header != series.variable_names) {
                throw DataError("sample '" + id + "' has a different variable header");
            }
        }
        series.sample_ids.push_back(id);
        stacked.push_back(std::move(m.rows));
    }
    if (t == 0 || v == 0) throw DataError(manifest_path + ": samples have no data rows");

    if (manifest.contains("timestamps")) {
        series.timestamp_labels = manifest["timestamps"].get<std::vector<std::string>>();
        if (series.timestamp_labels.size() != t) {
            throw DataError(manifest_path + ": 'timestamps' lists " +
                            std::to_string(series.timestamp_labels.size()) + " labels for " +
                            std::to_string(t) + " rows");
        }
    } else {
        for (std::size_t i = 0; i < t; ++i) series.timestamp_labels.push_back(std::to_string(i));
    }

    series.values = Tensor(Shape{stacked.size(), t, v});
    for (std::size_t s = 0; s < stacked.size(); ++s) {
        for (std::size_t i = 0; i < t; ++i) {
            for (std::size_t j = 0; j < v; ++j) series.values.at(s, i, j) = stacked[s][i][j];
        }
    }
    return series;
}

// ---------------------------------------------------------------------------
// normalization

NormStats compute_norm_stats(const SeriesTensor& series, NormScope scope,
                             std::size_t train_len) {
    const std::size_t s = series.samples();
    const std::size_t t = series.timestamps();
    const std::size_t v = series.variables();
    const std::size_t bound = scope == NormScope::TrainOnly ? train_len : t;
    if (bound == 0 || bound > t) {
        throw UsageError("normalization scope covers " + std::to_string(bound) + " of " +
                         std::to_string(t) + " timestamps");
    }
    NormStats stats;
    stats.scope = scope;
    stats.min.assign(v, std::numeric_limits<double>::infinity());
    stats.max.assign(v, -std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < s; ++i) {
        for (std::size_t j = 0; j < bound; ++j) {
            for (std::size_t k = 0; k < v; ++k) {
                const double x = series.values.at(i, j, k);
                stats.min[k] = std::min(stats.min[k], x);
                stats.max[k] = std::max(stats.max[k], x);
            }
        }
    }
    return stats;
}

Tensor normalize_values(const Tensor& values, const NormStats& stats) {
    const std::size_t v = values.shape.extent(2);
    if (v != stats.min.size()) {
        throw ShapeError("normalize: " + std::to_string(stats.min.size()) +
                         " statistics for " + std::to_string(v) + " variables");
    }
    Tensor out = values;
    const std::size_t cells = values.numel() / v;
    for (std::size_t r = 0; r < cells; ++r) {
        for (std::size_t k = 0; k < v; ++k) {
            const double range = stats.max[k] - stats.min[k];
            double& x = out.v[r * v + k];
            x = range == 0.0 ? 0.0 : (x - stats.min[k]) / range;
        }
    }
    return out;
}

Tensor denormalize_values(const Tensor& values, const NormStats& stats) {
    const std::size_t v = values.shape.extent(2);
    if (v != stats.min.size()) {
        throw ShapeError("denormalize: " + std::to_string(stats.min.size()) +
                         " statistics for " + std::to_string(v) + " variables");
    }
    Tensor out = values;
    const std::size_t cells = values.numel() / v;
    for (std::size_t r = 0; r < cells; ++r) {
        for (std::size_t k = 0; k < v; ++k) {
            const double range = stats.max[k] - stats.min[k];
            double& x = out.v[r * v + k];
            x = range == 0.0 ? stats.min[k] : x * range + stats.min[k];
        }
    }
    return out;
}

SeriesTensor normalize(const SeriesTensor& series, const NormStats& stats) {
    SeriesTensor out = series;
    out.values = normalize_values(series.values, stats);
    return out;
}

SeriesTensor denormalize(const SeriesTensor& series, const NormStats& stats) {
    SeriesTensor out = series;
    out.values = denormalize_values(series.values, stats);
    return out;
}

// ---------------------------------------------------------------------------
// slicing and windows

Tensor time_slice(const Tensor& values, std::size_t t0, std::size_t t1) {
    if (values.shape.rank() != 3 || t0 > t1 || t1 > values.shape.extent(1)) {
        throw ShapeError("time_slice [" + std::to_string(t0) + ", " + std::to_string(t1) +
                         ") out of range for " + values.shape.to_string());
    }
    const std::size_t s = values.shape.extent(0);
    const std::size_t v = values.shape.extent(2);
    Tensor out(Shape{s, t1 - t0, v});
    for (std::size_t i = 0; i < s; ++i) {
        for (std::size_t j = t0; j < t1; ++j) {
            for (std::size_t k = 0; k < v; ++k) out.at(i, j - t0, k) = values.at(i, j, k);
        }
    }
    return out;
}

Tensor sample_slice(const Tensor& values, std::size_t s0, std::size_t s1) {
    if (values.shape.rank() != 3 || s0 > s1 || s1 > values.shape.extent(0)) {
        throw ShapeError("sample_slice [" + std::to_string(s0) + ", " + std::to_string(s1) +
                         ") out of range for " + values.shape.to_string());
    }
    const std::size_t t = values.shape.extent(1);
    const std::size_t v = values.shape.extent(2);
    Tensor out(Shape{s1 - s0, t, v});
    std::copy(values.v.begin() + static_cast<std::ptrdiff_t>(s0 * t * v),
              values.v.begin() + static_cast<std::ptrdiff_t>(s1 * t * v), out.v.begin());
    return out;
}

SplitRegions split(const SeriesTensor& series, const SplitPlan& plan) {
    plan.validate(series.timestamps());
    SplitRegions r;
    r.train = time_slice(series.values, 0, plan.train_len);
    r.validation =
        time_slice(series.values, plan.train_len, plan.train_len + plan.validation_len);
    r.test = time_slice(series.values, plan.train_len + plan.validation_len, plan.total());
    return r;
}

std::vector<WindowBatch> make_windows(const Tensor& region, std::size_t window,
                                      std::size_t stride) {
    if (region.shape.rank() != 3) {
        throw ShapeError("make_windows: expected a rank-3 region, got " +
                         region.shape.to_string());
    }
    const std::size_t n = region.shape.extent(1);
    if (window == 0 || stride == 0) {
        throw UsageError("make_windows: window and stride must be positive");
    }
    if (n < window + stride) {
        throw DataError("make_windows: region of " + std::to_string(n) +
                        " timestamps is too short for window " + std::to_string(window) +
                        " + stride " + std::to_string(stride));
    }
    std::vector<WindowBatch> out;
    out.reserve(n - window - stride + 1);
    for (std::size_t start = 0; start + window + stride <= n; ++start) {
        WindowBatch b;
        b.start = start;
        b.inputs = time_slice(region, start, start + window);
        b.targets = time_slice(region, start + window, start + window + stride);
        out.push_back(std::move(b));
    }
    return out;
}

// ---------------------------------------------------------------------------
// binary tensor format

namespace {
constexpr char kTensorMagic[9] = "MMTS0001";
}

void write_tensor(const std::string& path, const SeriesTensor& series) {
    series.check_labels();
    nlohmann::json header;
    header["dims"] = {series.samples(), series.timestamps(), series.variables()};
    header["samples"] = series.sample_ids;
    header["variables"] = series.variable_names;
    header["timestamps"] = series.timestamp_labels;
    header["endianness"] = "little";

    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open " + path + " for writing");
    out.write(kTensorMagic, 8);
    const std::string h = header.dump();
    detail::write_u32_be(out, static_cast<std::uint32_t>(h.size()));
    out.write(h.data(), static_cast<std::streamsize>(h.size()));
    for (double x : series.values.v) detail::write_f64_le(out, x);
    if (!out) throw DataError("failed while writing " + path);
}

SeriesTensor read_tensor(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path);
    char magic[8];
    in.read(magic, 8);
    if (in.gcount() != 8 || std::string(magic, 8) != std::string(kTensorMagic, 8)) {
        throw DataError(path + ": bad magic (not an MMTS tensor file)");
    }
    const std::uint32_t hlen = detail::read_u32_be(in, "tensor header");
    std::string h(hlen, '\0');
    in.read(h.data(), hlen);
    if (in.gcount() != static_cast<std::streamsize>(hlen)) {
        throw DataError(path + ": truncated header");
    }
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(h);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(path + ": invalid header JSON: " + std::string(e.what()));
    }
    const auto dims = header.at("dims").get<std::vector<std::size_t>>();
    if (dims.size() != 3) throw DataError(path + ": header dims must have 3 entries");

    SeriesTensor series;
    series.values = Tensor(Shape{dims[0], dims[1], dims[2]});
    series.sample_ids = header.at("samples").get<std::vector<std::string>>();
    series.variable_names = header.at("variables").get<std::vector<std::string>>();
    series.timestamp_labels = header.at("timestamps").get<std::vector<std::string>>();
    try {
        series.check_labels();
    } catch (const ShapeError&) {
        throw DataError(path + ": header labels do not match dims");
    }
    for (double& x : series.values.v) {
        if (!detail::read_f64_le(in, x)) {
            throw DataError(path + ": truncated payload (header promises " +
                            std::to_string(series.values.numel()) + " values)");
        }
    }
    double extra;
    if (detail::read_f64_le(in, extra)) {
        throw DataError(path + ": payload longer than header dims");
    }
    return series;
}

} // namespace regenn
