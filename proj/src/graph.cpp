#include "regenn/graph.hpp"

#include <charconv>
#include <fstream>

#include "regenn/errors.hpp"

namespace regenn {

namespace {
void check_region(const Tensor& t) {
    if (t.shape.rank() != 3) {
        throw ShapeError("co-occurrence graph expects a rank-3 tensor, got " +
                         t.shape.to_string());
    }
    if (t.shape.extent(0) == 0 || t.shape.extent(1) == 0 || t.shape.extent(2) == 0) {
        throw DataError("co-occurrence graph: empty tensor " + t.shape.to_string());
    }
}
} // namespace

CoOccurrenceGraph build_cooccurrence(const Tensor& train_region,
                                     std::vector<std::string> variable_names) {
    check_region(train_region);
    const std::size_t s = train_region.shape.extent(0);
    const std::size_t w = train_region.shape.extent(1);
    const std::size_t v = train_region.shape.extent(2);

    CoOccurrenceGraph g;
    g.adjacency = Tensor(Shape{v, v});
    g.source_timestamps = w;
    if (variable_names.empty()) {
        for (std::size_t i = 0; i < v; ++i) variable_names.push_back("v" + std::to_string(i));
    }
    if (variable_names.size() != v) {
        throw ShapeError("co-occurrence graph: " + std::to_string(variable_names.size()) +
                         " variable names for " + std::to_string(v) + " variables");
    }
    g.variable_names = std::move(variable_names);

    // Per timestamp, only the non-zero variables can form edges; each pair
    // (u,v) accumulates T[i,j,u] + T[i,j,v] in (sample, timestamp) order.
    std::vector<std::size_t> active;
    active.reserve(v);
    for (std::size_t i = 0; i < s; ++i) {
        for (std::size_t j = 0; j < w; ++j) {
            active.clear();
            for (std::size_t u = 0; u < v; ++u) {
                if (train_region.at(i, j, u) != 0.0) active.push_back(u);
            }
            for (std::size_t u : active) {
                const double xu = train_region.at(i, j, u);
                for (std::size_t q : active) {
                    g.adjacency.at(u, q) += xu + train_region.at(i, j, q);
                }
            }
        }
    }
    return g;
}

double edge_weight(const Tensor& train_region, std::size_t u, std::size_t v) {
    check_region(train_region);
    const std::size_t vars = train_region.shape.extent(2);
    if (u >= vars || v >= vars) {
        throw UsageError("edge_weight: variable index out of range (" + std::to_string(u) +
                         ", " + std::to_string(v) + ") for " + std::to_string(vars) +
                         " variables");
    }
    const std::size_t s = train_region.shape.extent(0);
    const std::size_t w = train_region.shape.extent(1);
    double acc = 0.0;
    for (std::size_t i = 0; i < s; ++i) {
        for (std::size_t j = 0; j < w; ++j) {
            const double xu = train_region.at(i, j, u);
            const double xv = train_region.at(i, j, v);
            if (xu != 0.0 && xv != 0.0) acc += xu + xv;
        }
    }
    return acc;
}

void write_adjacency_csv(const std::string& path, const CoOccurrenceGraph& graph) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open " + path + " for writing");
    const std::size_t v = graph.adjacency.shape.extent(0);
    out << "variable";
    for (const auto& name : graph.variable_names) out << ',' << name;
    out << '\n';
    char buf[64];
    for (std::size_t i = 0; i < v; ++i) {
        out << graph.variable_names[i];
        for (std::size_t j = 0; j < v; ++j) {
            auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), graph.adjacency.at(i, j));
            out << ',';
            out.write(buf, p - buf);
        }
        out << '\n';
    }
    if (!out) throw DataError("failed while writing " + path);
}

} // namespace regenn
