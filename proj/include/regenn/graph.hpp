#pragma once

#include <string>
#include <vector>

#include "regenn/tensor.hpp"

namespace regenn {

/// Symmetric weighted adjacency of co-occurring variables. Two variables
/// co-occur when both hold a non-zero value at the same (sample, timestamp);
/// the edge weight sums the values of both variables over every such
/// position. Built from the training region only.
struct CoOccurrenceGraph {
    Tensor adjacency; // v×v, non-negative for non-negative input data
    std::vector<std::string> variable_names;
    std::size_t source_timestamps = 0; // training-region length used to build it
};

/// Builds the co-occurrence graph from a training-region tensor s×w×v.
/// The diagonal uses the same rule with u = v, i.e. twice the sum of the
/// variable's non-zero values.
CoOccurrenceGraph build_cooccurrence(const Tensor& train_region,
                                     std::vector<std::string> variable_names = {});

/// Weight of the edge (u, v) computed directly from the training tensor.
/// Equals build_cooccurrence(...).adjacency[u,v]; usable as a scalar oracle.
double edge_weight(const Tensor& train_region, std::size_t u, std::size_t v);

/// Writes the adjacency as CSV: a header of variable names, then one row per
/// variable with the variable name in the first column.
void write_adjacency_csv(const std::string& path, const CoOccurrenceGraph& graph);

} // namespace regenn
