#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hetrolat/graph.hpp"

namespace hetrolat {

/// Per-metapath and per-node homophily measurements plus KNN-graph HR.
struct HomophilyReport {
    std::vector<std::string> metapath_names;
    std::vector<double> mhr;                                      // per metapath
    std::vector<std::vector<std::optional<double>>> nhr;          // [metapath][node]
    std::vector<std::int64_t> isolated_counts;                    // per metapath
    std::map<std::int64_t, double> knn_hr;                        // K -> HR
};

/// Fraction of undirected edges whose endpoints share a label. Requires a
/// symmetric zero-diagonal adjacency with at least one edge.
double edge_homophily(const SparseAdjacency& a, const std::vector<std::int64_t>& labels);

/// edge_homophily of the meta-path subgraph.
double metapath_homophily(const HeteroGraph& g, const MetaPath& mp);

/// Per-node fraction of meta-path neighbors sharing the node's label;
/// nullopt for isolated nodes.
std::vector<std::optional<double>> node_homophily(const HeteroGraph& g, const MetaPath& mp);

/// Directed cosine k-NN (self excluded, ties by ascending index) symmetrized
/// by union. Throws naming the node if a feature row has zero norm.
SparseAdjacency knn_graph(const Matrix& features, std::int64_t k);

HomophilyReport homophily_report(const HeteroGraph& g, const std::vector<std::int64_t>& knn_ks);

} // namespace hetrolat
