#pragma once

#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "hetrolat/dense.hpp"
#include "hetrolat/sparse.hpp"

namespace hetrolat {

struct MetaPath {
    std::string name;
    // Edge-type names in traversal order; a leading '~' walks the relation
    // backwards. The composed relation must start and end at the target type.
    std::vector<std::string> steps;
};

struct Relation {
    std::string name;
    std::string src_type;
    std::string dst_type;
    std::vector<std::pair<std::int64_t, std::int64_t>> pairs;
};

/// Typed nodes, typed edge lists, target-node features and labels.
/// Immutable after load; metapath adjacencies are cached on first use.
class HeteroGraph {
public:
    std::vector<std::pair<std::string, std::int64_t>> node_types;
    std::vector<Relation> relations;
    std::string target_type;
    Matrix features;                   // N x d_f, entries >= 0
    std::vector<std::int64_t> labels;  // empty when absent
    std::vector<MetaPath> metapaths;
    std::map<std::string, std::vector<std::int64_t>> splits;  // tag -> node ids

    std::int64_t num_targets() const { return features.rows; }
    bool has_labels() const { return !labels.empty(); }
    std::int64_t num_classes() const;
    std::int64_t type_count(const std::string& type) const;
    const Relation& relation(const std::string& name) const;
    const MetaPath& metapath(const std::string& name) const;

    /// Nodes with zero-norm feature rows (legal to load; some consumers reject them).
    std::vector<std::int64_t> zero_feature_rows() const;

    /// Cached accessor; builds on first call. Safe to call concurrently.
    const SparseAdjacency& metapath_adjacency_cached(const MetaPath& mp) const;

    HeteroGraph() = default;
    HeteroGraph(const HeteroGraph& o);
    HeteroGraph& operator=(const HeteroGraph& o);

private:
    mutable std::mutex cache_mutex_;
    mutable std::map<std::string, SparseAdjacency> adjacency_cache_;
};

/// Parse the on-disk dataset layout (node_types.tsv, edges_*.tsv,
/// features.tsv, optional labels.tsv/splits.tsv, metapaths.txt) and validate
/// every structural invariant.
HeteroGraph load_graph(const std::filesystem::path& dataset_dir);

/// Write a graph back out in the same layout (used by the synthetic generator).
void save_graph(const HeteroGraph& g, const std::filesystem::path& dataset_dir);

/// Boolean symmetric adjacency over target nodes: (i,j) is an edge iff some
/// path instance of the meta-path connects i and j, i != j. Multiplicities
/// are discarded and self-loops removed.
SparseAdjacency metapath_adjacency(const HeteroGraph& g, const MetaPath& mp);

/// All metapath adjacencies, in metapath declaration order.
std::vector<SparseAdjacency> all_metapath_adjacencies(const HeteroGraph& g);

} // namespace hetrolat
