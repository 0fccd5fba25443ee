#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include "hetrolat/graph.hpp"
#include "hetrolat/sparse.hpp"

namespace hetrolat {

/// Homophilic / heterophilic latent graphs mined from coupled
/// structure-feature similarity, plus the per-node positive-sample lists
/// used by contrastive training. The node itself is implicitly prepended to
/// its positives at loss time.
struct LatentGraphPair {
    SparseAdjacency homophilic;    // A^S, union-symmetrized, zero diagonal
    SparseAdjacency heterophilic;  // A^W, union-symmetrized, zero diagonal
    // Raw per-node top-K selections before symmetrization (kept for audits;
    // not persisted).
    std::vector<std::vector<std::int64_t>> homophilic_lists;
    std::vector<std::vector<std::int64_t>> heterophilic_lists;
    // Per node: up to k_pos ids, sorted by descending coupled similarity,
    // ties by ascending index.
    std::vector<std::vector<std::int64_t>> positives;
    std::int64_t k = 0;
    std::int64_t k_pos = 0;
};

/// Average of the row-stochastic walk matrices of all subgraphs. Rows sum to 1.
SparseAdjacency diffusion_matrix(const std::vector<SparseAdjacency>& subgraphs);

struct CoupledSimilarity {
    double structure = 0.0;  // cosine of diffusion rows
    double feature = 0.0;    // cosine of feature rows, 0 when a row is zero
    double combined = 0.0;   // product
};

CoupledSimilarity coupled_similarity(const SparseAdjacency& diffusion, const Matrix& features,
                                     std::int64_t i, std::int64_t j);

/// All-pairs variant. Quadratic in N; refuses graphs above `dense_cap`.
LatentGraphPair build_latent_graphs_full(const SparseAdjacency& diffusion, const Matrix& features,
                                         std::int64_t k, std::int64_t k_pos,
                                         std::int64_t dense_cap = 20000);

/// Linear-time variant: homophilic candidates are first-order metapath
/// neighbors, heterophilic candidates an anchor sample of size m. With m = N
/// the heterophilic side reproduces the full variant exactly.
LatentGraphPair build_latent_graphs_scalable(const HeteroGraph& g,
                                             const std::vector<SparseAdjacency>& subgraphs,
                                             const Matrix& features, std::int64_t k,
                                             std::int64_t k_pos, std::int64_t anchors,
                                             std::uint64_t seed);

struct LatentAudit {
    double hr_homophilic = 0.0;    // of the symmetrized graph
    double hr_heterophilic = 0.0;
    // Directed-selection ratios, available when raw lists are present.
    std::optional<double> raw_hr_homophilic;
    std::optional<double> raw_hr_heterophilic;
};

LatentAudit latent_homophily_audit(const LatentGraphPair& pair,
                                   const std::vector<std::int64_t>& labels);

/// Binary persistence: magic "LATG", version, N, K, k_pos, CSR dumps of both
/// graphs, then the positives lists. Little-endian u32 indices / f64 values.
void save_latent(const LatentGraphPair& pair, const std::filesystem::path& path);
LatentGraphPair load_latent(const std::filesystem::path& path);

} // namespace hetrolat
