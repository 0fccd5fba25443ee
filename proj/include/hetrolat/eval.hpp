#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hetrolat/dense.hpp"
#include "hetrolat/graph.hpp"

namespace hetrolat {

struct MeanStd {
    double mean = 0.0;
    double std = 0.0;
};

struct ProbeMetrics {
    MeanStd macro_f1, micro_f1, auc;
};

/// Multinomial logistic regression on frozen embeddings (full-batch Adam,
/// fixed schedule, deterministic per seed). AUC is macro one-vs-rest.
/// Repeats `runs` times with seeds base_seed..base_seed+runs-1.
ProbeMetrics linear_probe(const Matrix& embeddings, const std::vector<std::int64_t>& labels,
                          const std::vector<std::int64_t>& train_ids,
                          const std::vector<std::int64_t>& test_ids, int runs = 10,
                          std::uint64_t base_seed = 0);

struct ClusterMetrics {
    double nmi = 0.0;         // averaged over restarts
    double ari = 0.0;         // averaged over restarts
    double silhouette = 0.0;  // of the best-inertia restart
};

/// k-means (k = number of classes, k-means++ init, Lloyd) with seeded
/// restarts; NMI and ARI are averaged across restarts.
ClusterMetrics cluster_eval(const Matrix& embeddings, const std::vector<std::int64_t>& labels,
                            int restarts = 10, std::uint64_t base_seed = 0);

/// Fraction of same-label nodes among the top-k cosine neighbors, averaged
/// over the `n_lowest` nodes with the lowest node homophily under one
/// metapath. Returns one value per requested k.
std::map<std::int64_t, double> similarity_search(
    const Matrix& embeddings, const std::vector<std::int64_t>& labels,
    const std::vector<std::optional<double>>& node_hr, std::int64_t n_lowest,
    const std::vector<std::int64_t>& ks, bool* truncated = nullptr);

// standalone metric helpers (used by cluster_eval and tests)
double normalized_mutual_information(const std::vector<std::int64_t>& a,
                                     const std::vector<std::int64_t>& b);
double adjusted_rand_index(const std::vector<std::int64_t>& a, const std::vector<std::int64_t>& b);

struct KMeansResult {
    std::vector<std::int64_t> assignment;
    double inertia = 0.0;
};

KMeansResult kmeans(const Matrix& points, std::int64_t k, std::uint64_t seed,
                    int max_iters = 300);

double silhouette_score(const Matrix& points, const std::vector<std::int64_t>& assignment);

} // namespace hetrolat
