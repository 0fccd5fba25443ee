#include "hetrolat/homophily.hpp"

#include <algorithm>
#include <stdexcept>

namespace hetrolat {

double edge_homophily(const SparseAdjacency& a, const std::vector<std::int64_t>& labels) {
    if (static_cast<std::int64_t>(labels.size()) != a.n)
        throw std::invalid_argument("edge_homophily: label vector length mismatch");
    std::int64_t edges = 0, same = 0;
    for (std::int64_t i = 0; i < a.n; ++i) {
        for (std::int64_t k = a.offsets[i]; k < a.offsets[i + 1]; ++k) {
            std::int64_t j = a.columns[k];
            if (j <= i) continue;  // count each undirected edge once
            ++edges;
            if (labels[i] == labels[j]) ++same;
        }
    }
    if (edges == 0) throw std::runtime_error("edge_homophily: no edges");
    return static_cast<double>(same) / static_cast<double>(edges);
}

double metapath_homophily(const HeteroGraph& g, const MetaPath& mp) {
    if (!g.has_labels()) throw std::runtime_error("labels required");
    return edge_homophily(g.metapath_adjacency_cached(mp), g.labels);
}

std::vector<std::optional<double>> node_homophily(const HeteroGraph& g, const MetaPath& mp) {
    if (!g.has_labels()) throw std::runtime_error("labels required");
    const SparseAdjacency& a = g.metapath_adjacency_cached(mp);
    std::vector<std::optional<double>> out(a.n);
    for (std::int64_t i = 0; i < a.n; ++i) {
        std::int64_t deg = a.degree(i);
        if (deg == 0) continue;  // isolated: ratio undefined
        std::int64_t same = 0;
        for (std::int64_t k = a.offsets[i]; k < a.offsets[i + 1]; ++k)
            if (g.labels[a.columns[k]] == g.labels[i]) ++same;
        out[i] = static_cast<double>(same) / static_cast<double>(deg);
    }
    return out;
}

SparseAdjacency knn_graph(const Matrix& features, std::int64_t k) {
    if (k < 1) throw std::invalid_argument("knn_graph: k must be >= 1");
    const std::int64_t n = features.rows;
    std::vector<double> norms(n);
    for (std::int64_t i = 0; i < n; ++i) {
        norms[i] = norm2(features.row(i));
        if (norms[i] == 0.0)
            throw std::runtime_error("knn_graph: zero-norm feature row at node " + std::to_string(i));
    }

    std::vector<std::vector<std::int64_t>> picks(n);
#pragma omp parallel
    {
        std::vector<std::pair<double, std::int64_t>> scored;
#pragma omp for schedule(dynamic, 32)
        for (std::int64_t i = 0; i < n; ++i) {
            scored.clear();
            scored.reserve(n - 1);
            auto fi = features.row(i);
            for (std::int64_t j = 0; j < n; ++j) {
                if (j == i) continue;
                scored.emplace_back(dot(fi, features.row(j)) / (norms[i] * norms[j]), j);
            }
            auto better = [](const auto& a, const auto& b) {
                if (a.first != b.first) return a.first > b.first;
                return a.second < b.second;
            };
            std::int64_t kk = std::min<std::int64_t>(k, static_cast<std::int64_t>(scored.size()));
            std::partial_sort(scored.begin(), scored.begin() + kk, scored.end(), better);
            picks[i].reserve(kk);
            for (std::int64_t t = 0; t < kk; ++t) picks[i].push_back(scored[t].second);
        }
    }

    std::vector<std::tuple<std::int64_t, std::int64_t, double>> trip;
    for (std::int64_t i = 0; i < n; ++i) {
        for (std::int64_t j : picks[i]) {
            trip.emplace_back(i, j, 1.0);
            trip.emplace_back(j, i, 1.0);
        }
    }
    std::sort(trip.begin(), trip.end());
    trip.erase(std::unique(trip.begin(), trip.end()), trip.end());
    SparseAdjacency out = make_csr(n, std::move(trip));
    out.symmetric = true;
    return out;
}

HomophilyReport homophily_report(const HeteroGraph& g, const std::vector<std::int64_t>& knn_ks) {
    if (!g.has_labels()) throw std::runtime_error("labels required");
    HomophilyReport rep;
    for (const auto& mp : g.metapaths) {
        rep.metapath_names.push_back(mp.name);
        rep.mhr.push_back(metapath_homophily(g, mp));
        auto nhr = node_homophily(g, mp);
        rep.isolated_counts.push_back(
            std::count_if(nhr.begin(), nhr.end(), [](const auto& v) { return !v.has_value(); }));
        rep.nhr.push_back(std::move(nhr));
    }
    for (std::int64_t k : knn_ks) {
        SparseAdjacency knn = knn_graph(g.features, k);
        rep.knn_hr[k] = edge_homophily(knn, g.labels);
    }
    return rep;
}

} // namespace hetrolat
