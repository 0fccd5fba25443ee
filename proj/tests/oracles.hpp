#pragma once

// Brute-force reference implementations used to pin expected values. These
// stay deliberately naive and independent of the library's computation
// paths: dense matrices, double loops, full sorts.

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "hetrolat/dense.hpp"
#include "hetrolat/graph.hpp"
#include "hetrolat/rng.hpp"
#include "hetrolat/sparse.hpp"

namespace oracle {

using hetrolat::HeteroGraph;
using hetrolat::Matrix;
using hetrolat::MetaPath;
using hetrolat::Rng;
using hetrolat::SparseAdjacency;

inline Matrix to_dense(const SparseAdjacency& a) {
    Matrix m(a.n, a.n);
    for (std::int64_t i = 0; i < a.n; ++i)
        for (std::int64_t k = a.offsets[i]; k < a.offsets[i + 1]; ++k)
            m(i, a.columns[k]) = a.values[k];
    return m;
}

inline Matrix dense_matmul(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows, b.cols);
    for (std::int64_t i = 0; i < a.rows; ++i)
        for (std::int64_t j = 0; j < b.cols; ++j)
            for (std::int64_t k = 0; k < a.cols; ++k) out(i, j) += a(i, k) * b(k, j);
    return out;
}

// directed path enumeration over the relation sequence, then symmetrized
inline Matrix metapath_dense(const HeteroGraph& g, const MetaPath& mp) {
    const std::int64_t n = g.num_targets();
    Matrix reach;  // current frontier: n x (count of cursor type)
    bool first = true;
    for (const auto& step : mp.steps) {
        bool reversed = step[0] == '~';
        const auto& rel = g.relation(reversed ? step.substr(1) : step);
        std::int64_t rows = g.type_count(reversed ? rel.dst_type : rel.src_type);
        std::int64_t cols = g.type_count(reversed ? rel.src_type : rel.dst_type);
        Matrix hop(rows, cols);
        for (auto [s, d] : rel.pairs) {
            if (reversed) hop(d, s) = 1.0;
            else hop(s, d) = 1.0;
        }
        reach = first ? hop : dense_matmul(reach, hop);
        first = false;
        for (double& v : reach.data) v = v > 0.0 ? 1.0 : 0.0;
    }
    Matrix out(n, n);
    for (std::int64_t i = 0; i < n; ++i)
        for (std::int64_t j = 0; j < n; ++j)
            if (i != j && (reach(i, j) > 0.0 || reach(j, i) > 0.0)) out(i, j) = 1.0;
    return out;
}

inline double edge_hr_dense(const Matrix& adj, const std::vector<std::int64_t>& y) {
    std::int64_t edges = 0, same = 0;
    for (std::int64_t i = 0; i < adj.rows; ++i)
        for (std::int64_t j = i + 1; j < adj.cols; ++j)
            if (adj(i, j) > 0.0) {
                ++edges;
                if (y[i] == y[j]) ++same;
            }
    return static_cast<double>(same) / static_cast<double>(edges);
}

inline std::vector<std::optional<double>> nhr_dense(const Matrix& adj,
                                                    const std::vector<std::int64_t>& y) {
    std::vector<std::optional<double>> out(adj.rows);
    for (std::int64_t i = 0; i < adj.rows; ++i) {
        std::int64_t deg = 0, same = 0;
        for (std::int64_t j = 0; j < adj.cols; ++j)
            if (adj(i, j) > 0.0) {
                ++deg;
                if (y[i] == y[j]) ++same;
            }
        if (deg > 0) out[i] = static_cast<double>(same) / static_cast<double>(deg);
    }
    return out;
}

// dense random-walk diffusion: average over subgraphs of (A+I) row-normalized
inline Matrix diffusion_dense(const std::vector<Matrix>& subgraphs) {
    const std::int64_t n = subgraphs.front().rows;
    Matrix m(n, n);
    for (const auto& a : subgraphs) {
        for (std::int64_t i = 0; i < n; ++i) {
            double deg = 1.0;
            for (std::int64_t j = 0; j < n; ++j) deg += a(i, j);
            for (std::int64_t j = 0; j < n; ++j)
                m(i, j) += ((i == j ? 1.0 : 0.0) + a(i, j)) / deg / subgraphs.size();
        }
    }
    return m;
}

inline double cosine_rows(const Matrix& m, std::int64_t i, std::int64_t j) {
    double num = 0.0, ni = 0.0, nj = 0.0;
    for (std::int64_t c = 0; c < m.cols; ++c) {
        num += m(i, c) * m(j, c);
        ni += m(i, c) * m(i, c);
        nj += m(j, c) * m(j, c);
    }
    if (ni == 0.0 || nj == 0.0) return 0.0;
    double v = num / (std::sqrt(ni) * std::sqrt(nj));
    return std::min(1.0, std::max(0.0, v));
}

// full top-K by (score desc, index asc) from an exhaustive pair scan
inline std::vector<std::int64_t> topk_dense(const std::vector<double>& scores,
                                            std::int64_t self, std::int64_t k) {
    std::vector<std::pair<double, std::int64_t>> scored;
    for (std::int64_t j = 0; j < static_cast<std::int64_t>(scores.size()); ++j)
        if (j != self) scored.emplace_back(scores[j], j);
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    std::vector<std::int64_t> out;
    for (std::int64_t t = 0; t < std::min<std::int64_t>(k, scored.size()); ++t)
        out.push_back(scored[t].second);
    return out;
}

// cyclic Jacobi eigendecomposition of a dense symmetric matrix; returns the
// eigenvector of the largest eigenvalue
inline std::vector<double> top_eigenvector_jacobi(Matrix a) {
    const std::int64_t n = a.rows;
    Matrix v(n, n);
    for (std::int64_t i = 0; i < n; ++i) v(i, i) = 1.0;
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::int64_t p = 0; p < n; ++p)
            for (std::int64_t q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
        if (off < 1e-30) break;
        for (std::int64_t p = 0; p < n; ++p) {
            for (std::int64_t q = p + 1; q < n; ++q) {
                if (a(p, q) == 0.0) continue;
                double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
                double t = (theta >= 0 ? 1.0 : -1.0) /
                           (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                double c = 1.0 / std::sqrt(t * t + 1.0);
                double s = t * c;
                for (std::int64_t i = 0; i < n; ++i) {
                    double aip = a(i, p), aiq = a(i, q);
                    a(i, p) = c * aip - s * aiq;
                    a(i, q) = s * aip + c * aiq;
                }
                for (std::int64_t i = 0; i < n; ++i) {
                    double api = a(p, i), aqi = a(q, i);
                    a(p, i) = c * api - s * aqi;
                    a(q, i) = s * api + c * aqi;
                }
                for (std::int64_t i = 0; i < n; ++i) {
                    double vip = v(i, p), viq = v(i, q);
                    v(i, p) = c * vip - s * viq;
                    v(i, q) = s * vip + c * viq;
                }
            }
        }
    }
    std::int64_t best = 0;
    for (std::int64_t i = 1; i < n; ++i)
        if (a(i, i) > a(best, best)) best = i;
    std::vector<double> out(n);
    for (std::int64_t i = 0; i < n; ++i) out[i] = v(i, best);
    return out;
}

// random labeled heterogeneous graph: target type plus one auxiliary type,
// one composed metapath (via the auxiliary type) and one direct relation
inline HeteroGraph random_hetero_graph(std::int64_t n_target, Rng& rng) {
    HeteroGraph g;
    std::int64_t n_aux = 2 + static_cast<std::int64_t>(rng.next_below(n_target));
    g.node_types.emplace_back("t", n_target);
    g.node_types.emplace_back("a", n_aux);
    g.target_type = "t";

    hetrolat::Relation ta;
    ta.name = "ta";
    ta.src_type = "t";
    ta.dst_type = "a";
    for (std::int64_t i = 0; i < n_target; ++i)
        for (std::int64_t j = 0; j < n_aux; ++j)
            if (rng.next_double() < 0.25) ta.pairs.emplace_back(i, j);

    hetrolat::Relation tt;
    tt.name = "tt";
    tt.src_type = "t";
    tt.dst_type = "t";
    for (std::int64_t i = 0; i < n_target; ++i)
        for (std::int64_t j = i + 1; j < n_target; ++j)
            if (rng.next_double() < 0.2) tt.pairs.emplace_back(i, j);

    g.relations.push_back(std::move(ta));
    g.relations.push_back(std::move(tt));
    g.metapaths.push_back({"TAT", {"ta", "~ta"}});
    g.metapaths.push_back({"TT", {"tt"}});

    g.features = Matrix(n_target, 4);
    for (double& v : g.features.data) v = rng.next_double();
    g.labels.resize(n_target);
    for (auto& y : g.labels) y = static_cast<std::int64_t>(rng.next_below(3));
    return g;
}

} // namespace oracle
