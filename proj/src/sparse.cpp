#include "hetrolat/sparse.hpp"

#include <algorithm>
#include <stdexcept>
#include <tuple>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace hetrolat {

double SparseAdjacency::value_at(std::int64_t i, std::int64_t j) const {
    auto cols = row_columns(i);
    auto it = std::lower_bound(cols.begin(), cols.end(), j);
    if (it == cols.end() || *it != j) return 0.0;
    return values[offsets[i] + (it - cols.begin())];
}

SparseAdjacency SparseAdjacency::identity(std::int64_t n) {
    SparseAdjacency out;
    out.n = n;
    out.offsets.resize(n + 1);
    out.columns.resize(n);
    out.values.assign(n, 1.0);
    for (std::int64_t i = 0; i <= n; ++i) out.offsets[i] = i;
    for (std::int64_t i = 0; i < n; ++i) out.columns[i] = i;
    out.symmetric = true;
    return out;
}

SparseAdjacency make_csr(std::int64_t n,
                         std::vector<std::tuple<std::int64_t, std::int64_t, double>> triplets,
                         bool verify_symmetric) {
    for (auto& [i, j, v] : triplets) {
        if (i < 0 || i >= n || j < 0 || j >= n)
            throw std::out_of_range("make_csr: index out of range");
        (void)v;
    }
    std::sort(triplets.begin(), triplets.end(),
              [](const auto& a, const auto& b) {
                  return std::tie(std::get<0>(a), std::get<1>(a)) <
                         std::tie(std::get<0>(b), std::get<1>(b));
              });
    SparseAdjacency out;
    out.n = n;
    out.offsets.assign(n + 1, 0);
    for (std::size_t k = 0; k < triplets.size();) {
        auto [i, j, v] = triplets[k];
        double sum = v;
        std::size_t k2 = k + 1;
        while (k2 < triplets.size() && std::get<0>(triplets[k2]) == i &&
               std::get<1>(triplets[k2]) == j) {
            sum += std::get<2>(triplets[k2]);
            ++k2;
        }
        if (sum != 0.0) {
            out.columns.push_back(j);
            out.values.push_back(sum);
            ++out.offsets[i + 1];
        }
        k = k2;
    }
    for (std::int64_t i = 0; i < n; ++i) out.offsets[i + 1] += out.offsets[i];
    if (verify_symmetric) {
        if (!is_symmetric(out)) throw std::invalid_argument("make_csr: matrix is not symmetric");
        out.symmetric = true;
    }
    return out;
}

SparseAdjacency transpose(const SparseAdjacency& a) {
    SparseAdjacency out;
    out.n = a.n;
    out.offsets.assign(a.n + 1, 0);
    out.columns.resize(a.columns.size());
    out.values.resize(a.values.size());
    for (std::int64_t j : a.columns) ++out.offsets[j + 1];
    for (std::int64_t i = 0; i < a.n; ++i) out.offsets[i + 1] += out.offsets[i];
    std::vector<std::int64_t> cursor(out.offsets.begin(), out.offsets.end() - 1);
    for (std::int64_t i = 0; i < a.n; ++i) {
        for (std::int64_t k = a.offsets[i]; k < a.offsets[i + 1]; ++k) {
            std::int64_t pos = cursor[a.columns[k]]++;
            out.columns[pos] = i;
            out.values[pos] = a.values[k];
        }
    }
    out.symmetric = a.symmetric;
    return out;
}

bool is_symmetric(const SparseAdjacency& a) {
    SparseAdjacency t = transpose(a);
    return t.offsets == a.offsets && t.columns == a.columns && t.values == a.values;
}

SparseAdjacency symmetrize_union(const SparseAdjacency& a) {
    std::vector<std::tuple<std::int64_t, std::int64_t, double>> trip;
    trip.reserve(2 * a.columns.size());
    for (std::int64_t i = 0; i < a.n; ++i) {
        for (std::int64_t k = a.offsets[i]; k < a.offsets[i + 1]; ++k) {
            trip.emplace_back(i, a.columns[k], 1.0);
            trip.emplace_back(a.columns[k], i, 1.0);
        }
    }
    // duplicate support collapses to a single 1-valued entry
    std::sort(trip.begin(), trip.end());
    trip.erase(std::unique(trip.begin(), trip.end()), trip.end());
    SparseAdjacency out = make_csr(a.n, std::move(trip));
    out.symmetric = true;
    return out;
}

SparseAdjacency drop_diagonal(const SparseAdjacency& a) {
    SparseAdjacency out;
    out.n = a.n;
    out.offsets.assign(a.n + 1, 0);
    for (std::int64_t i = 0; i < a.n; ++i) {
        for (std::int64_t k = a.offsets[i]; k < a.offsets[i + 1]; ++k) {
            if (a.columns[k] == i) continue;
            out.columns.push_back(a.columns[k]);
            out.values.push_back(a.values[k]);
            ++out.offsets[i + 1];
        }
    }
    for (std::int64_t i = 0; i < a.n; ++i) out.offsets[i + 1] += out.offsets[i];
    out.symmetric = a.symmetric;
    return out;
}

SparseAdjacency add(const SparseAdjacency& a, const SparseAdjacency& b) {
    if (a.n != b.n) throw std::invalid_argument("add: size mismatch");
    SparseAdjacency out;
    out.n = a.n;
    out.offsets.assign(a.n + 1, 0);
    for (std::int64_t i = 0; i < a.n; ++i) {
        std::int64_t ka = a.offsets[i], kb = b.offsets[i];
        while (ka < a.offsets[i + 1] || kb < b.offsets[i + 1]) {
            std::int64_t ca = ka < a.offsets[i + 1] ? a.columns[ka] : a.n;
            std::int64_t cb = kb < b.offsets[i + 1] ? b.columns[kb] : a.n;
            std::int64_t c = std::min(ca, cb);
            double v = 0.0;
            if (ca == c) v += a.values[ka++];
            if (cb == c) v += b.values[kb++];
            if (v != 0.0) {
                out.columns.push_back(c);
                out.values.push_back(v);
                ++out.offsets[i + 1];
            }
        }
    }
    for (std::int64_t i = 0; i < a.n; ++i) out.offsets[i + 1] += out.offsets[i];
    return out;
}

SparseAdjacency scale(const SparseAdjacency& a, double s) {
    SparseAdjacency out = a;
    for (double& v : out.values) v *= s;
    return out;
}

namespace {

std::vector<double> loop_augmented_degrees(const SparseAdjacency& a) {
    std::vector<double> deg(a.n, 1.0);  // the added self-loop
    for (std::int64_t i = 0; i < a.n; ++i)
        for (std::int64_t k = a.offsets[i]; k < a.offsets[i + 1]; ++k) deg[i] += a.values[k];
    return deg;
}

void require_zero_diagonal(const SparseAdjacency& a, const char* op) {
    for (std::int64_t i = 0; i < a.n; ++i)
        for (std::int64_t k = a.offsets[i]; k < a.offsets[i + 1]; ++k)
            if (a.columns[k] == i)
                throw std::invalid_argument(std::string(op) + ": input must have zero diagonal");
}

} // namespace

SparseAdjacency renormalized_adjacency(const SparseAdjacency& a) {
    require_zero_diagonal(a, "renormalized_adjacency");
    std::vector<double> deg = loop_augmented_degrees(a);
    SparseAdjacency out;
    out.n = a.n;
    out.offsets.assign(a.n + 1, 0);
    for (std::int64_t i = 0; i < a.n; ++i) {
        std::int64_t k = a.offsets[i];
        bool placed_diag = false;
        auto push = [&](std::int64_t j, double v) {
            out.columns.push_back(j);
            out.values.push_back(v);
            ++out.offsets[i + 1];
        };
        while (k < a.offsets[i + 1]) {
            std::int64_t j = a.columns[k];
            if (!placed_diag && j > i) {
                push(i, 1.0 / deg[i]);
                placed_diag = true;
            }
            push(j, a.values[k] / std::sqrt(deg[i] * deg[j]));
            ++k;
        }
        if (!placed_diag) push(i, 1.0 / deg[i]);
    }
    for (std::int64_t i = 0; i < a.n; ++i) out.offsets[i + 1] += out.offsets[i];
    out.symmetric = true;
    return out;
}

SparseAdjacency renormalized_laplacian(const SparseAdjacency& a) {
    SparseAdjacency adj = renormalized_adjacency(a);
    SparseAdjacency out;
    out.n = adj.n;
    out.offsets.assign(adj.n + 1, 0);
    for (std::int64_t i = 0; i < adj.n; ++i) {
        for (std::int64_t k = adj.offsets[i]; k < adj.offsets[i + 1]; ++k) {
            std::int64_t j = adj.columns[k];
            double v = (j == i) ? 1.0 - adj.values[k] : -adj.values[k];
            if (v == 0.0) continue;  // isolated-node diagonal vanishes exactly
            out.columns.push_back(j);
            out.values.push_back(v);
            ++out.offsets[i + 1];
        }
    }
    for (std::int64_t i = 0; i < adj.n; ++i) out.offsets[i + 1] += out.offsets[i];
    out.symmetric = true;
    return out;
}

SparseAdjacency random_walk_normalized(const SparseAdjacency& a) {
    require_zero_diagonal(a, "random_walk_normalized");
    std::vector<double> deg = loop_augmented_degrees(a);
    SparseAdjacency out;
    out.n = a.n;
    out.offsets.assign(a.n + 1, 0);
    for (std::int64_t i = 0; i < a.n; ++i) {
        std::int64_t k = a.offsets[i];
        bool placed_diag = false;
        auto push = [&](std::int64_t j, double v) {
            out.columns.push_back(j);
            out.values.push_back(v);
            ++out.offsets[i + 1];
        };
        while (k < a.offsets[i + 1]) {
            std::int64_t j = a.columns[k];
            if (!placed_diag && j > i) {
                push(i, 1.0 / deg[i]);
                placed_diag = true;
            }
            push(j, a.values[k] / deg[i]);
            ++k;
        }
        if (!placed_diag) push(i, 1.0 / deg[i]);
    }
    for (std::int64_t i = 0; i < a.n; ++i) out.offsets[i + 1] += out.offsets[i];
    return out;
}

Matrix spmm(const SparseAdjacency& a, const Matrix& h) {
    if (a.n != h.rows) throw std::invalid_argument("spmm: dimension mismatch");
    Matrix out(a.n, h.cols);
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < a.n; ++i) {
        double* dst = out.data.data() + static_cast<std::size_t>(i) * h.cols;
        for (std::int64_t k = a.offsets[i]; k < a.offsets[i + 1]; ++k) {
            double v = a.values[k];
            const double* src = h.data.data() + static_cast<std::size_t>(a.columns[k]) * h.cols;
            for (std::int64_t c = 0; c < h.cols; ++c) dst[c] += v * src[c];
        }
    }
    return out;
}

Matrix spmm_serial(const SparseAdjacency& a, const Matrix& h) {
    if (a.n != h.rows) throw std::invalid_argument("spmm: dimension mismatch");
    Matrix out(a.n, h.cols);
    for (std::int64_t i = 0; i < a.n; ++i) {
        for (std::int64_t k = a.offsets[i]; k < a.offsets[i + 1]; ++k) {
            double v = a.values[k];
            for (std::int64_t c = 0; c < h.cols; ++c)
                out(i, c) += v * h(a.columns[k], c);
        }
    }
    return out;
}

SparseRelation SparseRelation::from_pairs(
    std::int64_t rows, std::int64_t cols,
    const std::vector<std::pair<std::int64_t, std::int64_t>>& pairs) {
    for (auto [s, d] : pairs)
        if (s < 0 || s >= rows || d < 0 || d >= cols)
            throw std::out_of_range("relation: index out of range");
    std::vector<std::pair<std::int64_t, std::int64_t>> sorted = pairs;
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    SparseRelation out;
    out.rows = rows;
    out.cols = cols;
    out.offsets.assign(rows + 1, 0);
    out.columns.reserve(sorted.size());
    for (auto [s, d] : sorted) {
        out.columns.push_back(d);
        ++out.offsets[s + 1];
    }
    for (std::int64_t i = 0; i < rows; ++i) out.offsets[i + 1] += out.offsets[i];
    return out;
}

SparseRelation SparseRelation::transposed() const {
    SparseRelation out;
    out.rows = cols;
    out.cols = rows;
    out.offsets.assign(cols + 1, 0);
    out.columns.resize(columns.size());
    for (std::int64_t j : columns) ++out.offsets[j + 1];
    for (std::int64_t i = 0; i < cols; ++i) out.offsets[i + 1] += out.offsets[i];
    std::vector<std::int64_t> cursor(out.offsets.begin(), out.offsets.end() - 1);
    for (std::int64_t i = 0; i < rows; ++i)
        for (std::int64_t k = offsets[i]; k < offsets[i + 1]; ++k)
            out.columns[cursor[columns[k]]++] = i;
    return out;
}

SparseRelation boolean_product(const SparseRelation& a, const SparseRelation& b) {
    if (a.cols != b.rows) throw std::invalid_argument("boolean_product: inner dimension mismatch");
    SparseRelation out;
    out.rows = a.rows;
    out.cols = b.cols;
    out.offsets.assign(a.rows + 1, 0);

    std::vector<std::vector<std::int64_t>> row_results(a.rows);
#pragma omp parallel
    {
        std::vector<char> mark(b.cols, 0);
        std::vector<std::int64_t> touched;
#pragma omp for schedule(dynamic, 64)
        for (std::int64_t i = 0; i < a.rows; ++i) {
            touched.clear();
            for (std::int64_t ka = a.offsets[i]; ka < a.offsets[i + 1]; ++ka) {
                std::int64_t mid = a.columns[ka];
                for (std::int64_t kb = b.offsets[mid]; kb < b.offsets[mid + 1]; ++kb) {
                    std::int64_t j = b.columns[kb];
                    if (!mark[j]) {
                        mark[j] = 1;
                        touched.push_back(j);
                    }
                }
            }
            std::sort(touched.begin(), touched.end());
            row_results[i] = touched;
            for (std::int64_t j : touched) mark[j] = 0;
        }
    }
    for (std::int64_t i = 0; i < a.rows; ++i)
        out.offsets[i + 1] = out.offsets[i] + static_cast<std::int64_t>(row_results[i].size());
    out.columns.reserve(out.offsets[a.rows]);
    for (auto& r : row_results) out.columns.insert(out.columns.end(), r.begin(), r.end());
    return out;
}

} // namespace hetrolat
