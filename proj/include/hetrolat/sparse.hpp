#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hetrolat/dense.hpp"

namespace hetrolat {

/// Square sparse matrix over target nodes, CSR with sorted columns and no
/// explicit zeros. This is the single canonical sparse format; every graph
/// operator produces and consumes it.
struct SparseAdjacency {
    std::int64_t n = 0;
    std::vector<std::int64_t> offsets;  // size n+1, monotone
    std::vector<std::int64_t> columns;  // strictly increasing per row
    std::vector<double> values;         // parallel to columns
    bool symmetric = false;             // set only after verification

    std::int64_t nnz() const { return static_cast<std::int64_t>(columns.size()); }

    std::span<const std::int64_t> row_columns(std::int64_t i) const {
        return {columns.data() + offsets[i],
                static_cast<std::size_t>(offsets[i + 1] - offsets[i])};
    }
    std::span<const double> row_values(std::int64_t i) const {
        return {values.data() + offsets[i],
                static_cast<std::size_t>(offsets[i + 1] - offsets[i])};
    }
    std::int64_t degree(std::int64_t i) const { return offsets[i + 1] - offsets[i]; }

    double value_at(std::int64_t i, std::int64_t j) const;

    /// Identity of size n.
    static SparseAdjacency identity(std::int64_t n);
};

/// Build CSR from (row, col, value) triplets. Duplicates are summed, exact
/// zeros dropped, columns sorted. `verify_symmetric` runs the value-exact
/// transpose check and sets the flag.
SparseAdjacency make_csr(std::int64_t n,
                         std::vector<std::tuple<std::int64_t, std::int64_t, double>> triplets,
                         bool verify_symmetric = false);

SparseAdjacency transpose(const SparseAdjacency& a);

/// Value-exact A == A^T.
bool is_symmetric(const SparseAdjacency& a);

/// Entry-wise union of the supports of a and a^T, all values set to 1.
SparseAdjacency symmetrize_union(const SparseAdjacency& a);

/// Drop diagonal entries.
SparseAdjacency drop_diagonal(const SparseAdjacency& a);

/// (A + B) entrywise; shapes must match.
SparseAdjacency add(const SparseAdjacency& a, const SparseAdjacency& b);

/// Scale all values by s.
SparseAdjacency scale(const SparseAdjacency& a, double s);

/// Self-loop-renormalized adjacency: with degree(i) the value row sum of the
/// input and each node given one extra self unit, entry (i,j) of the result
/// is (A_ij + [i==j]) / sqrt((d_i+1)(d_j+1)). Requires symmetric input with
/// zero diagonal. Low-pass filter carrier.
SparseAdjacency renormalized_adjacency(const SparseAdjacency& a);

/// I minus renormalized_adjacency(a). High-pass filter carrier. Exact zeros
/// (isolated-node diagonal) are pruned.
SparseAdjacency renormalized_laplacian(const SparseAdjacency& a);

/// Row-stochastic self-loop walk matrix: entry (i,j) = (A_ij + [i==j]) / (d_i+1).
SparseAdjacency random_walk_normalized(const SparseAdjacency& a);

/// Sparse-dense product A * H. Parallel across rows; per-row accumulation
/// runs in ascending column order, so output is bitwise identical for any
/// thread count.
Matrix spmm(const SparseAdjacency& a, const Matrix& h);

/// Plain serial reference for spmm, kept for tests and benchmarks.
Matrix spmm_serial(const SparseAdjacency& a, const Matrix& h);

/// Boolean sparse product: support of A*B with all values 1. Operands need
/// not be square; `a` is rows_a x inner, `b` is inner x cols_b.
struct SparseRelation {
    std::int64_t rows = 0;
    std::int64_t cols = 0;
    std::vector<std::int64_t> offsets;
    std::vector<std::int64_t> columns;

    static SparseRelation from_pairs(std::int64_t rows, std::int64_t cols,
                                     const std::vector<std::pair<std::int64_t, std::int64_t>>& pairs);
    SparseRelation transposed() const;
};

SparseRelation boolean_product(const SparseRelation& a, const SparseRelation& b);

} // namespace hetrolat
