#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "hetrolat/graph.hpp"
#include "hetrolat/sparse.hpp"

namespace hetrolat {

/// r applications of the renormalized adjacency (smoothing). r = 0 is identity.
Matrix low_pass(const SparseAdjacency& a, const Matrix& h, int r);

/// r applications of the renormalized Laplacian (sharpening). r = 0 is identity.
Matrix high_pass(const SparseAdjacency& a, const Matrix& h, int r);

/// Smoothed and sharpened copies of the raw features, one pair per metapath.
/// Computed once before mini-batch training so batches need no aggregation.
struct FilteredFeatures {
    int r = 0;
    std::vector<std::string> metapath_names;
    std::vector<Matrix> low;   // per metapath
    std::vector<Matrix> high;  // per metapath
    std::uint64_t checksum = 0;  // of (dataset, r)
};

FilteredFeatures prefilter_features(const HeteroGraph& g, int r);

/// Disk cache: X_<metapath>_{low,high}.f64 plus manifest.json carrying shapes,
/// r and the (dataset, r) checksum.
void save_filtered(const FilteredFeatures& f, const std::filesystem::path& dir);
FilteredFeatures load_filtered(const std::filesystem::path& dir);

/// Load the cache when present and checksum-fresh, otherwise recompute and
/// rewrite it.
FilteredFeatures ensure_filtered(const HeteroGraph& g, int r,
                                 const std::filesystem::path& dir,
                                 std::uint64_t dataset_checksum);

/// Raw f64 matrix files: rows u32, cols u32, then row-major little-endian f64.
void write_matrix_f64(const Matrix& m, const std::filesystem::path& path);
Matrix read_matrix_f64(const std::filesystem::path& path);

} // namespace hetrolat
