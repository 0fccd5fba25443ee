#include "hetrolat/filters.hpp"

#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "hetrolat/manifest.hpp"

namespace hetrolat {

namespace fs = std::filesystem;

Matrix low_pass(const SparseAdjacency& a, const Matrix& h, int r) {
    if (r < 0) throw std::invalid_argument("low_pass: r must be >= 0");
    if (r == 0) return h;
    SparseAdjacency filt = renormalized_adjacency(a);
    Matrix out = h;
    for (int i = 0; i < r; ++i) out = spmm(filt, out);
    return out;
}

Matrix high_pass(const SparseAdjacency& a, const Matrix& h, int r) {
    if (r < 0) throw std::invalid_argument("high_pass: r must be >= 0");
    if (r == 0) return h;
    SparseAdjacency filt = renormalized_laplacian(a);
    Matrix out = h;
    for (int i = 0; i < r; ++i) out = spmm(filt, out);
    return out;
}

FilteredFeatures prefilter_features(const HeteroGraph& g, int r) {
    FilteredFeatures out;
    out.r = r;
    for (const auto& mp : g.metapaths) {
        const SparseAdjacency& a = g.metapath_adjacency_cached(mp);
        out.metapath_names.push_back(mp.name);
        out.low.push_back(low_pass(a, g.features, r));
        out.high.push_back(high_pass(a, g.features, r));
    }
    return out;
}

void write_matrix_f64(const Matrix& m, const fs::path& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    auto put_u32 = [&](std::uint32_t v) { f.write(reinterpret_cast<const char*>(&v), 4); };
    put_u32(static_cast<std::uint32_t>(m.rows));
    put_u32(static_cast<std::uint32_t>(m.cols));
    f.write(reinterpret_cast<const char*>(m.data.data()),
            static_cast<std::streamsize>(m.data.size() * sizeof(double)));
}

Matrix read_matrix_f64(const fs::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot read " + path.string());
    std::uint32_t rows = 0, cols = 0;
    f.read(reinterpret_cast<char*>(&rows), 4);
    f.read(reinterpret_cast<char*>(&cols), 4);
    Matrix m(rows, cols);
    f.read(reinterpret_cast<char*>(m.data.data()),
           static_cast<std::streamsize>(m.data.size() * sizeof(double)));
    if (!f) throw std::runtime_error("truncated matrix file: " + path.string());
    return m;
}

void save_filtered(const FilteredFeatures& f, const fs::path& dir) {
    fs::create_directories(dir);
    nlohmann::json manifest;
    manifest["r"] = f.r;
    manifest["checksum"] = hash_hex(f.checksum);
    manifest["metapaths"] = nlohmann::json::array();
    for (std::size_t p = 0; p < f.metapath_names.size(); ++p) {
        const std::string& name = f.metapath_names[p];
        write_matrix_f64(f.low[p], dir / ("X_" + name + "_low.f64"));
        write_matrix_f64(f.high[p], dir / ("X_" + name + "_high.f64"));
        manifest["metapaths"].push_back(
            {{"name", name}, {"rows", f.low[p].rows}, {"cols", f.low[p].cols}});
    }
    std::ofstream mf(dir / "manifest.json");
    mf << manifest.dump(2) << '\n';
}

FilteredFeatures load_filtered(const fs::path& dir) {
    std::ifstream mf(dir / "manifest.json");
    if (!mf) throw std::runtime_error("missing filtered manifest: " + (dir / "manifest.json").string());
    nlohmann::json manifest = nlohmann::json::parse(mf);
    FilteredFeatures f;
    f.r = manifest.at("r").get<int>();
    f.checksum = std::stoull(manifest.at("checksum").get<std::string>(), nullptr, 16);
    for (const auto& entry : manifest.at("metapaths")) {
        std::string name = entry.at("name").get<std::string>();
        f.metapath_names.push_back(name);
        f.low.push_back(read_matrix_f64(dir / ("X_" + name + "_low.f64")));
        f.high.push_back(read_matrix_f64(dir / ("X_" + name + "_high.f64")));
        if (f.low.back().rows != entry.at("rows").get<std::int64_t>() ||
            f.low.back().cols != entry.at("cols").get<std::int64_t>())
            throw std::runtime_error("filtered cache shape mismatch for " + name);
    }
    return f;
}

FilteredFeatures ensure_filtered(const HeteroGraph& g, int r, const fs::path& dir,
                                 std::uint64_t dataset_checksum) {
    std::uint64_t want = fnv1a(&r, sizeof r, dataset_checksum);
    if (fs::exists(dir / "manifest.json")) {
        try {
            FilteredFeatures f = load_filtered(dir);
            if (f.checksum == want && f.r == r) return f;
        } catch (const std::exception&) {
            // fall through to recompute
        }
    }
    FilteredFeatures f = prefilter_features(g, r);
    f.checksum = want;
    save_filtered(f, dir);
    return f;
}

} // namespace hetrolat
