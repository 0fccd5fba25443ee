#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "hetrolat/graph.hpp"
#include "hetrolat/rng.hpp"
#include "oracles.hpp"

using namespace hetrolat;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) {
        path = fs::temp_directory_path() / ("hetrolat_test_" + name);
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

void write_file(const fs::path& p, const std::string& text) {
    std::ofstream f(p);
    f << text;
}

void write_minimal(const fs::path& dir) {
    write_file(dir / "node_types.tsv", "t\t2\n");
    write_file(dir / "features.tsv", "1.0\n0.5\n");
}

} // namespace

TEST_CASE("load_graph handles a degenerate dataset") {
    TempDir tmp("minimal");
    write_minimal(tmp.path);
    HeteroGraph g = load_graph(tmp.path);
    CHECK(g.num_targets() == 2);
    CHECK(g.features.cols == 1);
    CHECK_FALSE(g.has_labels());
    CHECK(g.target_type == "t");
}

TEST_CASE("load_graph rejects malformed datasets") {
    SUBCASE("missing features") {
        TempDir tmp("nofeat");
        write_file(tmp.path / "node_types.tsv", "t\t2\n");
        CHECK_THROWS_WITH_AS(load_graph(tmp.path), doctest::Contains("missing file"),
                             std::runtime_error);
    }
    SUBCASE("edge index out of range") {
        TempDir tmp("badindex");
        write_file(tmp.path / "node_types.tsv", "t\t4\n");
        write_file(tmp.path / "edges_tt.tsv", "# t\tt\n0\t5\n");
        write_file(tmp.path / "features.tsv", "1\n1\n1\n1\n");
        CHECK_THROWS_WITH_AS(load_graph(tmp.path), doctest::Contains("index out of range"),
                             std::runtime_error);
    }
    SUBCASE("negative feature entry") {
        TempDir tmp("negfeat");
        write_file(tmp.path / "node_types.tsv", "t\t1\n");
        write_file(tmp.path / "features.tsv", "-0.5\n");
        CHECK_THROWS_WITH_AS(load_graph(tmp.path), doctest::Contains("negative"),
                             std::runtime_error);
    }
    SUBCASE("negative label") {
        TempDir tmp("badlabel");
        write_minimal(tmp.path);
        write_file(tmp.path / "labels.tsv", "0\n-1\n");
        CHECK_THROWS_WITH_AS(load_graph(tmp.path), doctest::Contains("label out of range"),
                             std::runtime_error);
    }
    SUBCASE("metapath with unknown edge type") {
        TempDir tmp("badmp");
        write_minimal(tmp.path);
        write_file(tmp.path / "metapaths.txt", "XY: nosuch\n");
        CHECK_THROWS_WITH_AS(load_graph(tmp.path), doctest::Contains("unknown edge type"),
                             std::invalid_argument);
    }
    SUBCASE("metapath chain with mismatched types") {
        TempDir tmp("mismatch");
        write_file(tmp.path / "node_types.tsv", "t\t2\na\t2\nb\t2\n");
        write_file(tmp.path / "edges_ta.tsv", "# t\ta\n0\t0\n");
        write_file(tmp.path / "edges_bt.tsv", "# b\tt\n0\t0\n");
        write_file(tmp.path / "features.tsv", "1\n1\n");
        write_file(tmp.path / "metapaths.txt", "TBT: ta,bt\n");
        CHECK_THROWS(load_graph(tmp.path));
    }
}

TEST_CASE("metapath adjacency composes shared-neighbor relations") {
    // papers 0 and 1 share author 0; paper 2 is alone
    HeteroGraph g;
    g.node_types = {{"p", 3}, {"a", 2}};
    g.target_type = "p";
    Relation pa;
    pa.name = "pa";
    pa.src_type = "p";
    pa.dst_type = "a";
    pa.pairs = {{0, 0}, {1, 0}, {2, 1}};
    g.relations.push_back(pa);
    g.metapaths.push_back({"PAP", {"pa", "~pa"}});
    g.features = Matrix(3, 1, 1.0);

    SparseAdjacency adj = metapath_adjacency(g, g.metapaths[0]);
    CHECK(adj.value_at(0, 1) == 1.0);
    CHECK(adj.value_at(1, 0) == 1.0);
    CHECK(adj.value_at(0, 2) == 0.0);
    CHECK(adj.value_at(0, 0) == 0.0);  // self-loops removed
    CHECK(adj.symmetric);
}

TEST_CASE("metapath over an empty relation is an all-zero matrix") {
    HeteroGraph g;
    g.node_types = {{"p", 3}, {"a", 1}};
    g.target_type = "p";
    Relation pa;
    pa.name = "pa";
    pa.src_type = "p";
    pa.dst_type = "a";
    g.relations.push_back(pa);
    g.metapaths.push_back({"PAP", {"pa", "~pa"}});
    g.features = Matrix(3, 1, 1.0);
    CHECK(metapath_adjacency(g, g.metapaths[0]).nnz() == 0);
}

TEST_CASE("metapath adjacency equals brute-force path enumeration") {
    Rng rng(23);
    for (int trial = 0; trial < 15; ++trial) {
        std::int64_t n = 3 + static_cast<std::int64_t>(rng.next_below(47));
        HeteroGraph g = oracle::random_hetero_graph(n, rng);
        for (const auto& mp : g.metapaths) {
            SparseAdjacency got = metapath_adjacency(g, mp);
            Matrix want = oracle::metapath_dense(g, mp);
            for (std::int64_t i = 0; i < n; ++i)
                for (std::int64_t j = 0; j < n; ++j)
                    CHECK(got.value_at(i, j) == want(i, j));
        }
    }
}

TEST_CASE("graph save/load round trip preserves structure") {
    Rng rng(29);
    HeteroGraph g = oracle::random_hetero_graph(12, rng);
    TempDir tmp("roundtrip");
    save_graph(g, tmp.path);
    HeteroGraph h = load_graph(tmp.path);
    CHECK(h.num_targets() == g.num_targets());
    CHECK(h.labels == g.labels);
    CHECK(h.metapaths.size() == g.metapaths.size());
    for (std::size_t p = 0; p < g.metapaths.size(); ++p) {
        SparseAdjacency a = metapath_adjacency(g, g.metapaths[p]);
        SparseAdjacency b = metapath_adjacency(h, h.metapaths[p]);
        CHECK(a.columns == b.columns);
        CHECK(a.offsets == b.offsets);
    }
}
