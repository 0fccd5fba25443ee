#include "hetrolat/latent.hpp"

#include <algorithm>
#include <fstream>
#include <stdexcept>

#include "hetrolat/rng.hpp"

namespace hetrolat {

SparseAdjacency diffusion_matrix(const std::vector<SparseAdjacency>& subgraphs) {
    if (subgraphs.empty()) throw std::invalid_argument("diffusion_matrix: empty subgraph list");
    const std::int64_t n = subgraphs.front().n;
    for (const auto& a : subgraphs)
        if (a.n != n) throw std::invalid_argument("diffusion_matrix: size mismatch");
    SparseAdjacency sum = random_walk_normalized(subgraphs.front());
    for (std::size_t p = 1; p < subgraphs.size(); ++p)
        sum = add(sum, random_walk_normalized(subgraphs[p]));
    return scale(sum, 1.0 / static_cast<double>(subgraphs.size()));
}

namespace {

double clamp01(double v) { return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v); }

// dot of two sorted sparse rows
double sparse_row_dot(const SparseAdjacency& m, std::int64_t i, std::int64_t j) {
    std::int64_t ka = m.offsets[i], kb = m.offsets[j];
    double s = 0.0;
    while (ka < m.offsets[i + 1] && kb < m.offsets[j + 1]) {
        std::int64_t ca = m.columns[ka], cb = m.columns[kb];
        if (ca == cb) {
            s += m.values[ka++] * m.values[kb++];
        } else if (ca < cb) {
            ++ka;
        } else {
            ++kb;
        }
    }
    return s;
}

std::vector<double> sparse_row_norms(const SparseAdjacency& m) {
    std::vector<double> out(m.n, 0.0);
    for (std::int64_t i = 0; i < m.n; ++i) {
        double s = 0.0;
        for (std::int64_t k = m.offsets[i]; k < m.offsets[i + 1]; ++k) s += m.values[k] * m.values[k];
        out[i] = std::sqrt(s);
    }
    return out;
}

std::vector<double> dense_row_norms(const Matrix& x) {
    std::vector<double> out(x.rows, 0.0);
    for (std::int64_t i = 0; i < x.rows; ++i) out[i] = norm2(x.row(i));
    return out;
}

struct PairScorer {
    const SparseAdjacency& diffusion;
    const Matrix& features;
    std::vector<double> diff_norms;
    std::vector<double> feat_norms;

    PairScorer(const SparseAdjacency& m, const Matrix& x)
        : diffusion(m), features(x), diff_norms(sparse_row_norms(m)), feat_norms(dense_row_norms(x)) {}

    CoupledSimilarity operator()(std::int64_t i, std::int64_t j) const {
        CoupledSimilarity s;
        // diffusion rows always carry self-loop mass, so norms are positive
        s.structure = clamp01(sparse_row_dot(diffusion, i, j) / (diff_norms[i] * diff_norms[j]));
        if (feat_norms[i] > 0.0 && feat_norms[j] > 0.0)
            s.feature = clamp01(dot(features.row(i), features.row(j)) / (feat_norms[i] * feat_norms[j]));
        s.combined = s.structure * s.feature;
        return s;
    }
};

// top-k node ids by (score desc, index asc); candidates arrive as (score, id)
std::vector<std::int64_t> top_k(std::vector<std::pair<double, std::int64_t>>& scored,
                                std::int64_t k) {
    auto better = [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    };
    std::int64_t kk = std::min<std::int64_t>(k, static_cast<std::int64_t>(scored.size()));
    std::partial_sort(scored.begin(), scored.begin() + kk, scored.end(), better);
    std::vector<std::int64_t> out;
    out.reserve(kk);
    for (std::int64_t t = 0; t < kk; ++t) out.push_back(scored[t].second);
    return out;
}

SparseAdjacency lists_to_union_graph(std::int64_t n,
                                     const std::vector<std::vector<std::int64_t>>& lists) {
    std::vector<std::tuple<std::int64_t, std::int64_t, double>> trip;
    for (std::int64_t i = 0; i < n; ++i) {
        for (std::int64_t j : lists[i]) {
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

double directed_list_hr(const std::vector<std::vector<std::int64_t>>& lists,
                        const std::vector<std::int64_t>& labels) {
    std::int64_t total = 0, same = 0;
    for (std::size_t i = 0; i < lists.size(); ++i) {
        for (std::int64_t j : lists[i]) {
            ++total;
            if (labels[i] == labels[static_cast<std::size_t>(j)]) ++same;
        }
    }
    if (total == 0) return 0.0;
    return static_cast<double>(same) / static_cast<double>(total);
}

} // namespace

CoupledSimilarity coupled_similarity(const SparseAdjacency& diffusion, const Matrix& features,
                                     std::int64_t i, std::int64_t j) {
    PairScorer scorer(diffusion, features);
    return scorer(i, j);
}

LatentGraphPair build_latent_graphs_full(const SparseAdjacency& diffusion, const Matrix& features,
                                         std::int64_t k, std::int64_t k_pos,
                                         std::int64_t dense_cap) {
    const std::int64_t n = diffusion.n;
    if (features.rows != n) throw std::invalid_argument("build_latent_graphs_full: shape mismatch");
    if (n > dense_cap)
        throw std::runtime_error(
            "build_latent_graphs_full: graph exceeds the dense cap (" + std::to_string(n) + " > " +
            std::to_string(dense_cap) + " nodes); use the scalable builder");
    if (k >= n) throw std::invalid_argument("build_latent_graphs_full: K must be < N");

    PairScorer scorer(diffusion, features);
    LatentGraphPair pair;
    pair.k = k;
    pair.k_pos = k_pos;
    pair.homophilic_lists.resize(n);
    pair.heterophilic_lists.resize(n);
    pair.positives.resize(n);

#pragma omp parallel
    {
        std::vector<std::pair<double, std::int64_t>> sim_scored, dis_scored;
#pragma omp for schedule(dynamic, 16)
        for (std::int64_t i = 0; i < n; ++i) {
            sim_scored.clear();
            dis_scored.clear();
            sim_scored.reserve(n - 1);
            dis_scored.reserve(n - 1);
            for (std::int64_t j = 0; j < n; ++j) {
                if (j == i) continue;  // self removed from both graphs
                CoupledSimilarity s = scorer(i, j);
                sim_scored.emplace_back(s.combined, j);
                dis_scored.emplace_back((1.0 - s.structure) * (1.0 - s.feature), j);
            }
            pair.homophilic_lists[i] = top_k(sim_scored, k);
            // sim_scored is already partially sorted by top_k; positives are
            // its first k_pos entries
            pair.positives[i].assign(pair.homophilic_lists[i].begin(),
                                     pair.homophilic_lists[i].begin() +
                                         std::min<std::int64_t>(k_pos, pair.homophilic_lists[i].size()));
            if (k_pos > k) {
                // rare configuration; redo the selection at the wider width
                std::vector<std::pair<double, std::int64_t>> again;
                again.reserve(n - 1);
                for (std::int64_t j = 0; j < n; ++j) {
                    if (j == i) continue;
                    again.emplace_back(scorer(i, j).combined, j);
                }
                pair.positives[i] = top_k(again, k_pos);
            }
            pair.heterophilic_lists[i] = top_k(dis_scored, k);
        }
    }

    pair.homophilic = lists_to_union_graph(n, pair.homophilic_lists);
    pair.heterophilic = lists_to_union_graph(n, pair.heterophilic_lists);
    return pair;
}

LatentGraphPair build_latent_graphs_scalable(const HeteroGraph& g,
                                             const std::vector<SparseAdjacency>& subgraphs,
                                             const Matrix& features, std::int64_t k,
                                             std::int64_t k_pos, std::int64_t anchors,
                                             std::uint64_t seed) {
    const std::int64_t n = g.num_targets();
    if (anchors > n) throw std::invalid_argument("build_latent_graphs_scalable: anchors > N");
    SparseAdjacency diffusion = diffusion_matrix(subgraphs);
    PairScorer scorer(diffusion, features);

    Rng rng(seed);
    std::vector<std::int64_t> anchor_set = rng.sample_without_replacement(n, anchors);

    LatentGraphPair pair;
    pair.k = k;
    pair.k_pos = k_pos;
    pair.homophilic_lists.resize(n);
    pair.heterophilic_lists.resize(n);
    pair.positives.resize(n);

#pragma omp parallel
    {
        std::vector<std::int64_t> pool;
        std::vector<std::pair<double, std::int64_t>> scored;
#pragma omp for schedule(dynamic, 16)
        for (std::int64_t i = 0; i < n; ++i) {
            // homophilic candidates: first-order metapath neighbors, deduped
            pool.clear();
            for (const auto& a : subgraphs) {
                auto cols = a.row_columns(i);
                pool.insert(pool.end(), cols.begin(), cols.end());
            }
            std::sort(pool.begin(), pool.end());
            pool.erase(std::unique(pool.begin(), pool.end()), pool.end());

            scored.clear();
            scored.reserve(pool.size());
            for (std::int64_t j : pool) scored.emplace_back(scorer(i, j).combined, j);
            pair.homophilic_lists[i] = top_k(scored, k);
            std::int64_t npos = std::min<std::int64_t>(k_pos, static_cast<std::int64_t>(scored.size()));
            if (k_pos <= k) {
                pair.positives[i].assign(pair.homophilic_lists[i].begin(),
                                         pair.homophilic_lists[i].begin() +
                                             std::min<std::int64_t>(npos, pair.homophilic_lists[i].size()));
            } else {
                std::vector<std::pair<double, std::int64_t>> again = scored;
                pair.positives[i] = top_k(again, k_pos);
            }

            // heterophilic candidates: the anchor sample, self excluded
            scored.clear();
            scored.reserve(anchor_set.size());
            for (std::int64_t j : anchor_set) {
                if (j == i) continue;
                CoupledSimilarity s = scorer(i, j);
                scored.emplace_back((1.0 - s.structure) * (1.0 - s.feature), j);
            }
            pair.heterophilic_lists[i] = top_k(scored, k);
        }
    }

    pair.homophilic = lists_to_union_graph(n, pair.homophilic_lists);
    pair.heterophilic = lists_to_union_graph(n, pair.heterophilic_lists);
    return pair;
}

LatentAudit latent_homophily_audit(const LatentGraphPair& pair,
                                   const std::vector<std::int64_t>& labels) {
    if (labels.empty()) throw std::runtime_error("labels required");
    LatentAudit audit;
    auto hr = [&](const SparseAdjacency& a) {
        std::int64_t edges = 0, same = 0;
        for (std::int64_t i = 0; i < a.n; ++i) {
            for (std::int64_t kk = a.offsets[i]; kk < a.offsets[i + 1]; ++kk) {
                std::int64_t j = a.columns[kk];
                if (j <= i) continue;
                ++edges;
                if (labels[i] == labels[j]) ++same;
            }
        }
        return edges ? static_cast<double>(same) / static_cast<double>(edges) : 0.0;
    };
    audit.hr_homophilic = hr(pair.homophilic);
    audit.hr_heterophilic = hr(pair.heterophilic);
    if (!pair.homophilic_lists.empty()) {
        audit.raw_hr_homophilic = directed_list_hr(pair.homophilic_lists, labels);
        audit.raw_hr_heterophilic = directed_list_hr(pair.heterophilic_lists, labels);
    }
    return audit;
}

namespace {

constexpr std::uint32_t kLatentVersion = 1;

void put_u32(std::ofstream& f, std::uint32_t v) {
    f.write(reinterpret_cast<const char*>(&v), 4);
}
std::uint32_t get_u32(std::ifstream& f) {
    std::uint32_t v = 0;
    f.read(reinterpret_cast<char*>(&v), 4);
    return v;
}

void write_csr(std::ofstream& f, const SparseAdjacency& a) {
    put_u32(f, static_cast<std::uint32_t>(a.nnz()));
    for (std::int64_t o : a.offsets) put_u32(f, static_cast<std::uint32_t>(o));
    for (std::int64_t c : a.columns) put_u32(f, static_cast<std::uint32_t>(c));
    f.write(reinterpret_cast<const char*>(a.values.data()),
            static_cast<std::streamsize>(a.values.size() * sizeof(double)));
}

SparseAdjacency read_csr(std::ifstream& f, std::int64_t n) {
    SparseAdjacency a;
    a.n = n;
    std::uint32_t nnz = get_u32(f);
    a.offsets.resize(n + 1);
    for (auto& o : a.offsets) o = get_u32(f);
    a.columns.resize(nnz);
    for (auto& c : a.columns) c = get_u32(f);
    a.values.resize(nnz);
    f.read(reinterpret_cast<char*>(a.values.data()),
           static_cast<std::streamsize>(a.values.size() * sizeof(double)));
    a.symmetric = is_symmetric(a);
    return a;
}

} // namespace

void save_latent(const LatentGraphPair& pair, const std::filesystem::path& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    f.write("LATG", 4);
    put_u32(f, kLatentVersion);
    put_u32(f, static_cast<std::uint32_t>(pair.homophilic.n));
    put_u32(f, static_cast<std::uint32_t>(pair.k));
    put_u32(f, static_cast<std::uint32_t>(pair.k_pos));
    write_csr(f, pair.homophilic);
    write_csr(f, pair.heterophilic);
    for (const auto& pos : pair.positives) {
        put_u32(f, static_cast<std::uint32_t>(pos.size()));
        for (std::int64_t id : pos) put_u32(f, static_cast<std::uint32_t>(id));
    }
}

LatentGraphPair load_latent(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot read " + path.string());
    char magic[4];
    f.read(magic, 4);
    if (std::string(magic, 4) != "LATG")
        throw std::runtime_error("bad magic in " + path.string());
    std::uint32_t version = get_u32(f);
    if (version != kLatentVersion)
        throw std::runtime_error("unsupported latent file version " + std::to_string(version));
    LatentGraphPair pair;
    std::int64_t n = get_u32(f);
    pair.k = get_u32(f);
    pair.k_pos = get_u32(f);
    pair.homophilic = read_csr(f, n);
    pair.heterophilic = read_csr(f, n);
    pair.positives.resize(n);
    for (auto& pos : pair.positives) {
        std::uint32_t cnt = get_u32(f);
        pos.resize(cnt);
        for (auto& id : pos) id = get_u32(f);
    }
    if (!f) throw std::runtime_error("truncated latent file: " + path.string());
    return pair;
}

} // namespace hetrolat
