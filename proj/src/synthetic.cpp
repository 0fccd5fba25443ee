#include "hetrolat/synthetic.hpp"

#include <stdexcept>

#include <json.hpp>

#include "hetrolat/rng.hpp"

namespace hetrolat {

void SyntheticSpec::validate() const {
    if (nodes_per_class < 1) throw std::invalid_argument("synthetic: nodes_per_class must be >= 1");
    if (classes < 2) throw std::invalid_argument("synthetic: need at least two classes");
    if (metapaths.empty()) throw std::invalid_argument("synthetic: need at least one metapath");
    for (const auto& mp : metapaths)
        if (mp.intra < 0.0 || mp.intra > 1.0 || mp.inter < 0.0 || mp.inter > 1.0)
            throw std::invalid_argument("synthetic: probabilities must lie in [0,1]");
    if (feature_dim < classes)
        throw std::invalid_argument("synthetic: feature_dim must be >= classes");
    if (feature_noise < 0.0) throw std::invalid_argument("synthetic: feature_noise must be >= 0");
}

double SyntheticSpec::expected_mhr(std::size_t metapath_index) const {
    const auto& mp = metapaths.at(metapath_index);
    double per = static_cast<double>(nodes_per_class);
    double c = static_cast<double>(classes);
    double intra_pairs = c * per * (per - 1.0) / 2.0;
    double inter_pairs = per * per * c * (c - 1.0) / 2.0;
    double e_intra = mp.intra * intra_pairs;
    double e_inter = mp.inter * inter_pairs;
    if (e_intra + e_inter == 0.0) return 0.0;
    return e_intra / (e_intra + e_inter);
}

SyntheticSpec SyntheticSpec::from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    SyntheticSpec s;
    if (j.contains("nodes_per_class")) s.nodes_per_class = j["nodes_per_class"].get<std::int64_t>();
    if (j.contains("classes")) s.classes = j["classes"].get<std::int64_t>();
    if (j.contains("feature_dim")) s.feature_dim = j["feature_dim"].get<std::int64_t>();
    if (j.contains("feature_noise")) s.feature_noise = j["feature_noise"].get<double>();
    if (j.contains("seed")) s.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("metapaths")) {
        s.metapaths.clear();
        for (const auto& mp : j["metapaths"])
            s.metapaths.push_back({mp.at("intra").get<double>(), mp.at("inter").get<double>()});
    }
    s.validate();
    return s;
}

std::string SyntheticSpec::to_json() const {
    nlohmann::json j;
    j["nodes_per_class"] = nodes_per_class;
    j["classes"] = classes;
    j["feature_dim"] = feature_dim;
    j["feature_noise"] = feature_noise;
    j["seed"] = seed;
    j["metapaths"] = nlohmann::json::array();
    for (const auto& mp : metapaths)
        j["metapaths"].push_back({{"intra", mp.intra}, {"inter", mp.inter}});
    return j.dump();
}

HeteroGraph generate_synthetic(const SyntheticSpec& spec) {
    spec.validate();
    Rng rng(spec.seed * 0x9e3779b97f4a7c15ULL + 101);
    const std::int64_t n = spec.total_nodes();

    HeteroGraph g;
    g.node_types.emplace_back("target", n);
    g.target_type = "target";

    g.labels.resize(n);
    for (std::int64_t i = 0; i < n; ++i) g.labels[i] = i / spec.nodes_per_class;

    g.features = Matrix(n, spec.feature_dim);
    for (std::int64_t i = 0; i < n; ++i) {
        for (std::int64_t j = 0; j < spec.feature_dim; ++j)
            g.features(i, j) = spec.feature_noise * rng.next_double();
        g.features(i, g.labels[i]) += 1.0;
    }

    for (std::size_t p = 0; p < spec.metapaths.size(); ++p) {
        Relation rel;
        rel.name = "rel" + std::to_string(p);
        rel.src_type = "target";
        rel.dst_type = "target";
        for (std::int64_t i = 0; i < n; ++i) {
            for (std::int64_t j = i + 1; j < n; ++j) {
                double prob =
                    g.labels[i] == g.labels[j] ? spec.metapaths[p].intra : spec.metapaths[p].inter;
                if (rng.next_double() < prob) rel.pairs.emplace_back(i, j);
            }
        }
        g.relations.push_back(std::move(rel));
        MetaPath mp;
        mp.name = "MP" + std::to_string(p);
        mp.steps = {"rel" + std::to_string(p)};
        g.metapaths.push_back(std::move(mp));
    }

    // nested train splits, remaining nodes alternate into val (1 in 4) and test
    Rng split_rng(spec.seed * 0x2545F4914F6CDD1DULL + 31);
    for (std::int64_t c = 0; c < spec.classes; ++c) {
        std::vector<std::int64_t> ids(spec.nodes_per_class);
        for (std::int64_t i = 0; i < spec.nodes_per_class; ++i) ids[i] = c * spec.nodes_per_class + i;
        split_rng.shuffle(ids);
        std::int64_t train_pool = std::min<std::int64_t>(60, 3 * spec.nodes_per_class / 4);
        for (std::int64_t i = 0; i < spec.nodes_per_class; ++i) {
            if (i < train_pool) {
                if (i < 20) g.splits["train20"].push_back(ids[i]);
                if (i < 40) g.splits["train40"].push_back(ids[i]);
                g.splits["train60"].push_back(ids[i]);
            } else if ((i - train_pool) % 4 == 0) {
                g.splits["val"].push_back(ids[i]);
            } else {
                g.splits["test"].push_back(ids[i]);
            }
        }
    }
    for (auto& [tag, ids] : g.splits) std::sort(ids.begin(), ids.end());
    return g;
}

void write_synthetic_dataset(const SyntheticSpec& spec, const std::filesystem::path& dir) {
    save_graph(generate_synthetic(spec), dir);
}

} // namespace hetrolat
