#include "hetrolat/graph.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace hetrolat {

namespace fs = std::filesystem;

std::int64_t HeteroGraph::num_classes() const {
    std::int64_t c = 0;
    for (std::int64_t y : labels) c = std::max(c, y + 1);
    return c;
}

std::int64_t HeteroGraph::type_count(const std::string& type) const {
    for (const auto& [name, count] : node_types)
        if (name == type) return count;
    throw std::invalid_argument("unknown node type: " + type);
}

const Relation& HeteroGraph::relation(const std::string& name) const {
    for (const auto& r : relations)
        if (r.name == name) return r;
    throw std::invalid_argument("unknown edge type: " + name);
}

const MetaPath& HeteroGraph::metapath(const std::string& name) const {
    for (const auto& mp : metapaths)
        if (mp.name == name) return mp;
    throw std::invalid_argument("unknown metapath: " + name);
}

std::vector<std::int64_t> HeteroGraph::zero_feature_rows() const {
    std::vector<std::int64_t> out;
    for (std::int64_t i = 0; i < features.rows; ++i)
        if (norm2(features.row(i)) == 0.0) out.push_back(i);
    return out;
}

HeteroGraph::HeteroGraph(const HeteroGraph& o)
    : node_types(o.node_types),
      relations(o.relations),
      target_type(o.target_type),
      features(o.features),
      labels(o.labels),
      metapaths(o.metapaths),
      splits(o.splits) {
    std::scoped_lock lock(o.cache_mutex_);
    adjacency_cache_ = o.adjacency_cache_;
}

HeteroGraph& HeteroGraph::operator=(const HeteroGraph& o) {
    if (this == &o) return *this;
    std::scoped_lock lock(cache_mutex_, o.cache_mutex_);
    node_types = o.node_types;
    relations = o.relations;
    target_type = o.target_type;
    features = o.features;
    labels = o.labels;
    metapaths = o.metapaths;
    splits = o.splits;
    adjacency_cache_ = o.adjacency_cache_;
    return *this;
}

const SparseAdjacency& HeteroGraph::metapath_adjacency_cached(const MetaPath& mp) const {
    {
        std::scoped_lock lock(cache_mutex_);
        auto it = adjacency_cache_.find(mp.name);
        if (it != adjacency_cache_.end()) return it->second;
    }
    SparseAdjacency built = metapath_adjacency(*this, mp);
    std::scoped_lock lock(cache_mutex_);
    return adjacency_cache_.emplace(mp.name, std::move(built)).first->second;
}

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = line.find('\t', start);
        if (pos == std::string::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

std::string strip(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

std::int64_t parse_int(const std::string& s, const std::string& context) {
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
        throw std::runtime_error("bad integer '" + s + "' in " + context);
    return v;
}

std::ifstream open_required(const fs::path& p) {
    std::ifstream f(p);
    if (!f) throw std::runtime_error("missing file: " + p.string());
    return f;
}

} // namespace

HeteroGraph load_graph(const fs::path& dir) {
    HeteroGraph g;

    {
        std::ifstream f = open_required(dir / "node_types.tsv");
        std::string line;
        while (std::getline(f, line)) {
            line = strip(line);
            if (line.empty() || line[0] == '#') continue;
            auto parts = split_tabs(line);
            if (parts.size() != 2) throw std::runtime_error("node_types.tsv: expected 'name\\tcount'");
            g.node_types.emplace_back(strip(parts[0]), parse_int(strip(parts[1]), "node_types.tsv"));
        }
        if (g.node_types.empty()) throw std::runtime_error("node_types.tsv: no node types");
    }

    for (const auto& entry : fs::directory_iterator(dir)) {
        const std::string fname = entry.path().filename().string();
        if (fname.rfind("edges_", 0) != 0 || entry.path().extension() != ".tsv") continue;
        Relation rel;
        rel.name = fname.substr(6, fname.size() - 6 - 4);
        std::ifstream f = open_required(entry.path());
        std::string line;
        bool have_header = false;
        while (std::getline(f, line)) {
            line = strip(line);
            if (line.empty()) continue;
            if (line[0] == '#') {
                auto parts = split_tabs(strip(line.substr(1)));
                if (parts.size() != 2)
                    throw std::runtime_error(fname + ": header must be '# src_type\\tdst_type'");
                rel.src_type = strip(parts[0]);
                rel.dst_type = strip(parts[1]);
                have_header = true;
                continue;
            }
            auto parts = split_tabs(line);
            if (parts.size() != 2) throw std::runtime_error(fname + ": expected 'src\\tdst'");
            rel.pairs.emplace_back(parse_int(strip(parts[0]), fname), parse_int(strip(parts[1]), fname));
        }
        if (!have_header) throw std::runtime_error(fname + ": missing '# src_type\\tdst_type' header");
        std::int64_t src_n = g.type_count(rel.src_type);
        std::int64_t dst_n = g.type_count(rel.dst_type);
        for (auto [s, d] : rel.pairs)
            if (s < 0 || s >= src_n || d < 0 || d >= dst_n)
                throw std::runtime_error(fname + ": index out of range");
        g.relations.push_back(std::move(rel));
    }
    std::sort(g.relations.begin(), g.relations.end(),
              [](const Relation& a, const Relation& b) { return a.name < b.name; });

    if (fs::exists(dir / "metapaths.txt")) {
        std::ifstream f = open_required(dir / "metapaths.txt");
        std::string line;
        while (std::getline(f, line)) {
            line = strip(line);
            if (line.empty() || line[0] == '#') continue;
            std::size_t colon = line.find(':');
            if (colon == std::string::npos)
                throw std::runtime_error("metapaths.txt: expected 'NAME: edgetype,...'");
            MetaPath mp;
            mp.name = strip(line.substr(0, colon));
            std::stringstream rest(line.substr(colon + 1));
            std::string step;
            while (std::getline(rest, step, ',')) {
                step = strip(step);
                if (!step.empty()) mp.steps.push_back(step);
            }
            if (mp.steps.empty()) throw std::runtime_error("metapaths.txt: empty metapath " + mp.name);
            g.metapaths.push_back(std::move(mp));
        }
    }

    // Target type: the start of the declared metapaths, or the unique node
    // type when there are none.
    if (!g.metapaths.empty()) {
        const std::string& first = g.metapaths.front().steps.front();
        bool reversed = first[0] == '~';
        const Relation& rel = g.relation(reversed ? first.substr(1) : first);
        g.target_type = reversed ? rel.dst_type : rel.src_type;
    } else if (g.node_types.size() == 1) {
        g.target_type = g.node_types.front().first;
    } else {
        throw std::runtime_error("cannot infer target type: no metapaths and multiple node types");
    }

    // Validate every metapath: known edge types, chain consistency, closure
    // at the target type.
    for (const auto& mp : g.metapaths) {
        std::string cursor = g.target_type;
        for (const auto& step : mp.steps) {
            bool reversed = step[0] == '~';
            const Relation& rel = g.relation(reversed ? step.substr(1) : step);
            const std::string& from = reversed ? rel.dst_type : rel.src_type;
            const std::string& to = reversed ? rel.src_type : rel.dst_type;
            if (from != cursor)
                throw std::runtime_error("metapath " + mp.name + ": step " + step +
                                         " starts at " + from + ", expected " + cursor);
            cursor = to;
        }
        if (cursor != g.target_type)
            throw std::runtime_error("metapath " + mp.name + " does not end at target type " +
                                     g.target_type);
    }

    const std::int64_t n = g.type_count(g.target_type);
    {
        std::ifstream f = open_required(dir / "features.tsv");
        std::string line;
        std::vector<std::vector<double>> rows;
        while (std::getline(f, line)) {
            line = strip(line);
            if (line.empty()) continue;
            auto parts = split_tabs(line);
            std::vector<double> row;
            row.reserve(parts.size());
            for (const auto& p : parts) {
                double v = std::stod(p);
                if (v < 0.0) throw std::runtime_error("features.tsv: negative entry in row " +
                                                      std::to_string(rows.size()));
                row.push_back(v);
            }
            if (!rows.empty() && row.size() != rows.front().size())
                throw std::runtime_error("features.tsv: ragged rows");
            rows.push_back(std::move(row));
        }
        if (static_cast<std::int64_t>(rows.size()) != n)
            throw std::runtime_error("features.tsv: expected " + std::to_string(n) + " rows, got " +
                                     std::to_string(rows.size()));
        if (rows.empty() || rows.front().empty())
            throw std::runtime_error("features.tsv: empty feature matrix");
        g.features = Matrix(n, static_cast<std::int64_t>(rows.front().size()));
        for (std::int64_t i = 0; i < n; ++i)
            std::copy(rows[i].begin(), rows[i].end(), g.features.row(i).begin());
    }

    if (fs::exists(dir / "labels.tsv")) {
        std::ifstream f = open_required(dir / "labels.tsv");
        std::string line;
        while (std::getline(f, line)) {
            line = strip(line);
            if (line.empty()) continue;
            std::int64_t y = parse_int(line, "labels.tsv");
            if (y < 0) throw std::runtime_error("labels.tsv: label out of range: " + line);
            g.labels.push_back(y);
        }
        if (static_cast<std::int64_t>(g.labels.size()) != n)
            throw std::runtime_error("labels.tsv: expected " + std::to_string(n) + " labels");
    }

    if (fs::exists(dir / "splits.tsv")) {
        std::ifstream f = open_required(dir / "splits.tsv");
        std::string line;
        while (std::getline(f, line)) {
            line = strip(line);
            if (line.empty() || line[0] == '#') continue;
            auto parts = split_tabs(line);
            if (parts.size() != 2) throw std::runtime_error("splits.tsv: expected 'node_id\\ttag'");
            std::int64_t id = parse_int(strip(parts[0]), "splits.tsv");
            if (id < 0 || id >= n) throw std::runtime_error("splits.tsv: index out of range");
            g.splits[strip(parts[1])].push_back(id);
        }
    }

    return g;
}

void save_graph(const HeteroGraph& g, const fs::path& dir) {
    fs::create_directories(dir);
    {
        std::ofstream f(dir / "node_types.tsv");
        for (const auto& [name, count] : g.node_types) f << name << '\t' << count << '\n';
    }
    for (const auto& rel : g.relations) {
        std::ofstream f(dir / ("edges_" + rel.name + ".tsv"));
        f << "# " << rel.src_type << '\t' << rel.dst_type << '\n';
        for (auto [s, d] : rel.pairs) f << s << '\t' << d << '\n';
    }
    {
        std::ofstream f(dir / "features.tsv");
        f.precision(17);
        for (std::int64_t i = 0; i < g.features.rows; ++i) {
            for (std::int64_t j = 0; j < g.features.cols; ++j) {
                if (j) f << '\t';
                f << g.features(i, j);
            }
            f << '\n';
        }
    }
    if (!g.labels.empty()) {
        std::ofstream f(dir / "labels.tsv");
        for (std::int64_t y : g.labels) f << y << '\n';
    }
    if (!g.metapaths.empty()) {
        std::ofstream f(dir / "metapaths.txt");
        for (const auto& mp : g.metapaths) {
            f << mp.name << ": ";
            for (std::size_t i = 0; i < mp.steps.size(); ++i) {
                if (i) f << ',';
                f << mp.steps[i];
            }
            f << '\n';
        }
    }
    if (!g.splits.empty()) {
        std::ofstream f(dir / "splits.tsv");
        for (const auto& [tag, ids] : g.splits)
            for (std::int64_t id : ids) f << id << '\t' << tag << '\n';
    }
}

SparseAdjacency metapath_adjacency(const HeteroGraph& g, const MetaPath& mp) {
    std::string cursor = g.target_type;
    SparseRelation composed;
    bool first = true;
    for (const auto& step : mp.steps) {
        bool reversed = step[0] == '~';
        const Relation& rel = g.relation(reversed ? step.substr(1) : step);
        const std::string& from = reversed ? rel.dst_type : rel.src_type;
        const std::string& to = reversed ? rel.src_type : rel.dst_type;
        if (from != cursor)
            throw std::invalid_argument("metapath " + mp.name + ": type mismatch at step " + step);
        SparseRelation hop = SparseRelation::from_pairs(g.type_count(rel.src_type),
                                                        g.type_count(rel.dst_type), rel.pairs);
        if (reversed) hop = hop.transposed();
        composed = first ? std::move(hop) : boolean_product(composed, hop);
        first = false;
        cursor = to;
    }
    if (cursor != g.target_type)
        throw std::invalid_argument("metapath " + mp.name + " does not return to target type");

    // binarize, drop self-loops, make symmetric
    std::vector<std::tuple<std::int64_t, std::int64_t, double>> trip;
    for (std::int64_t i = 0; i < composed.rows; ++i) {
        for (std::int64_t k = composed.offsets[i]; k < composed.offsets[i + 1]; ++k) {
            std::int64_t j = composed.columns[k];
            if (i == j) continue;
            trip.emplace_back(i, j, 1.0);
            trip.emplace_back(j, i, 1.0);
        }
    }
    std::sort(trip.begin(), trip.end());
    trip.erase(std::unique(trip.begin(), trip.end()), trip.end());
    SparseAdjacency out = make_csr(g.num_targets(), std::move(trip));
    out.symmetric = true;
    return out;
}

std::vector<SparseAdjacency> all_metapath_adjacencies(const HeteroGraph& g) {
    std::vector<SparseAdjacency> out;
    out.reserve(g.metapaths.size());
    for (const auto& mp : g.metapaths) out.push_back(g.metapath_adjacency_cached(mp));
    return out;
}

} // namespace hetrolat
