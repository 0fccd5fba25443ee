#include "hetrolat/cli.hpp"

#include <chrono>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "hetrolat/eval.hpp"
#include "hetrolat/filters.hpp"
#include "hetrolat/graph.hpp"
#include "hetrolat/homophily.hpp"
#include "hetrolat/latent.hpp"
#include "hetrolat/manifest.hpp"
#include "hetrolat/model.hpp"
#include "hetrolat/synthetic.hpp"

namespace hetrolat {

namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

std::string read_text_file(const fs::path& p) {
    std::ifstream f(p);
    if (!f) throw std::runtime_error("cannot read " + p.string());
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

std::vector<std::int64_t> parse_int_list(const std::string& s) {
    std::vector<std::int64_t> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (!tok.empty()) out.push_back(std::stoll(tok));
    }
    return out;
}

nlohmann::json report_to_json(const HomophilyReport& rep) {
    nlohmann::json j;
    j["metapaths"] = nlohmann::json::array();
    for (std::size_t p = 0; p < rep.metapath_names.size(); ++p) {
        nlohmann::json nhr = nlohmann::json::array();
        for (const auto& v : rep.nhr[p]) {
            if (v.has_value()) nhr.push_back(*v);
            else nhr.push_back(nullptr);
        }
        j["metapaths"].push_back({{"name", rep.metapath_names[p]},
                                  {"mhr", rep.mhr[p]},
                                  {"isolated", rep.isolated_counts[p]},
                                  {"nhr", std::move(nhr)}});
    }
    j["knn_hr"] = nlohmann::json::object();
    for (const auto& [k, v] : rep.knn_hr) j["knn_hr"][std::to_string(k)] = v;
    return j;
}

void write_json(const nlohmann::json& j, const fs::path& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    f << j.dump(2) << '\n';
}

struct SplitSets {
    std::vector<std::int64_t> test;
    std::map<std::string, std::vector<std::int64_t>> train;  // tag -> ids
};

SplitSets collect_splits(const std::map<std::string, std::vector<std::int64_t>>& splits) {
    SplitSets out;
    for (const auto& [tag, ids] : splits) {
        if (tag == "test") out.test = ids;
        else if (tag.rfind("train", 0) == 0) out.train[tag] = ids;
    }
    return out;
}

// ---------------------------------------------------------------------------
// stages
// ---------------------------------------------------------------------------

int run_analyze(const fs::path& dataset, const std::string& knn_list, const fs::path& out,
                const std::string& nhr_tsv) {
    auto t0 = Clock::now();
    HeteroGraph g = load_graph(dataset);
    HomophilyReport rep = homophily_report(g, parse_int_list(knn_list));
    write_json(report_to_json(rep), out);
    if (!nhr_tsv.empty()) {
        std::ofstream f(nhr_tsv);
        if (!f) throw std::runtime_error("cannot write " + nhr_tsv);
        for (std::size_t p = 0; p < rep.metapath_names.size(); ++p)
            for (std::size_t i = 0; i < rep.nhr[p].size(); ++i)
                if (rep.nhr[p][i].has_value())
                    f << i << '\t' << rep.metapath_names[p] << '\t' << *rep.nhr[p][i] << '\n';
    }
    RunManifest man;
    man.command = "analyze";
    man.config_json = nlohmann::json{{"knn", knn_list}}.dump();
    man.dataset_checksum = hash_hex(hash_directory(dataset));
    man.add_artifact(out);
    man.timings_ms["analyze"] = ms_since(t0);
    man.write(out.string() + ".manifest.json");
    return 0;
}

int run_build_latent(const fs::path& dataset, std::int64_t k, std::int64_t k_pos, bool scalable,
                     std::int64_t anchors, std::uint64_t seed, const fs::path& out) {
    auto t0 = Clock::now();
    HeteroGraph g = load_graph(dataset);
    std::vector<SparseAdjacency> subgraphs = all_metapath_adjacencies(g);
    LatentGraphPair pair;
    if (scalable) {
        std::int64_t m = std::min<std::int64_t>(anchors, g.num_targets());
        pair = build_latent_graphs_scalable(g, subgraphs, g.features, k, k_pos, m, seed);
    } else {
        pair = build_latent_graphs_full(diffusion_matrix(subgraphs), g.features, k, k_pos);
    }
    save_latent(pair, out);

    RunManifest man;
    man.command = "build-latent";
    nlohmann::json cfg{{"k", k}, {"k_pos", k_pos}, {"scalable", scalable}, {"anchors", anchors}};
    if (g.has_labels()) {
        LatentAudit audit = latent_homophily_audit(pair, g.labels);
        cfg["hr_homophilic"] = audit.hr_homophilic;
        cfg["hr_heterophilic"] = audit.hr_heterophilic;
        if (audit.raw_hr_homophilic) cfg["raw_hr_homophilic"] = *audit.raw_hr_homophilic;
        if (audit.raw_hr_heterophilic) cfg["raw_hr_heterophilic"] = *audit.raw_hr_heterophilic;
    }
    man.config_json = cfg.dump();
    man.dataset_checksum = hash_hex(hash_directory(dataset));
    man.seed = seed;
    man.add_artifact(out);
    man.timings_ms["build-latent"] = ms_since(t0);
    man.write(out.string() + ".manifest.json");
    return 0;
}

int run_prefilter(const fs::path& dataset, int r, const fs::path& out) {
    auto t0 = Clock::now();
    HeteroGraph g = load_graph(dataset);
    std::uint64_t checksum = hash_directory(dataset);
    ensure_filtered(g, r, out, checksum);

    RunManifest man;
    man.command = "prefilter";
    man.config_json = nlohmann::json{{"r", r}}.dump();
    man.dataset_checksum = hash_hex(checksum);
    for (const auto& e : fs::directory_iterator(out))
        if (e.path().extension() == ".f64") man.add_artifact(e.path());
    man.timings_ms["prefilter"] = ms_since(t0);
    man.write((out / "run_manifest.json").string());
    return 0;
}

int run_train(const fs::path& dataset, const fs::path& latent_path, bool scalable,
              const fs::path& filtered_dir, std::int64_t batch_override,
              const fs::path& config_path, const fs::path& model_out, const fs::path& emb_out) {
    auto t0 = Clock::now();
    TrainConfig cfg = config_path.empty() ? TrainConfig{}
                                          : TrainConfig::from_json(read_text_file(config_path));
    if (scalable) cfg.scalable = true;
    if (batch_override > 0) cfg.batch_size = batch_override;

    HeteroGraph g = load_graph(dataset);
    LatentGraphPair latent = load_latent(latent_path);
    TrainResult result;
    if (cfg.scalable) {
        if (filtered_dir.empty())
            throw std::runtime_error("scalable training needs --filtered <dir>");
        FilteredFeatures filtered =
            ensure_filtered(g, cfg.filter_order, filtered_dir, hash_directory(dataset));
        result = train_scalable(g, latent, filtered, cfg, &std::cout);
    } else {
        result = train_full(g, latent, cfg, &std::cout);
    }
    save_model(result.state, model_out);
    save_embeddings(result.embeddings, emb_out);

    RunManifest man;
    man.command = "train";
    man.config_json = cfg.to_json();
    man.dataset_checksum = hash_hex(hash_directory(dataset));
    man.seed = cfg.seed;
    man.add_artifact(model_out);
    man.add_artifact(emb_out);
    man.timings_ms["train"] = ms_since(t0);
    if (!result.history.empty()) {
        man.timings_ms["first_epoch"] = result.history.front().elapsed_ms;
        man.timings_ms["last_epoch"] = result.history.back().elapsed_ms;
    }
    man.write(emb_out.string() + ".manifest.json");
    return 0;
}

nlohmann::json eval_to_json(const HeteroGraph& g, const Matrix& emb) {
    if (!g.has_labels()) throw std::runtime_error("labels required");
    nlohmann::json j;

    SplitSets sets = collect_splits(g.splits);
    if (!sets.test.empty() && !sets.train.empty()) {
        nlohmann::json cls = nlohmann::json::object();
        for (const auto& [tag, train_ids] : sets.train) {
            ProbeMetrics pm = linear_probe(emb, g.labels, train_ids, sets.test);
            cls[tag] = {{"macro_f1", {{"mean", pm.macro_f1.mean}, {"std", pm.macro_f1.std}}},
                        {"micro_f1", {{"mean", pm.micro_f1.mean}, {"std", pm.micro_f1.std}}},
                        {"auc", {{"mean", pm.auc.mean}, {"std", pm.auc.std}}}};
        }
        j["classification"] = std::move(cls);
    }

    ClusterMetrics cm = cluster_eval(emb, g.labels);
    j["clustering"] = {{"nmi", cm.nmi}, {"ari", cm.ari}, {"silhouette", cm.silhouette}};

    nlohmann::json sim = nlohmann::json::object();
    for (const auto& mp : g.metapaths) {
        auto nhr = node_homophily(g, mp);
        bool truncated = false;
        auto table = similarity_search(emb, g.labels, nhr, 200, {5, 10}, &truncated);
        nlohmann::json entry;
        for (const auto& [k, v] : table) entry["sim@" + std::to_string(k)] = v;
        entry["truncated"] = truncated;
        sim[mp.name] = std::move(entry);
    }
    j["sim_search"] = std::move(sim);
    return j;
}

int run_eval(const fs::path& dataset, const fs::path& emb_path, const fs::path& splits_override,
             const fs::path& out) {
    auto t0 = Clock::now();
    HeteroGraph g = load_graph(dataset);
    if (!splits_override.empty()) {
        // replace splits with the override file (same format as splits.tsv)
        g.splits.clear();
        std::ifstream f(splits_override);
        if (!f) throw std::runtime_error("cannot read " + splits_override.string());
        std::string line;
        while (std::getline(f, line)) {
            if (line.empty() || line[0] == '#') continue;
            std::stringstream ss(line);
            std::string id, tag;
            if (std::getline(ss, id, '\t') && std::getline(ss, tag))
                g.splits[tag].push_back(std::stoll(id));
        }
    }
    Matrix emb = load_embeddings(emb_path);
    if (emb.rows != g.num_targets())
        throw std::runtime_error("embeddings row count does not match the dataset");
    write_json(eval_to_json(g, emb), out);

    RunManifest man;
    man.command = "eval";
    man.config_json = "{}";
    man.dataset_checksum = hash_hex(hash_directory(dataset));
    man.add_artifact(out);
    man.timings_ms["eval"] = ms_since(t0);
    man.write(out.string() + ".manifest.json");
    return 0;
}

int run_synth(const fs::path& spec_path, const fs::path& out) {
    auto t0 = Clock::now();
    SyntheticSpec spec = SyntheticSpec::from_json(read_text_file(spec_path));
    write_synthetic_dataset(spec, out);

    RunManifest man;
    man.command = "synth";
    man.config_json = spec.to_json();
    man.seed = spec.seed;
    man.dataset_checksum = hash_hex(hash_directory(out));
    man.timings_ms["synth"] = ms_since(t0);
    man.write((out / "run_manifest.json").string());
    return 0;
}

int run_pipeline(const fs::path& dataset, const fs::path& config_path, const fs::path& out_dir) {
    TrainConfig cfg = config_path.empty() ? TrainConfig{}
                                          : TrainConfig::from_json(read_text_file(config_path));
    fs::create_directories(out_dir);
    auto t0 = Clock::now();

    run_analyze(dataset, "5", out_dir / "report.json", "");
    run_build_latent(dataset, cfg.k, cfg.k_pos, cfg.scalable, cfg.anchors, cfg.seed,
                     out_dir / "latent.bin");
    run_prefilter(dataset, cfg.filter_order, out_dir / "filtered");
    run_train(dataset, out_dir / "latent.bin", cfg.scalable, out_dir / "filtered",
              /*batch_override=*/0, config_path, out_dir / "model.bin",
              out_dir / "embeddings.f64");
    run_eval(dataset, out_dir / "embeddings.f64", fs::path{}, out_dir / "eval.json");

    RunManifest man;
    man.command = "pipeline";
    man.config_json = cfg.to_json();
    man.dataset_checksum = hash_hex(hash_directory(dataset));
    man.seed = cfg.seed;
    for (const char* name : {"report.json", "latent.bin", "model.bin", "embeddings.f64",
                             "eval.json"})
        man.add_artifact(out_dir / name);
    man.timings_ms["pipeline"] = ms_since(t0);
    man.write((out_dir / "run_manifest.json").string());
    return 0;
}

} // namespace

int dispatch(const std::vector<std::string>& args) {
    CLI::App app{"latent-graph guided heterogeneous graph representation pipeline"};
    app.require_subcommand(1);

    std::string dataset, out, knn = "5,10", nhr_tsv;
    std::string latent_path, filtered_dir, config_path, model_out, emb_out, spec_path, splits_path;
    std::int64_t k = 5, k_pos = 2, anchors = 1000, batch = 0;
    std::uint64_t seed = 0;
    int r = 2;
    bool scalable = false;

    auto* analyze = app.add_subcommand("analyze", "homophily report for a dataset");
    analyze->add_option("dataset", dataset)->required();
    analyze->add_option("--knn", knn, "comma-separated K values");
    analyze->add_option("--out", out)->required();
    analyze->add_option("--nhr-tsv", nhr_tsv, "optional per-node homophily dump");

    auto* build = app.add_subcommand("build-latent", "mine homophilic/heterophilic latent graphs");
    build->add_option("dataset", dataset)->required();
    build->add_option("--k", k);
    build->add_option("--kpos", k_pos);
    build->add_flag("--scalable", scalable);
    build->add_option("--anchors", anchors);
    build->add_option("--seed", seed);
    build->add_option("--out", out)->required();

    auto* prefilter = app.add_subcommand("prefilter", "precompute filtered features");
    prefilter->add_option("dataset", dataset)->required();
    prefilter->add_option("--r", r);
    prefilter->add_option("--out", out)->required();

    auto* train = app.add_subcommand("train", "train and export embeddings");
    train->add_option("dataset", dataset)->required();
    train->add_option("--latent", latent_path)->required();
    train->add_flag("--scalable", scalable);
    train->add_option("--filtered", filtered_dir);
    train->add_option("--batch", batch);
    train->add_option("--config", config_path);
    train->add_option("--out", model_out)->required();
    train->add_option("--emb", emb_out)->required();

    auto* eval_cmd = app.add_subcommand("eval", "downstream evaluation of embeddings");
    eval_cmd->add_option("dataset", dataset)->required();
    eval_cmd->add_option("--emb", emb_out)->required();
    eval_cmd->add_option("--splits", splits_path);
    eval_cmd->add_option("--out", out)->required();

    auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
    synth->add_option("--spec", spec_path)->required();
    synth->add_option("--out", out)->required();

    auto* pipeline = app.add_subcommand("pipeline", "run every stage on one dataset");
    pipeline->add_option("dataset", dataset)->required();
    pipeline->add_option("--config", config_path);
    pipeline->add_option("--out-dir", out, "artifact directory (default pipeline_out)");

    std::vector<const char*> argv;
    argv.push_back("hetrolat");
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == static_cast<int>(CLI::ExitCodes::Success)) {
            return app.exit(e);  // --help
        }
        app.exit(e);
        return 2;
    }

    std::string stage = app.get_subcommands().front()->get_name();
    try {
        if (analyze->parsed()) return run_analyze(dataset, knn, out, nhr_tsv);
        if (build->parsed()) return run_build_latent(dataset, k, k_pos, scalable, anchors, seed, out);
        if (prefilter->parsed()) return run_prefilter(dataset, r, out);
        if (train->parsed())
            return run_train(dataset, latent_path, scalable, filtered_dir, batch, config_path,
                             model_out, emb_out);
        if (eval_cmd->parsed()) return run_eval(dataset, emb_out, splits_path, out);
        if (synth->parsed()) return run_synth(spec_path, out);
        if (pipeline->parsed())
            return run_pipeline(dataset, config_path, out.empty() ? "pipeline_out" : out);
    } catch (const std::exception& e) {
        std::cerr << "stage " << stage << " failed: " << e.what() << '\n';
        return 1;
    }
    return 2;
}

} // namespace hetrolat
