#include <doctest.h>

#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "hetrolat/cli.hpp"
#include "hetrolat/manifest.hpp"
#include "hetrolat/synthetic.hpp"

using namespace hetrolat;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// minimal structural validator for the subset of JSON Schema the repo ships
bool validate_schema(const json& value, const json& schema, std::string& why) {
    if (schema.contains("type")) {
        const std::string type = schema["type"];
        bool ok = (type == "object" && value.is_object()) ||
                  (type == "array" && value.is_array()) ||
                  (type == "string" && value.is_string()) ||
                  (type == "number" && value.is_number()) ||
                  (type == "integer" && value.is_number_integer()) ||
                  (type == "boolean" && value.is_boolean());
        if (!ok) {
            why = "expected " + type + ", got " + std::string(value.type_name());
            return false;
        }
    }
    if (schema.contains("required")) {
        for (const auto& key : schema["required"]) {
            if (!value.contains(key.get<std::string>())) {
                why = "missing required key " + key.get<std::string>();
                return false;
            }
        }
    }
    if (schema.contains("properties") && value.is_object()) {
        for (const auto& [key, sub] : schema["properties"].items()) {
            if (value.contains(key) && !validate_schema(value[key], sub, why)) {
                why = key + ": " + why;
                return false;
            }
        }
    }
    if (schema.contains("items") && value.is_array()) {
        for (const auto& item : value) {
            if (!validate_schema(item, schema["items"], why)) return false;
        }
    }
    return true;
}

json load_json(const fs::path& p) {
    std::ifstream f(p);
    REQUIRE(f);
    return json::parse(f);
}

fs::path schema_dir() {
    // tests run from the build tree; schemas live in the source tree
    fs::path p = fs::current_path();
    while (!p.empty() && !fs::exists(p / "schemas" / "report.schema.json")) {
        if (p == p.parent_path()) break;
        p = p.parent_path();
    }
    return p / "schemas";
}

void check_against_schema(const fs::path& doc, const std::string& schema_name) {
    fs::path sp = schema_dir() / schema_name;
    REQUIRE_MESSAGE(fs::exists(sp), "schema not found: ", sp.string());
    std::string why;
    bool ok = validate_schema(load_json(doc), load_json(sp), why);
    CHECK_MESSAGE(ok, doc.string(), " violates ", schema_name, ": ", why);
}

struct CliFixture {
    fs::path work;
    fs::path dataset;

    CliFixture() {
        work = fs::temp_directory_path() / "hetrolat_cli_test";
        fs::remove_all(work);
        fs::create_directories(work);
        dataset = work / "synthdir";
        SyntheticSpec spec;
        spec.nodes_per_class = 30;
        spec.feature_dim = 8;
        spec.feature_noise = 1.5;
        spec.seed = 2;
        write_synthetic_dataset(spec, dataset);
    }
    ~CliFixture() { fs::remove_all(work); }

    std::string path(const std::string& name) const { return (work / name).string(); }
};

} // namespace

TEST_CASE("unknown subcommand and bad flags exit with usage code 2") {
    CHECK(dispatch({"frobnicate"}) == 2);
    CHECK(dispatch({}) == 2);
    CHECK(dispatch({"analyze", "--no-such-flag"}) == 2);
}

TEST_CASE("stage failures exit with code 1") {
    CHECK(dispatch({"analyze", "/nonexistent/dataset", "--out", "/tmp/r.json"}) == 1);
}

TEST_CASE("analyze produces a schema-valid report and a stable manifest") {
    CliFixture fx;
    std::string out = fx.path("report.json");
    REQUIRE(dispatch({"analyze", fx.dataset.string(), "--knn", "3,5", "--out", out,
                      "--nhr-tsv", fx.path("nhr.tsv")}) == 0);
    check_against_schema(out, "report.schema.json");
    check_against_schema(out + ".manifest.json", "manifest.schema.json");
    CHECK(fs::exists(fx.path("nhr.tsv")));

    json rep = load_json(out);
    CHECK(rep["metapaths"].size() == 2);
    CHECK(rep["knn_hr"].contains("3"));
    CHECK(rep["knn_hr"].contains("5"));

    // deterministic stage: identical artifact hashes on rerun
    json man1 = load_json(out + ".manifest.json");
    REQUIRE(dispatch({"analyze", fx.dataset.string(), "--knn", "3,5", "--out", out}) == 0);
    json man2 = load_json(out + ".manifest.json");
    CHECK(man1["artifacts"] == man2["artifacts"]);
    CHECK(man1["dataset_checksum"] == man2["dataset_checksum"]);
}

TEST_CASE("pipeline chains every stage on a synthetic dataset") {
    CliFixture fx;
    std::string cfg_path = fx.path("train.json");
    {
        std::ofstream f(cfg_path);
        f << R"({"d": 8, "r": 2, "K": 3, "k_pos": 2, "max_epochs": 5, "tau": 0.5, "seed": 1})";
    }
    fs::path out_dir = fx.work / "pipe";
    REQUIRE(dispatch({"pipeline", fx.dataset.string(), "--config", cfg_path, "--out-dir",
                      out_dir.string()}) == 0);
    for (const char* name :
         {"report.json", "latent.bin", "model.bin", "embeddings.f64", "eval.json"})
        CHECK(fs::exists(out_dir / name));
    CHECK(fs::exists(out_dir / "filtered" / "manifest.json"));
    check_against_schema(out_dir / "eval.json", "eval.schema.json");
    check_against_schema(out_dir / "filtered" / "manifest.json", "filtered.schema.json");
    check_against_schema(out_dir / "run_manifest.json", "manifest.schema.json");

    json ev = load_json(out_dir / "eval.json");
    CHECK(ev.contains("classification"));
    CHECK(ev["classification"].contains("train20"));

    // the standalone eval subcommand agrees with the pipeline stage
    std::string eval2 = fx.path("eval2.json");
    REQUIRE(dispatch({"eval", fx.dataset.string(), "--emb",
                      (out_dir / "embeddings.f64").string(), "--out", eval2}) == 0);
    json ev2 = load_json(eval2);
    CHECK(ev["clustering"] == ev2["clustering"]);
}

TEST_CASE("synth subcommand writes a loadable dataset") {
    CliFixture fx;
    std::string spec_path = fx.path("spec.json");
    {
        std::ofstream f(spec_path);
        f << R"({"nodes_per_class": 10, "classes": 2, "feature_dim": 4,
                 "metapaths": [{"intra": 0.5, "inter": 0.1}], "seed": 5})";
    }
    fs::path out_dir = fx.work / "gen";
    REQUIRE(dispatch({"synth", "--spec", spec_path, "--out", out_dir.string()}) == 0);
    CHECK(fs::exists(out_dir / "node_types.tsv"));
    CHECK(fs::exists(out_dir / "features.tsv"));
    CHECK(fs::exists(out_dir / "labels.tsv"));
    CHECK(fs::exists(out_dir / "metapaths.txt"));
    HeteroGraph g = load_graph(out_dir);
    CHECK(g.num_targets() == 20);
}

TEST_CASE("build-latent, prefilter and train compose by hand") {
    CliFixture fx;
    std::string latent = fx.path("latent.bin");
    REQUIRE(dispatch({"build-latent", fx.dataset.string(), "--k", "3", "--kpos", "2", "--out",
                      latent}) == 0);
    CHECK(fs::exists(latent));
    check_against_schema(latent + ".manifest.json", "manifest.schema.json");

    std::string filtered = fx.path("filtered");
    REQUIRE(dispatch({"prefilter", fx.dataset.string(), "--r", "2", "--out", filtered}) == 0);
    CHECK(fs::exists(fs::path(filtered) / "manifest.json"));

    std::string cfg_path = fx.path("train.json");
    {
        std::ofstream f(cfg_path);
        f << R"({"d": 8, "max_epochs": 3, "batch_size": 32, "seed": 4})";
    }
    REQUIRE(dispatch({"train", fx.dataset.string(), "--latent", latent, "--scalable",
                      "--filtered", filtered, "--config", cfg_path, "--out", fx.path("model.bin"),
                      "--emb", fx.path("emb.f64")}) == 0);
    CHECK(fs::exists(fx.path("model.bin")));
    CHECK(fs::exists(fx.path("emb.f64")));
    check_against_schema(fx.path("emb.f64") + ".manifest.json", "manifest.schema.json");
}
