#include "hetrolat/manifest.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace hetrolat {

namespace fs = std::filesystem;

std::uint64_t fnv1a(const void* data, std::size_t len, std::uint64_t seed) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = seed;
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t hash_file(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for hashing: " + p.string());
    std::uint64_t h = 0xcbf29ce484222325ULL;
    char buf[1 << 16];
    while (f) {
        f.read(buf, sizeof buf);
        std::streamsize got = f.gcount();
        if (got > 0) h = fnv1a(buf, static_cast<std::size_t>(got), h);
    }
    return h;
}

std::uint64_t hash_directory(const fs::path& dir) {
    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(dir))
        if (e.is_regular_file()) files.push_back(e.path());
    std::vector<std::string> rel;
    rel.reserve(files.size());
    for (const auto& p : files) rel.push_back(fs::relative(p, dir).generic_string());
    std::vector<std::size_t> order(files.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return rel[a] < rel[b]; });
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (std::size_t i : order) {
        h = fnv1a(rel[i].data(), rel[i].size(), h);
        std::uint64_t fh = hash_file(files[i]);
        h = fnv1a(&fh, sizeof fh, h);
    }
    return h;
}

std::string hash_hex(std::uint64_t h) {
    std::ostringstream os;
    os << std::hex;
    os.width(16);
    os.fill('0');
    os << h;
    return os.str();
}

void RunManifest::add_artifact(const fs::path& p) {
    artifact_hashes[p.filename().string()] = hash_hex(hash_file(p));
}

void RunManifest::write(const fs::path& path) const {
    nlohmann::json j;
    j["command"] = command;
    j["config"] = config_json.empty() ? nlohmann::json::object()
                                      : nlohmann::json::parse(config_json);
    j["dataset_checksum"] = dataset_checksum;
    j["seed"] = seed;
    j["artifacts"] = artifact_hashes;
    j["timings_ms"] = timings_ms;
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write manifest: " + path.string());
    f << j.dump(2) << '\n';
}

} // namespace hetrolat
