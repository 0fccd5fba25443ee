#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace hetrolat {

/// FNV-1a 64-bit over a byte range.
std::uint64_t fnv1a(const void* data, std::size_t len, std::uint64_t seed = 0xcbf29ce484222325ULL);

std::uint64_t hash_file(const std::filesystem::path& p);

/// Order-independent content hash of a directory tree: files are visited in
/// sorted relative-path order and their names and bytes folded in.
std::uint64_t hash_directory(const std::filesystem::path& dir);

std::string hash_hex(std::uint64_t h);

/// One JSON record per CLI stage: what ran, with which config, on which
/// inputs, producing which artifacts. Re-running a deterministic stage with
/// identical inputs must reproduce identical artifact hashes.
struct RunManifest {
    std::string command;
    std::string config_json;  // snapshot, serialized
    std::string dataset_checksum;
    std::uint64_t seed = 0;
    std::map<std::string, std::string> artifact_hashes;  // path -> hex hash
    std::map<std::string, double> timings_ms;            // stage -> wall clock

    void add_artifact(const std::filesystem::path& p);
    void write(const std::filesystem::path& path) const;
};

} // namespace hetrolat
