#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hetrolat/graph.hpp"

namespace hetrolat {

/// Planted-partition generator. Metapath subgraphs are emitted directly as
/// target-target relations; features are a one-hot class centroid plus
/// uniform nonnegative noise.
struct SyntheticSpec {
    std::int64_t nodes_per_class = 100;
    std::int64_t classes = 3;
    struct MetapathProbs {
        double intra = 0.0;  // same-class edge probability
        double inter = 0.0;  // cross-class edge probability
    };
    std::vector<MetapathProbs> metapaths = {{0.05, 0.005}, {0.01, 0.02}};
    std::int64_t feature_dim = 16;
    double feature_noise = 2.0;  // uniform noise amplitude
    std::uint64_t seed = 0;

    std::int64_t total_nodes() const { return nodes_per_class * classes; }

    /// Closed-form expectation of the metapath homophily ratio:
    /// E[intra edges] / (E[intra edges] + E[inter edges]).
    double expected_mhr(std::size_t metapath_index) const;

    void validate() const;
    static SyntheticSpec from_json(const std::string& text);
    std::string to_json() const;
};

HeteroGraph generate_synthetic(const SyntheticSpec& spec);

/// Generate and write the full dataset directory, including nested
/// train20/train40/train60 splits and val/test partitions.
void write_synthetic_dataset(const SyntheticSpec& spec, const std::filesystem::path& dir);

} // namespace hetrolat
