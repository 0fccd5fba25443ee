#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "hetrolat/dense.hpp"
#include "hetrolat/filters.hpp"
#include "hetrolat/graph.hpp"
#include "hetrolat/latent.hpp"
#include "hetrolat/sparse.hpp"

namespace hetrolat {

struct TrainConfig {
    std::int64_t embed_dim = 64;   // d
    int filter_order = 2;          // r
    std::int64_t k = 5;            // latent-graph neighbors
    std::int64_t k_pos = 2;        // positive samples per node
    int gamma = 1;                 // reconstruction sharpening
    double tau = 0.5;              // contrastive temperature
    double lr = 1e-3;
    double weight_decay = 0.0;
    int patience = 10;
    int max_epochs = 300;
    std::int64_t batch_size = 5120;
    std::uint64_t seed = 0;
    bool linear_encoder = false;   // drop the encoder nonlinearity (testing hook)
    bool scalable = false;
    std::int64_t anchors = 1000;   // m, scalable heterophilic candidates

    void validate() const;
    static TrainConfig from_json(const std::string& text);
    std::string to_json() const;
};

/// One hidden layer (ELU) then an affine map, d -> d.
struct ProjectionHead {
    Matrix hidden_w, hidden_b;  // d x d, 1 x d
    Matrix out_w, out_b;        // d x d, 1 x d
};

struct ParamRef {
    std::string name;
    Matrix* value;
};

/// Every trainable tensor of the model. Parameter traversal order is fixed;
/// gradients and optimizer moments are stored positionally against it.
struct ModelState {
    Matrix encoder_w, encoder_b;  // d x d_f, 1 x d
    Matrix decoder_w, decoder_b;  // d_f x 2d, 1 x d_f
    Matrix attn_low, attn_high;   // 1 x d
    ProjectionHead proj_fused, proj_homophilic, proj_heterophilic;
    bool linear_encoder = false;

    static ModelState init(std::int64_t feat_dim, std::int64_t embed_dim, bool linear_encoder,
                           std::uint64_t seed);

    std::vector<ParamRef> parameters();
    std::vector<std::pair<std::string, const Matrix*>> parameters() const;

    /// act(x * encoder_w^T + encoder_b); ELU unless linear_encoder.
    Matrix encode(const Matrix& x) const;
};

struct GradientSet {
    std::vector<Matrix> grads;  // positional, same order as parameters()
    static GradientSet zeros_like(ModelState& s);
    /// Throws naming the parameter if any entry is not finite.
    void check_finite(const ModelState& s) const;
};

struct AdamState {
    std::vector<Matrix> m, v;
    std::int64_t step = 0;
    static AdamState zeros_like(ModelState& s);
};

/// g' = g + weight_decay * theta, then the usual bias-corrected update.
void adam_step(ModelState& state, const GradientSet& grads, AdamState& adam, double lr,
               double weight_decay);

struct DualChannel {
    Matrix low;   // row-normalized smoothed representations
    Matrix high;  // row-normalized sharpened representations
};

/// Full-path dual encoding: filter the encoded features for every metapath
/// and L2-normalize each row.
std::vector<DualChannel> encode_dual(const ModelState& state,
                                     const std::vector<SparseAdjacency>& subgraphs,
                                     const Matrix& features, int r);

struct FusionResult {
    Matrix fused;    // Z, N x d
    Matrix weights;  // N x 2P softmax rows (low block then high block)
};

/// Per-node attention over the 2P channel representations.
FusionResult fuse(const ModelState& state, const std::vector<DualChannel>& channels);

/// Mean over metapaths and nodes of (1 - cos(x_i, recon_i))^gamma. Zero-norm
/// reconstruction rows contribute (1-0)^gamma and bump the warning counter.
double sce_loss(const Matrix& x, const std::vector<Matrix>& recon, int gamma,
                std::int64_t* zero_row_warnings = nullptr);

/// Z^l and Z^h: encoded features filtered through the latent graphs
/// (low-pass over the homophilic graph, high-pass over the heterophilic one).
std::pair<Matrix, Matrix> latent_representations(const ModelState& state,
                                                 const SparseAdjacency& homophilic,
                                                 const SparseAdjacency& heterophilic,
                                                 const Matrix& features, int r);

/// Symmetric InfoNCE between two already-projected matrices: the average of
/// both query/key directions over all rows, candidates = all rows. Positive
/// lists hold the extra positives per node; the node itself is always
/// counted as a positive.
double info_nce_projected(const Matrix& a_proj, const Matrix& b_proj,
                          const std::vector<std::vector<std::int64_t>>& positives, double tau);

struct LossBreakdown {
    double sce = 0.0;
    double contrastive = 0.0;
    double total = 0.0;
    std::int64_t sce_zero_rows = 0;
    std::int64_t positive_fallbacks = 0;
};

struct LossSelect {
    bool sce = true;
    bool contrastive = true;
};

/// Precomputed full-graph training operands.
struct FullGraphInputs {
    const Matrix* features = nullptr;
    std::vector<SparseAdjacency> low_filters;   // renormalized adjacency per metapath
    std::vector<SparseAdjacency> high_filters;  // renormalized Laplacian per metapath
    SparseAdjacency latent_low_filter;          // over the homophilic latent graph
    SparseAdjacency latent_high_filter;         // over the heterophilic latent graph
    const std::vector<std::vector<std::int64_t>>* positives = nullptr;
    int r = 2;
    int gamma = 1;
    double tau = 0.5;

    static FullGraphInputs build(const HeteroGraph& g, const LatentGraphPair& latent,
                                 const TrainConfig& cfg);
};

/// Forward (and optionally backward) pass of the full-graph objective.
/// Gradients, when requested, are exact.
LossBreakdown full_loss(const ModelState& state, const FullGraphInputs& in, const LossSelect& sel,
                        GradientSet* grads);

/// Pre-filtered operands for mini-batch training.
struct ScalableInputs {
    const Matrix* features = nullptr;            // SCE targets
    std::vector<Matrix> pre_low, pre_high;       // per metapath, N x d_f
    Matrix latent_pre_low, latent_pre_high;      // filtered through latent graphs
    const std::vector<std::vector<std::int64_t>>* positives = nullptr;
    int gamma = 1;
    double tau = 0.5;

    static ScalableInputs build(const HeteroGraph& g, const LatentGraphPair& latent,
                                const FilteredFeatures& filtered, const TrainConfig& cfg);
};

/// Same objective restricted to one batch; contrastive candidates are the
/// batch itself and positives are intersected with it (self always kept).
LossBreakdown batch_loss(const ModelState& state, const ScalableInputs& in,
                         const std::vector<std::int64_t>& batch, const LossSelect& sel,
                         GradientSet* grads);

struct EpochStats {
    int epoch = 0;
    double sce = 0.0;
    double contrastive = 0.0;
    double total = 0.0;
    double elapsed_ms = 0.0;
};

struct TrainResult {
    ModelState state;
    Matrix embeddings;  // final Z, N x d
    std::vector<EpochStats> history;
    bool diverged = false;
    std::int64_t positive_fallbacks = 0;
    std::int64_t sce_zero_rows = 0;
};

/// Full-graph training loop: dual encode, reconstruct, fuse, latent
/// contrast, Adam; early stop when the total loss fails to decrease for
/// `patience` consecutive epochs. On divergence the last finite-loss
/// parameters are returned with `diverged` set.
TrainResult train_full(const HeteroGraph& g, const LatentGraphPair& latent,
                       const TrainConfig& cfg, std::ostream* log = nullptr);

/// Mini-batch training over pre-filtered features; per-epoch cost is linear
/// in the number of nodes.
TrainResult train_scalable(const HeteroGraph& g, const LatentGraphPair& latent,
                           const FilteredFeatures& filtered, const TrainConfig& cfg,
                           std::ostream* log = nullptr);

/// Deliverable representations for the current parameters (no loss machinery).
Matrix embed_full(const ModelState& state, const FullGraphInputs& in);
Matrix embed_scalable(const ModelState& state, const ScalableInputs& in);

/// Embeddings file: rows u32, cols u32, then row-major little-endian f64.
void save_embeddings(const Matrix& m, const std::filesystem::path& path);
Matrix load_embeddings(const std::filesystem::path& path);

/// Model checkpoint: named parameter tensors plus the encoder-linearity flag.
void save_model(const ModelState& state, const std::filesystem::path& path);
ModelState load_model(const std::filesystem::path& path);

} // namespace hetrolat
