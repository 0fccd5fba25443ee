#include "hetrolat/model.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>
#include <stdexcept>

#include <json.hpp>

#include "hetrolat/rng.hpp"

namespace hetrolat {

namespace {

double elu(double x) { return x > 0.0 ? x : std::expm1(x); }
double elu_grad(double pre) { return pre > 0.0 ? 1.0 : std::exp(pre); }

Matrix apply_elu(const Matrix& m) {
    Matrix out = m;
    for (double& v : out.data) v = elu(v);
    return out;
}

// y = x * w^T + b (b broadcast over rows)
Matrix affine(const Matrix& x, const Matrix& w, const Matrix& b) {
    Matrix y = matmul_bt(x, w);
    for (std::int64_t i = 0; i < y.rows; ++i)
        for (std::int64_t j = 0; j < y.cols; ++j) y(i, j) += b(0, j);
    return y;
}

// out = a^T * b
Matrix matmul_at(const Matrix& a, const Matrix& b) {
    if (a.rows != b.rows) throw std::invalid_argument("matmul_at: row mismatch");
    Matrix out(a.cols, b.cols);
    for (std::int64_t i = 0; i < a.rows; ++i)
        for (std::int64_t k = 0; k < a.cols; ++k) {
            double v = a(i, k);
            if (v == 0.0) continue;
            for (std::int64_t j = 0; j < b.cols; ++j) out(k, j) += v * b(i, j);
        }
    return out;
}

Matrix colsum(const Matrix& m) {
    Matrix out(1, m.cols);
    for (std::int64_t i = 0; i < m.rows; ++i)
        for (std::int64_t j = 0; j < m.cols; ++j) out(0, j) += m(i, j);
    return out;
}

// dX for y = x*w^T + b given dY, accumulating parameter grads
void affine_backward(const Matrix& x, const Matrix& w, const Matrix& dy, Matrix& dw, Matrix& db,
                     Matrix* dx) {
    Matrix gw = matmul_at(dy, x);
    for (std::size_t t = 0; t < gw.data.size(); ++t) dw.data[t] += gw.data[t];
    Matrix gb = colsum(dy);
    for (std::size_t t = 0; t < gb.data.size(); ++t) db.data[t] += gb.data[t];
    if (dx) {
        Matrix g = matmul(dy, w);
        for (std::size_t t = 0; t < g.data.size(); ++t) dx->data[t] += g.data[t];
    }
}

struct NormalizedRows {
    Matrix normed;
    std::vector<double> norms;
};

// Rows with exactly zero norm stay zero (structurally isolated channels,
// e.g. the Laplacian row of a node with no metapath neighbors); everything
// else is scaled to unit norm.
NormalizedRows normalize_rows(const Matrix& m, const char* what) {
    NormalizedRows out;
    out.normed = m;
    out.norms.resize(m.rows);
    for (std::int64_t i = 0; i < m.rows; ++i) {
        double nrm = norm2(m.row(i));
        if (!std::isfinite(nrm))
            throw std::runtime_error(std::string("non-finite row norm in ") + what + " at row " +
                                     std::to_string(i));
        out.norms[i] = nrm;
        if (nrm == 0.0) continue;
        for (std::int64_t j = 0; j < m.cols; ++j) out.normed(i, j) /= nrm;
    }
    return out;
}

// dx += (dy - (y . dy) y) / |x|, given normalized y and norms; zero rows
// are constants and get no gradient
void normalize_rows_backward(const NormalizedRows& nr, const Matrix& dy, Matrix& dx) {
    for (std::int64_t i = 0; i < dy.rows; ++i) {
        if (nr.norms[i] == 0.0) continue;
        double proj = dot(nr.normed.row(i), dy.row(i));
        double inv = 1.0 / nr.norms[i];
        for (std::int64_t j = 0; j < dy.cols; ++j)
            dx(i, j) += (dy(i, j) - proj * nr.normed(i, j)) * inv;
    }
}

Matrix gather_rows(const Matrix& src, const std::vector<std::int64_t>& ids) {
    Matrix out(static_cast<std::int64_t>(ids.size()), src.cols);
    for (std::size_t i = 0; i < ids.size(); ++i) {
        auto r = src.row(ids[i]);
        std::copy(r.begin(), r.end(), out.row(static_cast<std::int64_t>(i)).begin());
    }
    return out;
}

Matrix repeated_spmm(const SparseAdjacency& a, const Matrix& h, int r) {
    Matrix out = h;
    for (int t = 0; t < r; ++t) out = spmm(a, out);
    return out;
}

// ---------------------------------------------------------------------------
// InfoNCE: one query direction. Positive lists exclude the node itself; the
// self pair is always counted as a positive.
// ---------------------------------------------------------------------------

double nce_direction(const Matrix& queries, const Matrix& keys,
                     const std::vector<std::vector<std::int64_t>>& positives, double tau,
                     double weight, Matrix* dq, Matrix* dk) {
    const std::int64_t n = queries.rows;
    double loss = 0.0;
    std::vector<double> logits(n);
    std::vector<char> is_pos(n);
    for (std::int64_t i = 0; i < n; ++i) {
        auto qi = queries.row(i);
        double mx = -std::numeric_limits<double>::infinity();
        for (std::int64_t k = 0; k < n; ++k) {
            logits[k] = dot(qi, keys.row(k)) / tau;
            mx = std::max(mx, logits[k]);
        }
        std::fill(is_pos.begin(), is_pos.end(), 0);
        is_pos[i] = 1;
        for (std::int64_t j : positives[i]) is_pos[j] = 1;
        double den = 0.0, num = 0.0;
        for (std::int64_t k = 0; k < n; ++k) {
            double e = std::exp(logits[k] - mx);
            den += e;
            if (is_pos[k]) num += e;
        }
        loss += weight * (std::log(den) - std::log(num));
        if (dq && dk) {
            for (std::int64_t k = 0; k < n; ++k) {
                double e = std::exp(logits[k] - mx);
                double dl = weight * (e / den - (is_pos[k] ? e / num : 0.0)) / tau;
                if (dl == 0.0) continue;
                auto kr = keys.row(k);
                for (std::int64_t c = 0; c < queries.cols; ++c) {
                    (*dq)(i, c) += dl * kr[c];
                    (*dk)(k, c) += dl * qi[c];
                }
            }
        }
    }
    return loss;
}

// both directions, averaged with the 1/(2n) convention
double nce_symmetric(const Matrix& a, const Matrix& b,
                     const std::vector<std::vector<std::int64_t>>& positives, double tau,
                     Matrix* da, Matrix* db) {
    double w = 1.0 / (2.0 * static_cast<double>(a.rows));
    double loss = 0.0;
    loss += nce_direction(a, b, positives, tau, w, da, db);
    loss += nce_direction(b, a, positives, tau, w, db, da);
    return loss;
}

// ---------------------------------------------------------------------------
// Shared head: streams -> SCE + fusion + projections + contrastive loss.
// Drivers supply the pre-normalization stream matrices and the latent
// representations, and consume the gradients w.r.t. them.
// ---------------------------------------------------------------------------

struct ProjCache {
    Matrix input_ref;  // copy of the projected input (for backward)
    Matrix hidden_pre, hidden, out;
    NormalizedRows out_norm;
};

ProjCache project(const ProjectionHead& head, const Matrix& in, const char* what) {
    ProjCache c;
    c.input_ref = in;
    c.hidden_pre = affine(in, head.hidden_w, head.hidden_b);
    c.hidden = apply_elu(c.hidden_pre);
    c.out = affine(c.hidden, head.out_w, head.out_b);
    c.out_norm = normalize_rows(c.out, what);
    return c;
}

// returns gradient w.r.t. the projection input
Matrix project_backward(const ProjectionHead& head, const ProjCache& c, const Matrix& d_out_norm,
                        Matrix& d_hidden_w, Matrix& d_hidden_b, Matrix& d_out_w, Matrix& d_out_b) {
    Matrix d_out(c.out.rows, c.out.cols);
    normalize_rows_backward(c.out_norm, d_out_norm, d_out);
    Matrix d_hidden(c.hidden.rows, c.hidden.cols);
    affine_backward(c.hidden, head.out_w, d_out, d_out_w, d_out_b, &d_hidden);
    for (std::size_t t = 0; t < d_hidden.data.size(); ++t)
        d_hidden.data[t] *= elu_grad(c.hidden_pre.data[t]);
    Matrix d_in(c.input_ref.rows, c.input_ref.cols);
    affine_backward(c.input_ref, head.hidden_w, d_hidden, d_hidden_w, d_hidden_b, &d_in);
    return d_in;
}

struct HeadCache {
    std::vector<NormalizedRows> streams;  // 2P: low block then high block
    // reconstruction
    std::vector<Matrix> recon_pre, recon;
    std::vector<std::vector<double>> recon_cos;
    // fusion
    Matrix fuse_pre, fuse_scores, fuse_weights, fused;
    // projections
    ProjCache proj_fused, proj_homophilic, proj_heterophilic;
    LossBreakdown loss;
};

struct HeadGrads {
    std::vector<Matrix> d_streams;  // w.r.t. pre-normalization stream matrices
    Matrix d_latent_low, d_latent_high;
};

Matrix concat_cols(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows, a.cols + b.cols);
    for (std::int64_t i = 0; i < a.rows; ++i) {
        auto r = out.row(i);
        std::copy(a.row(i).begin(), a.row(i).end(), r.begin());
        std::copy(b.row(i).begin(), b.row(i).end(), r.begin() + a.cols);
    }
    return out;
}

FusionResult fuse_streams(const ModelState& state, const std::vector<NormalizedRows>& streams,
                          Matrix* fuse_pre_out, Matrix* fuse_scores_out) {
    const std::int64_t s_count = static_cast<std::int64_t>(streams.size());
    const std::int64_t p_count = s_count / 2;
    const std::int64_t n = streams.front().normed.rows;
    const std::int64_t d = streams.front().normed.cols;
    Matrix pre(n, s_count), scores(n, s_count), weights(n, s_count);
    for (std::int64_t s = 0; s < s_count; ++s) {
        const Matrix& attn = s < p_count ? state.attn_low : state.attn_high;
        const Matrix& h = streams[s].normed;
        for (std::int64_t i = 0; i < n; ++i) {
            pre(i, s) = dot(attn.row(0), h.row(i));
            scores(i, s) = elu(pre(i, s));
        }
    }
    for (std::int64_t i = 0; i < n; ++i) {
        double mx = scores(i, 0);
        for (std::int64_t s = 1; s < s_count; ++s) mx = std::max(mx, scores(i, s));
        double den = 0.0;
        for (std::int64_t s = 0; s < s_count; ++s) den += std::exp(scores(i, s) - mx);
        for (std::int64_t s = 0; s < s_count; ++s) weights(i, s) = std::exp(scores(i, s) - mx) / den;
    }
    Matrix fused(n, d);
    for (std::int64_t s = 0; s < s_count; ++s) {
        const Matrix& h = streams[s].normed;
        for (std::int64_t i = 0; i < n; ++i) {
            double w = weights(i, s);
            for (std::int64_t j = 0; j < d; ++j) fused(i, j) += w * h(i, j);
        }
    }
    if (fuse_pre_out) *fuse_pre_out = std::move(pre);
    if (fuse_scores_out) *fuse_scores_out = std::move(scores);
    return {std::move(fused), std::move(weights)};
}

double sce_of_streams(const Matrix& x, const std::vector<NormalizedRows>& streams,
                      const ModelState& state, int gamma, HeadCache& cache) {
    const std::int64_t p_count = static_cast<std::int64_t>(streams.size()) / 2;
    const std::int64_t n = x.rows;
    double acc = 0.0;
    for (std::int64_t p = 0; p < p_count; ++p) {
        Matrix c = concat_cols(streams[p].normed, streams[p_count + p].normed);
        Matrix pre = affine(c, state.decoder_w, state.decoder_b);
        Matrix recon = apply_elu(pre);
        std::vector<double> cosines(n);
        for (std::int64_t i = 0; i < n; ++i) {
            double nr = norm2(recon.row(i));
            if (nr == 0.0) {
                cosines[i] = 0.0;
                ++cache.loss.sce_zero_rows;
            } else {
                cosines[i] = dot(x.row(i), recon.row(i)) / (norm2(x.row(i)) * nr);
            }
            acc += std::pow(1.0 - cosines[i], gamma);
        }
        cache.recon_pre.push_back(std::move(pre));
        cache.recon.push_back(std::move(recon));
        cache.recon_cos.push_back(std::move(cosines));
    }
    return acc / (static_cast<double>(n) * static_cast<double>(p_count));
}

HeadCache head_forward(const ModelState& state, const Matrix& x, std::vector<Matrix> raw_streams,
                       const Matrix& latent_low, const Matrix& latent_high,
                       const std::vector<std::vector<std::int64_t>>& positives, double tau,
                       int gamma, const LossSelect& sel) {
    HeadCache cache;
    cache.streams.reserve(raw_streams.size());
    for (std::size_t s = 0; s < raw_streams.size(); ++s)
        cache.streams.push_back(normalize_rows(raw_streams[s], "filtered representations"));

    if (sel.sce) cache.loss.sce = sce_of_streams(x, cache.streams, state, gamma, cache);

    if (sel.contrastive) {
        FusionResult fr =
            fuse_streams(state, cache.streams, &cache.fuse_pre, &cache.fuse_scores);
        cache.fuse_weights = std::move(fr.weights);
        cache.fused = std::move(fr.fused);
        cache.proj_fused = project(state.proj_fused, cache.fused, "fused projection");
        cache.proj_homophilic = project(state.proj_homophilic, latent_low, "homophilic projection");
        cache.proj_heterophilic =
            project(state.proj_heterophilic, latent_high, "heterophilic projection");
        cache.loss.contrastive =
            nce_symmetric(cache.proj_fused.out_norm.normed, cache.proj_homophilic.out_norm.normed,
                          positives, tau, nullptr, nullptr) +
            nce_symmetric(cache.proj_fused.out_norm.normed, cache.proj_heterophilic.out_norm.normed,
                          positives, tau, nullptr, nullptr);
    }
    cache.loss.total = cache.loss.sce + cache.loss.contrastive;
    return cache;
}

struct HeadParamGrads {
    Matrix* decoder_w;
    Matrix* decoder_b;
    Matrix* attn_low;
    Matrix* attn_high;
    Matrix* pf_hw;
    Matrix* pf_hb;
    Matrix* pf_ow;
    Matrix* pf_ob;
    Matrix* pl_hw;
    Matrix* pl_hb;
    Matrix* pl_ow;
    Matrix* pl_ob;
    Matrix* ph_hw;
    Matrix* ph_hb;
    Matrix* ph_ow;
    Matrix* ph_ob;
};

HeadGrads head_backward(const ModelState& state, const Matrix& x,
                        const std::vector<std::vector<std::int64_t>>& positives, double tau,
                        int gamma, const LossSelect& sel, const HeadCache& cache,
                        const HeadParamGrads& pg) {
    const std::int64_t s_count = static_cast<std::int64_t>(cache.streams.size());
    const std::int64_t p_count = s_count / 2;
    const std::int64_t n = x.rows;
    const std::int64_t d = cache.streams.front().normed.cols;

    std::vector<Matrix> d_norm(s_count);
    for (std::int64_t s = 0; s < s_count; ++s) d_norm[s] = Matrix(n, d);

    HeadGrads out;
    out.d_latent_low = Matrix(n, d);
    out.d_latent_high = Matrix(n, d);

    if (sel.contrastive) {
        Matrix d_pf(n, d), d_pl(n, d), d_ph(n, d);
        nce_symmetric(cache.proj_fused.out_norm.normed, cache.proj_homophilic.out_norm.normed,
                      positives, tau, &d_pf, &d_pl);
        nce_symmetric(cache.proj_fused.out_norm.normed, cache.proj_heterophilic.out_norm.normed,
                      positives, tau, &d_pf, &d_ph);

        Matrix d_fused = project_backward(state.proj_fused, cache.proj_fused, d_pf, *pg.pf_hw,
                                          *pg.pf_hb, *pg.pf_ow, *pg.pf_ob);
        out.d_latent_low = project_backward(state.proj_homophilic, cache.proj_homophilic, d_pl,
                                            *pg.pl_hw, *pg.pl_hb, *pg.pl_ow, *pg.pl_ob);
        out.d_latent_high = project_backward(state.proj_heterophilic, cache.proj_heterophilic, d_ph,
                                             *pg.ph_hw, *pg.ph_hb, *pg.ph_ow, *pg.ph_ob);

        // fusion backward: Z_i = sum_s w_is * h_is
        Matrix d_weights(n, s_count);
        for (std::int64_t s = 0; s < s_count; ++s) {
            const Matrix& h = cache.streams[s].normed;
            for (std::int64_t i = 0; i < n; ++i) {
                double w = cache.fuse_weights(i, s);
                double dw = 0.0;
                for (std::int64_t j = 0; j < d; ++j) {
                    dw += d_fused(i, j) * h(i, j);
                    d_norm[s](i, j) += w * d_fused(i, j);
                }
                d_weights(i, s) = dw;
            }
        }
        // softmax rows
        Matrix d_scores(n, s_count);
        for (std::int64_t i = 0; i < n; ++i) {
            double inner = 0.0;
            for (std::int64_t s = 0; s < s_count; ++s)
                inner += cache.fuse_weights(i, s) * d_weights(i, s);
            for (std::int64_t s = 0; s < s_count; ++s)
                d_scores(i, s) = cache.fuse_weights(i, s) * (d_weights(i, s) - inner);
        }
        // ELU on the attention scores, then the attention vectors themselves
        for (std::int64_t s = 0; s < s_count; ++s) {
            const Matrix& attn = s < p_count ? state.attn_low : state.attn_high;
            Matrix& d_attn = s < p_count ? *pg.attn_low : *pg.attn_high;
            const Matrix& h = cache.streams[s].normed;
            for (std::int64_t i = 0; i < n; ++i) {
                double d_pre = d_scores(i, s) * elu_grad(cache.fuse_pre(i, s));
                if (d_pre == 0.0) continue;
                for (std::int64_t j = 0; j < d; ++j) {
                    d_attn(0, j) += d_pre * h(i, j);
                    d_norm[s](i, j) += d_pre * attn(0, j);
                }
            }
        }
    }

    if (sel.sce) {
        double scale = 1.0 / (static_cast<double>(n) * static_cast<double>(p_count));
        for (std::int64_t p = 0; p < p_count; ++p) {
            const Matrix& recon = cache.recon[p];
            Matrix d_recon(n, x.cols);
            for (std::int64_t i = 0; i < n; ++i) {
                double c = cache.recon_cos[p][i];
                double nr = norm2(recon.row(i));
                if (nr == 0.0) continue;  // flat contribution, zero gradient
                double dc = -static_cast<double>(gamma) * std::pow(1.0 - c, gamma - 1) * scale;
                double nx = norm2(x.row(i));
                for (std::int64_t j = 0; j < x.cols; ++j)
                    d_recon(i, j) = dc * (x(i, j) / (nx * nr) - c * recon(i, j) / (nr * nr));
            }
            for (std::size_t t = 0; t < d_recon.data.size(); ++t)
                d_recon.data[t] *= elu_grad(cache.recon_pre[p].data[t]);
            Matrix c_in = concat_cols(cache.streams[p].normed, cache.streams[p_count + p].normed);
            Matrix d_c(n, 2 * d);
            affine_backward(c_in, state.decoder_w, d_recon, *pg.decoder_w, *pg.decoder_b, &d_c);
            for (std::int64_t i = 0; i < n; ++i) {
                for (std::int64_t j = 0; j < d; ++j) {
                    d_norm[p](i, j) += d_c(i, j);
                    d_norm[p_count + p](i, j) += d_c(i, j + d);
                }
            }
        }
    }

    out.d_streams.resize(s_count);
    for (std::int64_t s = 0; s < s_count; ++s) {
        out.d_streams[s] = Matrix(n, d);
        normalize_rows_backward(cache.streams[s], d_norm[s], out.d_streams[s]);
    }
    return out;
}

HeadParamGrads head_param_grads(GradientSet& g) {
    // positions follow ModelState::parameters()
    return HeadParamGrads{&g.grads[2],  &g.grads[3],  &g.grads[4],  &g.grads[5],
                          &g.grads[6],  &g.grads[7],  &g.grads[8],  &g.grads[9],
                          &g.grads[10], &g.grads[11], &g.grads[12], &g.grads[13],
                          &g.grads[14], &g.grads[15], &g.grads[16], &g.grads[17]};
}

std::vector<std::vector<std::int64_t>> localize_positives(
    const std::vector<std::vector<std::int64_t>>& global,
    const std::vector<std::int64_t>& batch, std::int64_t* fallbacks) {
    std::vector<std::int64_t> local_of;
    std::int64_t n_total = 0;
    for (std::int64_t id : batch) n_total = std::max(n_total, id + 1);
    local_of.assign(n_total, -1);
    for (std::size_t i = 0; i < batch.size(); ++i) local_of[batch[i]] = static_cast<std::int64_t>(i);
    std::vector<std::vector<std::int64_t>> out(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const auto& pos = global[batch[i]];
        for (std::int64_t j : pos) {
            if (j < n_total && local_of[j] >= 0) out[i].push_back(local_of[j]);
        }
        if (!pos.empty() && out[i].empty() && fallbacks) ++(*fallbacks);
    }
    return out;
}

} // namespace

// ---------------------------------------------------------------------------
// TrainConfig
// ---------------------------------------------------------------------------

void TrainConfig::validate() const {
    if (embed_dim < 1) throw std::invalid_argument("config: d must be >= 1");
    if (filter_order < 0) throw std::invalid_argument("config: r must be >= 0");
    if (tau <= 0.0) throw std::invalid_argument("config: tau must be > 0");
    if (gamma < 1) throw std::invalid_argument("config: gamma must be >= 1");
    if (patience < 1) throw std::invalid_argument("config: patience must be >= 1");
    if (lr <= 0.0) throw std::invalid_argument("config: lr must be > 0");
    if (weight_decay < 0.0) throw std::invalid_argument("config: weight_decay must be >= 0");
    if (k < 1) throw std::invalid_argument("config: K must be >= 1");
    if (k_pos < 0) throw std::invalid_argument("config: k_pos must be >= 0");
    if (max_epochs < 0) throw std::invalid_argument("config: max_epochs must be >= 0");
    if (anchors < 1) throw std::invalid_argument("config: anchors must be >= 1");
}

TrainConfig TrainConfig::from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    TrainConfig c;
    for (auto it = j.begin(); it != j.end(); ++it) {
        const std::string& key = it.key();
        if (key == "d") c.embed_dim = it->get<std::int64_t>();
        else if (key == "r") c.filter_order = it->get<int>();
        else if (key == "K") c.k = it->get<std::int64_t>();
        else if (key == "k_pos") c.k_pos = it->get<std::int64_t>();
        else if (key == "gamma") c.gamma = it->get<int>();
        else if (key == "tau") c.tau = it->get<double>();
        else if (key == "lr") c.lr = it->get<double>();
        else if (key == "weight_decay") c.weight_decay = it->get<double>();
        else if (key == "patience") c.patience = it->get<int>();
        else if (key == "max_epochs") c.max_epochs = it->get<int>();
        else if (key == "batch_size") c.batch_size = it->get<std::int64_t>();
        else if (key == "seed") c.seed = it->get<std::uint64_t>();
        else if (key == "linear_encoder") c.linear_encoder = it->get<bool>();
        else if (key == "scalable") c.scalable = it->get<bool>();
        else if (key == "anchors") c.anchors = it->get<std::int64_t>();
        else throw std::invalid_argument("config: unknown key '" + key + "'");
    }
    c.validate();
    return c;
}

std::string TrainConfig::to_json() const {
    nlohmann::json j;
    j["d"] = embed_dim;
    j["r"] = filter_order;
    j["K"] = k;
    j["k_pos"] = k_pos;
    j["gamma"] = gamma;
    j["tau"] = tau;
    j["lr"] = lr;
    j["weight_decay"] = weight_decay;
    j["patience"] = patience;
    j["max_epochs"] = max_epochs;
    j["batch_size"] = batch_size;
    j["seed"] = seed;
    j["linear_encoder"] = linear_encoder;
    j["scalable"] = scalable;
    j["anchors"] = anchors;
    return j.dump();
}

// ---------------------------------------------------------------------------
// ModelState / optimizer
// ---------------------------------------------------------------------------

namespace {

void kaiming_fill(Matrix& w, Rng& rng) {
    double bound = std::sqrt(6.0 / static_cast<double>(w.cols));
    for (double& v : w.data) v = rng.uniform(-bound, bound);
}

ProjectionHead init_head(std::int64_t d, Rng& rng) {
    ProjectionHead h;
    h.hidden_w = Matrix(d, d);
    h.hidden_b = Matrix(1, d);
    h.out_w = Matrix(d, d);
    h.out_b = Matrix(1, d);
    kaiming_fill(h.hidden_w, rng);
    kaiming_fill(h.out_w, rng);
    return h;
}

} // namespace

ModelState ModelState::init(std::int64_t feat_dim, std::int64_t embed_dim, bool linear_encoder,
                            std::uint64_t seed) {
    Rng rng(seed * 0x9e3779b97f4a7c15ULL + 1);
    ModelState s;
    s.linear_encoder = linear_encoder;
    s.encoder_w = Matrix(embed_dim, feat_dim);
    s.encoder_b = Matrix(1, embed_dim);
    s.decoder_w = Matrix(feat_dim, 2 * embed_dim);
    s.decoder_b = Matrix(1, feat_dim);
    s.attn_low = Matrix(1, embed_dim);
    s.attn_high = Matrix(1, embed_dim);
    kaiming_fill(s.encoder_w, rng);
    kaiming_fill(s.decoder_w, rng);
    kaiming_fill(s.attn_low, rng);
    kaiming_fill(s.attn_high, rng);
    s.proj_fused = init_head(embed_dim, rng);
    s.proj_homophilic = init_head(embed_dim, rng);
    s.proj_heterophilic = init_head(embed_dim, rng);
    return s;
}

std::vector<ParamRef> ModelState::parameters() {
    std::vector<ParamRef> out;
    auto head = [&](const std::string& prefix, ProjectionHead& h) {
        out.push_back({prefix + ".hidden_w", &h.hidden_w});
        out.push_back({prefix + ".hidden_b", &h.hidden_b});
        out.push_back({prefix + ".out_w", &h.out_w});
        out.push_back({prefix + ".out_b", &h.out_b});
    };
    out.push_back({"encoder_w", &encoder_w});
    out.push_back({"encoder_b", &encoder_b});
    out.push_back({"decoder_w", &decoder_w});
    out.push_back({"decoder_b", &decoder_b});
    out.push_back({"attn_low", &attn_low});
    out.push_back({"attn_high", &attn_high});
    head("proj_fused", proj_fused);
    head("proj_homophilic", proj_homophilic);
    head("proj_heterophilic", proj_heterophilic);
    return out;
}

std::vector<std::pair<std::string, const Matrix*>> ModelState::parameters() const {
    auto mutable_refs = const_cast<ModelState*>(this)->parameters();
    std::vector<std::pair<std::string, const Matrix*>> out;
    out.reserve(mutable_refs.size());
    for (auto& p : mutable_refs) out.emplace_back(p.name, p.value);
    return out;
}

Matrix ModelState::encode(const Matrix& x) const {
    Matrix pre = affine(x, encoder_w, encoder_b);
    return linear_encoder ? pre : apply_elu(pre);
}

GradientSet GradientSet::zeros_like(ModelState& s) {
    GradientSet g;
    for (auto& p : s.parameters()) g.grads.emplace_back(p.value->rows, p.value->cols);
    return g;
}

void GradientSet::check_finite(const ModelState& s) const {
    auto params = s.parameters();
    for (std::size_t i = 0; i < grads.size(); ++i)
        for (double v : grads[i].data)
            if (!std::isfinite(v))
                throw std::runtime_error("non-finite gradient in parameter " + params[i].first);
}

AdamState AdamState::zeros_like(ModelState& s) {
    AdamState a;
    for (auto& p : s.parameters()) {
        a.m.emplace_back(p.value->rows, p.value->cols);
        a.v.emplace_back(p.value->rows, p.value->cols);
    }
    return a;
}

void adam_step(ModelState& state, const GradientSet& grads, AdamState& adam, double lr,
               double weight_decay) {
    constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    ++adam.step;
    double bc1 = 1.0 - std::pow(beta1, static_cast<double>(adam.step));
    double bc2 = 1.0 - std::pow(beta2, static_cast<double>(adam.step));
    auto params = state.parameters();
    for (std::size_t i = 0; i < params.size(); ++i) {
        Matrix& theta = *params[i].value;
        const Matrix& g = grads.grads[i];
        Matrix& m = adam.m[i];
        Matrix& v = adam.v[i];
        for (std::size_t t = 0; t < theta.data.size(); ++t) {
            double gt = g.data[t] + weight_decay * theta.data[t];
            m.data[t] = beta1 * m.data[t] + (1.0 - beta1) * gt;
            v.data[t] = beta2 * v.data[t] + (1.0 - beta2) * gt * gt;
            theta.data[t] -= lr * (m.data[t] / bc1) / (std::sqrt(v.data[t] / bc2) + eps);
        }
    }
}

// ---------------------------------------------------------------------------
// Public forward pieces
// ---------------------------------------------------------------------------

std::vector<DualChannel> encode_dual(const ModelState& state,
                                     const std::vector<SparseAdjacency>& subgraphs,
                                     const Matrix& features, int r) {
    Matrix encoded = state.encode(features);
    check_finite(encoded, "encoded features");
    std::vector<DualChannel> out;
    out.reserve(subgraphs.size());
    for (const auto& a : subgraphs) {
        Matrix low = repeated_spmm(renormalized_adjacency(a), encoded, r);
        Matrix high = repeated_spmm(renormalized_laplacian(a), encoded, r);
        DualChannel ch;
        ch.low = normalize_rows(low, "low-pass representations").normed;
        ch.high = normalize_rows(high, "high-pass representations").normed;
        out.push_back(std::move(ch));
    }
    return out;
}

FusionResult fuse(const ModelState& state, const std::vector<DualChannel>& channels) {
    std::vector<NormalizedRows> streams(2 * channels.size());
    for (std::size_t p = 0; p < channels.size(); ++p) {
        streams[p].normed = channels[p].low;
        streams[p].norms.assign(channels[p].low.rows, 1.0);
        streams[channels.size() + p].normed = channels[p].high;
        streams[channels.size() + p].norms.assign(channels[p].high.rows, 1.0);
    }
    return fuse_streams(state, streams, nullptr, nullptr);
}

double sce_loss(const Matrix& x, const std::vector<Matrix>& recon, int gamma,
                std::int64_t* zero_row_warnings) {
    if (recon.empty()) throw std::invalid_argument("sce_loss: no reconstructions");
    double acc = 0.0;
    std::int64_t zero_rows = 0;
    for (const auto& r : recon) {
        if (!r.same_shape(x)) throw std::invalid_argument("sce_loss: shape mismatch");
        for (std::int64_t i = 0; i < x.rows; ++i) {
            double nr = norm2(r.row(i));
            double c;
            if (nr == 0.0) {
                c = 0.0;
                ++zero_rows;
            } else {
                c = dot(x.row(i), r.row(i)) / (norm2(x.row(i)) * nr);
            }
            acc += std::pow(1.0 - c, gamma);
        }
    }
    if (zero_row_warnings) *zero_row_warnings += zero_rows;
    return acc / (static_cast<double>(x.rows) * static_cast<double>(recon.size()));
}

std::pair<Matrix, Matrix> latent_representations(const ModelState& state,
                                                 const SparseAdjacency& homophilic,
                                                 const SparseAdjacency& heterophilic,
                                                 const Matrix& features, int r) {
    Matrix encoded = state.encode(features);
    Matrix zl = repeated_spmm(renormalized_adjacency(homophilic), encoded, r);
    Matrix zh = repeated_spmm(renormalized_laplacian(heterophilic), encoded, r);
    check_finite(zl, "homophilic latent representations");
    check_finite(zh, "heterophilic latent representations");
    return {std::move(zl), std::move(zh)};
}

double info_nce_projected(const Matrix& a_proj, const Matrix& b_proj,
                          const std::vector<std::vector<std::int64_t>>& positives, double tau) {
    if (tau <= 0.0) throw std::invalid_argument("info_nce: tau must be > 0");
    NormalizedRows a = normalize_rows(a_proj, "contrastive projections");
    NormalizedRows b = normalize_rows(b_proj, "contrastive projections");
    return nce_symmetric(a.normed, b.normed, positives, tau, nullptr, nullptr);
}

// ---------------------------------------------------------------------------
// Full-graph objective
// ---------------------------------------------------------------------------

FullGraphInputs FullGraphInputs::build(const HeteroGraph& g, const LatentGraphPair& latent,
                                       const TrainConfig& cfg) {
    FullGraphInputs in;
    in.features = &g.features;
    for (const auto& mp : g.metapaths) {
        const SparseAdjacency& a = g.metapath_adjacency_cached(mp);
        in.low_filters.push_back(renormalized_adjacency(a));
        in.high_filters.push_back(renormalized_laplacian(a));
    }
    if (in.low_filters.empty()) throw std::runtime_error("training requires at least one metapath");
    in.latent_low_filter = renormalized_adjacency(latent.homophilic);
    in.latent_high_filter = renormalized_laplacian(latent.heterophilic);
    in.positives = &latent.positives;
    in.r = cfg.filter_order;
    in.gamma = cfg.gamma;
    in.tau = cfg.tau;
    return in;
}

LossBreakdown full_loss(const ModelState& state, const FullGraphInputs& in, const LossSelect& sel,
                        GradientSet* grads) {
    const Matrix& x = *in.features;
    const std::size_t p_count = in.low_filters.size();

    Matrix enc_pre = affine(x, state.encoder_w, state.encoder_b);
    Matrix encoded = state.linear_encoder ? enc_pre : apply_elu(enc_pre);

    std::vector<Matrix> raw(2 * p_count);
    for (std::size_t p = 0; p < p_count; ++p) {
        raw[p] = repeated_spmm(in.low_filters[p], encoded, in.r);
        raw[p_count + p] = repeated_spmm(in.high_filters[p], encoded, in.r);
    }
    Matrix latent_low = repeated_spmm(in.latent_low_filter, encoded, in.r);
    Matrix latent_high = repeated_spmm(in.latent_high_filter, encoded, in.r);

    HeadCache cache = head_forward(state, x, std::move(raw), latent_low, latent_high,
                                   *in.positives, in.tau, in.gamma, sel);
    if (!grads) return cache.loss;

    HeadParamGrads pg = head_param_grads(*grads);
    HeadGrads hg = head_backward(state, x, *in.positives, in.tau, in.gamma, sel, cache, pg);

    Matrix d_encoded(encoded.rows, encoded.cols);
    auto accumulate = [&](const SparseAdjacency& filt, const Matrix& dy) {
        Matrix back = repeated_spmm(filt, dy, in.r);  // filters are symmetric
        for (std::size_t t = 0; t < back.data.size(); ++t) d_encoded.data[t] += back.data[t];
    };
    for (std::size_t p = 0; p < p_count; ++p) {
        accumulate(in.low_filters[p], hg.d_streams[p]);
        accumulate(in.high_filters[p], hg.d_streams[p_count + p]);
    }
    if (sel.contrastive) {
        accumulate(in.latent_low_filter, hg.d_latent_low);
        accumulate(in.latent_high_filter, hg.d_latent_high);
    }
    if (!state.linear_encoder)
        for (std::size_t t = 0; t < d_encoded.data.size(); ++t)
            d_encoded.data[t] *= elu_grad(enc_pre.data[t]);
    affine_backward(x, state.encoder_w, d_encoded, grads->grads[0], grads->grads[1], nullptr);
    return cache.loss;
}

Matrix embed_full(const ModelState& state, const FullGraphInputs& in) {
    Matrix encoded = state.encode(*in.features);
    std::vector<NormalizedRows> streams(2 * in.low_filters.size());
    for (std::size_t p = 0; p < in.low_filters.size(); ++p) {
        streams[p] =
            normalize_rows(repeated_spmm(in.low_filters[p], encoded, in.r), "low-pass stream");
        streams[in.low_filters.size() + p] =
            normalize_rows(repeated_spmm(in.high_filters[p], encoded, in.r), "high-pass stream");
    }
    return fuse_streams(state, streams, nullptr, nullptr).fused;
}

// ---------------------------------------------------------------------------
// Scalable objective
// ---------------------------------------------------------------------------

ScalableInputs ScalableInputs::build(const HeteroGraph& g, const LatentGraphPair& latent,
                                     const FilteredFeatures& filtered, const TrainConfig& cfg) {
    if (filtered.r != cfg.filter_order)
        throw std::runtime_error("pre-filtered features use r=" + std::to_string(filtered.r) +
                                 " but the configuration wants r=" +
                                 std::to_string(cfg.filter_order));
    if (filtered.metapath_names.size() != g.metapaths.size())
        throw std::runtime_error("pre-filtered features do not match the dataset metapaths");
    for (std::size_t p = 0; p < g.metapaths.size(); ++p)
        if (filtered.metapath_names[p] != g.metapaths[p].name)
            throw std::runtime_error("pre-filtered metapath order mismatch");
    ScalableInputs in;
    in.features = &g.features;
    in.pre_low = filtered.low;
    in.pre_high = filtered.high;
    in.latent_pre_low = low_pass(latent.homophilic, g.features, cfg.filter_order);
    in.latent_pre_high = high_pass(latent.heterophilic, g.features, cfg.filter_order);
    in.positives = &latent.positives;
    in.gamma = cfg.gamma;
    in.tau = cfg.tau;
    return in;
}

LossBreakdown batch_loss(const ModelState& state, const ScalableInputs& in,
                         const std::vector<std::int64_t>& batch, const LossSelect& sel,
                         GradientSet* grads) {
    const std::size_t p_count = in.pre_low.size();
    Matrix xb = gather_rows(*in.features, batch);

    std::vector<Matrix> stream_in(2 * p_count + 2);
    for (std::size_t p = 0; p < p_count; ++p) {
        stream_in[p] = gather_rows(in.pre_low[p], batch);
        stream_in[p_count + p] = gather_rows(in.pre_high[p], batch);
    }
    stream_in[2 * p_count] = gather_rows(in.latent_pre_low, batch);
    stream_in[2 * p_count + 1] = gather_rows(in.latent_pre_high, batch);

    std::vector<Matrix> pre(2 * p_count + 2), act(2 * p_count + 2);
    for (std::size_t s = 0; s < stream_in.size(); ++s) {
        pre[s] = affine(stream_in[s], state.encoder_w, state.encoder_b);
        act[s] = state.linear_encoder ? pre[s] : apply_elu(pre[s]);
    }

    LossBreakdown lb;
    std::vector<std::vector<std::int64_t>> local_pos =
        localize_positives(*in.positives, batch, &lb.positive_fallbacks);

    std::vector<Matrix> raw(act.begin(), act.begin() + 2 * p_count);
    HeadCache cache = head_forward(state, xb, std::move(raw), act[2 * p_count],
                                   act[2 * p_count + 1], local_pos, in.tau, in.gamma, sel);
    cache.loss.positive_fallbacks = lb.positive_fallbacks;
    if (!grads) return cache.loss;

    HeadParamGrads pg = head_param_grads(*grads);
    HeadGrads hg = head_backward(state, xb, local_pos, in.tau, in.gamma, sel, cache, pg);

    auto encoder_accumulate = [&](std::size_t s, const Matrix& dy) {
        Matrix d_pre = dy;
        if (!state.linear_encoder)
            for (std::size_t t = 0; t < d_pre.data.size(); ++t)
                d_pre.data[t] *= elu_grad(pre[s].data[t]);
        affine_backward(stream_in[s], state.encoder_w, d_pre, grads->grads[0], grads->grads[1],
                        nullptr);
    };
    for (std::size_t s = 0; s < 2 * p_count; ++s) encoder_accumulate(s, hg.d_streams[s]);
    if (sel.contrastive) {
        encoder_accumulate(2 * p_count, hg.d_latent_low);
        encoder_accumulate(2 * p_count + 1, hg.d_latent_high);
    }
    return cache.loss;
}

Matrix embed_scalable(const ModelState& state, const ScalableInputs& in) {
    const std::int64_t n = in.features->rows;
    const std::size_t p_count = in.pre_low.size();
    const std::int64_t d = state.encoder_w.rows;
    Matrix out(n, d);
    constexpr std::int64_t chunk = 8192;
    for (std::int64_t start = 0; start < n; start += chunk) {
        std::vector<std::int64_t> ids;
        for (std::int64_t i = start; i < std::min(n, start + chunk); ++i) ids.push_back(i);
        std::vector<NormalizedRows> streams(2 * p_count);
        for (std::size_t p = 0; p < p_count; ++p) {
            streams[p] =
                normalize_rows(state.encode(gather_rows(in.pre_low[p], ids)), "low-pass stream");
            streams[p_count + p] =
                normalize_rows(state.encode(gather_rows(in.pre_high[p], ids)), "high-pass stream");
        }
        Matrix fused = fuse_streams(state, streams, nullptr, nullptr).fused;
        for (std::size_t i = 0; i < ids.size(); ++i)
            std::copy(fused.row(static_cast<std::int64_t>(i)).begin(),
                      fused.row(static_cast<std::int64_t>(i)).end(), out.row(ids[i]).begin());
    }
    return out;
}

// ---------------------------------------------------------------------------
// Training loops
// ---------------------------------------------------------------------------

namespace {

void require_nonzero_feature_rows(const HeteroGraph& g) {
    auto zero = g.zero_feature_rows();
    if (!zero.empty())
        throw std::runtime_error("training requires nonzero feature rows; node " +
                                 std::to_string(zero.front()) + " has an all-zero feature row");
}

void log_epoch(std::ostream* log, const EpochStats& st) {
    if (!log) return;
    (*log) << "epoch=" << st.epoch << " sce=" << st.sce << " contrastive=" << st.contrastive
           << " total=" << st.total << " ms=" << st.elapsed_ms << '\n';
}

} // namespace

TrainResult train_full(const HeteroGraph& g, const LatentGraphPair& latent,
                       const TrainConfig& cfg, std::ostream* log) {
    cfg.validate();
    require_nonzero_feature_rows(g);
    FullGraphInputs in = FullGraphInputs::build(g, latent, cfg);

    TrainResult res;
    res.state = ModelState::init(g.features.cols, cfg.embed_dim, cfg.linear_encoder, cfg.seed);
    AdamState adam = AdamState::zeros_like(res.state);
    ModelState checkpoint = res.state;
    double best = std::numeric_limits<double>::infinity();
    int bad = 0;

    for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        auto t0 = std::chrono::steady_clock::now();
        GradientSet grads = GradientSet::zeros_like(res.state);
        LossBreakdown lb = full_loss(res.state, in, LossSelect{}, &grads);
        if (!std::isfinite(lb.total)) {
            res.diverged = true;
            res.state = checkpoint;
            if (log) (*log) << "loss diverged at epoch " << epoch << "; keeping last good state\n";
            break;
        }
        checkpoint = res.state;
        grads.check_finite(res.state);
        adam_step(res.state, grads, adam, cfg.lr, cfg.weight_decay);
        res.positive_fallbacks += lb.positive_fallbacks;
        res.sce_zero_rows += lb.sce_zero_rows;

        EpochStats st;
        st.epoch = epoch;
        st.sce = lb.sce;
        st.contrastive = lb.contrastive;
        st.total = lb.total;
        st.elapsed_ms =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        res.history.push_back(st);
        log_epoch(log, st);

        if (lb.total < best) {
            best = lb.total;
            bad = 0;
        } else if (++bad >= cfg.patience) {
            break;
        }
    }
    res.embeddings = embed_full(res.state, in);
    check_finite(res.embeddings, "final embeddings");
    return res;
}

TrainResult train_scalable(const HeteroGraph& g, const LatentGraphPair& latent,
                           const FilteredFeatures& filtered, const TrainConfig& cfg,
                           std::ostream* log) {
    cfg.validate();
    if (cfg.batch_size < 2)
        throw std::invalid_argument("train_scalable: batch_size must be >= 2");
    require_nonzero_feature_rows(g);
    ScalableInputs in = ScalableInputs::build(g, latent, filtered, cfg);
    const std::int64_t n = g.num_targets();

    TrainResult res;
    res.state = ModelState::init(g.features.cols, cfg.embed_dim, cfg.linear_encoder, cfg.seed);
    AdamState adam = AdamState::zeros_like(res.state);
    ModelState checkpoint = res.state;
    double best = std::numeric_limits<double>::infinity();
    int bad = 0;

    Rng shuffler(cfg.seed * 0x2545F4914F6CDD1DULL + 7);
    std::vector<std::int64_t> order(n);
    for (std::int64_t i = 0; i < n; ++i) order[i] = i;

    for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        auto t0 = std::chrono::steady_clock::now();
        shuffler.shuffle(order);
        double sce_sum = 0.0, con_sum = 0.0;
        bool dead = false;
        for (std::int64_t start = 0; start < n; start += cfg.batch_size) {
            std::vector<std::int64_t> batch(order.begin() + start,
                                            order.begin() + std::min(n, start + cfg.batch_size));
            GradientSet grads = GradientSet::zeros_like(res.state);
            LossBreakdown lb = batch_loss(res.state, in, batch, LossSelect{}, &grads);
            if (!std::isfinite(lb.total)) {
                res.diverged = true;
                res.state = checkpoint;
                if (log)
                    (*log) << "loss diverged at epoch " << epoch << "; keeping last good state\n";
                dead = true;
                break;
            }
            checkpoint = res.state;
            grads.check_finite(res.state);
            adam_step(res.state, grads, adam, cfg.lr, cfg.weight_decay);
            double scale = static_cast<double>(batch.size());
            sce_sum += lb.sce * scale;
            con_sum += lb.contrastive * scale;
            res.positive_fallbacks += lb.positive_fallbacks;
            res.sce_zero_rows += lb.sce_zero_rows;
        }
        if (dead) break;

        EpochStats st;
        st.epoch = epoch;
        st.sce = sce_sum / static_cast<double>(n);
        st.contrastive = con_sum / static_cast<double>(n);
        st.total = st.sce + st.contrastive;
        st.elapsed_ms =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        res.history.push_back(st);
        log_epoch(log, st);

        if (st.total < best) {
            best = st.total;
            bad = 0;
        } else if (++bad >= cfg.patience) {
            break;
        }
    }
    res.embeddings = embed_scalable(res.state, in);
    check_finite(res.embeddings, "final embeddings");
    return res;
}

void save_embeddings(const Matrix& m, const std::filesystem::path& path) {
    write_matrix_f64(m, path);
}

Matrix load_embeddings(const std::filesystem::path& path) { return read_matrix_f64(path); }

void save_model(const ModelState& state, const std::filesystem::path& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    f.write("MODL", 4);
    std::uint32_t version = 1;
    f.write(reinterpret_cast<const char*>(&version), 4);
    std::uint8_t linear = state.linear_encoder ? 1 : 0;
    f.write(reinterpret_cast<const char*>(&linear), 1);
    auto params = state.parameters();
    std::uint32_t count = static_cast<std::uint32_t>(params.size());
    f.write(reinterpret_cast<const char*>(&count), 4);
    for (const auto& [name, value] : params) {
        std::uint32_t len = static_cast<std::uint32_t>(name.size());
        f.write(reinterpret_cast<const char*>(&len), 4);
        f.write(name.data(), len);
        std::uint32_t rows = static_cast<std::uint32_t>(value->rows);
        std::uint32_t cols = static_cast<std::uint32_t>(value->cols);
        f.write(reinterpret_cast<const char*>(&rows), 4);
        f.write(reinterpret_cast<const char*>(&cols), 4);
        f.write(reinterpret_cast<const char*>(value->data.data()),
                static_cast<std::streamsize>(value->data.size() * sizeof(double)));
    }
}

ModelState load_model(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot read " + path.string());
    char magic[4];
    f.read(magic, 4);
    if (std::string(magic, 4) != "MODL") throw std::runtime_error("bad magic in " + path.string());
    std::uint32_t version = 0;
    f.read(reinterpret_cast<char*>(&version), 4);
    if (version != 1) throw std::runtime_error("unsupported model file version");
    std::uint8_t linear = 0;
    f.read(reinterpret_cast<char*>(&linear), 1);
    std::uint32_t count = 0;
    f.read(reinterpret_cast<char*>(&count), 4);

    ModelState state;
    state.linear_encoder = linear != 0;
    std::map<std::string, Matrix> loaded;
    for (std::uint32_t t = 0; t < count; ++t) {
        std::uint32_t len = 0;
        f.read(reinterpret_cast<char*>(&len), 4);
        std::string name(len, '\0');
        f.read(name.data(), len);
        std::uint32_t rows = 0, cols = 0;
        f.read(reinterpret_cast<char*>(&rows), 4);
        f.read(reinterpret_cast<char*>(&cols), 4);
        Matrix m(rows, cols);
        f.read(reinterpret_cast<char*>(m.data.data()),
               static_cast<std::streamsize>(m.data.size() * sizeof(double)));
        loaded.emplace(std::move(name), std::move(m));
    }
    if (!f) throw std::runtime_error("truncated model file: " + path.string());
    for (auto& p : state.parameters()) {
        auto it = loaded.find(p.name);
        if (it == loaded.end())
            throw std::runtime_error("model file missing parameter " + p.name);
        *p.value = std::move(it->second);
    }
    return state;
}

} // namespace hetrolat
