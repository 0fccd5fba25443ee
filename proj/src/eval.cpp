#include "hetrolat/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "hetrolat/rng.hpp"

namespace hetrolat {

namespace {

std::int64_t count_classes(const std::vector<std::int64_t>& labels) {
    std::int64_t c = 0;
    for (std::int64_t y : labels) c = std::max(c, y + 1);
    return c;
}

MeanStd mean_std(const std::vector<double>& xs) {
    MeanStd out;
    for (double x : xs) out.mean += x;
    out.mean /= static_cast<double>(xs.size());
    for (double x : xs) out.std += (x - out.mean) * (x - out.mean);
    out.std = std::sqrt(out.std / static_cast<double>(xs.size()));
    return out;
}

// Multinomial logistic regression fitted with L-BFGS (two-loop recursion,
// Armijo backtracking). The objective is strictly convex through the L2
// weight penalty, so every run converges to the same optimum; the seed only
// perturbs the start point.
struct SoftmaxProbe {
    Matrix w;  // C x d
    Matrix b;  // 1 x C

    struct Objective {
        const Matrix& x;
        const std::vector<std::int64_t>& y;
        const std::vector<std::int64_t>& ids;
        std::int64_t classes;
        double wd = 1e-4;

        std::int64_t dim() const { return classes * (x.cols + 1); }

        // theta layout: W row-major (C x d), then biases (C)
        double eval(const std::vector<double>& theta, std::vector<double>& grad) const {
            const std::int64_t d = x.cols;
            std::fill(grad.begin(), grad.end(), 0.0);
            double loss = 0.0;
            const double inv_n = 1.0 / static_cast<double>(ids.size());
            std::vector<double> logits(classes);
            for (std::int64_t id : ids) {
                auto xi = x.row(id);
                double mx = -std::numeric_limits<double>::infinity();
                for (std::int64_t c = 0; c < classes; ++c) {
                    double z = theta[classes * d + c];
                    const double* wc = theta.data() + c * d;
                    for (std::int64_t j = 0; j < d; ++j) z += wc[j] * xi[j];
                    logits[c] = z;
                    mx = std::max(mx, z);
                }
                double den = 0.0;
                for (std::int64_t c = 0; c < classes; ++c) den += std::exp(logits[c] - mx);
                loss -= (logits[y[id]] - mx - std::log(den)) * inv_n;
                for (std::int64_t c = 0; c < classes; ++c) {
                    double delta = (std::exp(logits[c] - mx) / den - (y[id] == c ? 1.0 : 0.0)) * inv_n;
                    double* gc = grad.data() + c * d;
                    for (std::int64_t j = 0; j < d; ++j) gc[j] += delta * xi[j];
                    grad[classes * d + c] += delta;
                }
            }
            for (std::int64_t t = 0; t < classes * d; ++t) {
                loss += 0.5 * wd * theta[t] * theta[t];
                grad[t] += wd * theta[t];
            }
            return loss;
        }
    };

    static SoftmaxProbe fit(const Matrix& x, const std::vector<std::int64_t>& y,
                            const std::vector<std::int64_t>& ids, std::int64_t classes,
                            std::uint64_t seed) {
        Objective obj{x, y, ids, classes};
        const std::int64_t n = obj.dim();
        std::vector<double> theta(n, 0.0);
        Rng rng(seed * 0x9e3779b97f4a7c15ULL + 13);
        for (std::int64_t t = 0; t < classes * x.cols; ++t) theta[t] = rng.uniform(-0.01, 0.01);

        std::vector<double> grad(n), dir(n), theta_new(n), grad_new(n);
        double f = obj.eval(theta, grad);
        constexpr int memory = 8, max_iters = 300;
        std::vector<std::vector<double>> s_hist, y_hist;
        std::vector<double> rho_hist;

        for (int iter = 0; iter < max_iters; ++iter) {
            double gmax = 0.0;
            for (double v : grad) gmax = std::max(gmax, std::abs(v));
            if (gmax < 1e-10) break;

            // two-loop recursion
            dir = grad;
            std::vector<double> alpha(s_hist.size());
            for (std::size_t h = s_hist.size(); h-- > 0;) {
                double a = 0.0;
                for (std::int64_t t = 0; t < n; ++t) a += s_hist[h][t] * dir[t];
                a *= rho_hist[h];
                alpha[h] = a;
                for (std::int64_t t = 0; t < n; ++t) dir[t] -= a * y_hist[h][t];
            }
            if (!s_hist.empty()) {
                double sy = 1.0 / rho_hist.back(), yy = 0.0;
                for (double v : y_hist.back()) yy += v * v;
                double gamma = sy / yy;
                for (double& v : dir) v *= gamma;
            }
            for (std::size_t h = 0; h < s_hist.size(); ++h) {
                double beta = 0.0;
                for (std::int64_t t = 0; t < n; ++t) beta += y_hist[h][t] * dir[t];
                beta *= rho_hist[h];
                for (std::int64_t t = 0; t < n; ++t) dir[t] += s_hist[h][t] * (alpha[h] - beta);
            }
            for (double& v : dir) v = -v;

            double slope = 0.0;
            for (std::int64_t t = 0; t < n; ++t) slope += grad[t] * dir[t];
            if (slope >= 0.0) {  // fall back to steepest descent
                for (std::int64_t t = 0; t < n; ++t) dir[t] = -grad[t];
                slope = 0.0;
                for (double v : grad) slope -= v * v;
            }

            // Armijo backtracking
            double step = 1.0, f_new = f;
            for (int ls = 0; ls < 40; ++ls) {
                for (std::int64_t t = 0; t < n; ++t) theta_new[t] = theta[t] + step * dir[t];
                f_new = obj.eval(theta_new, grad_new);
                if (f_new <= f + 1e-4 * step * slope) break;
                step *= 0.5;
            }
            if (!(f_new < f)) break;  // no further progress

            std::vector<double> s(n), yv(n);
            double sy = 0.0;
            for (std::int64_t t = 0; t < n; ++t) {
                s[t] = theta_new[t] - theta[t];
                yv[t] = grad_new[t] - grad[t];
                sy += s[t] * yv[t];
            }
            theta.swap(theta_new);
            grad.swap(grad_new);
            f = f_new;
            if (sy > 1e-12) {
                s_hist.push_back(std::move(s));
                y_hist.push_back(std::move(yv));
                rho_hist.push_back(1.0 / sy);
                if (static_cast<int>(s_hist.size()) > memory) {
                    s_hist.erase(s_hist.begin());
                    y_hist.erase(y_hist.begin());
                    rho_hist.erase(rho_hist.begin());
                }
            }
        }

        SoftmaxProbe p;
        p.w = Matrix(classes, x.cols);
        p.b = Matrix(1, classes);
        for (std::int64_t c = 0; c < classes; ++c) {
            for (std::int64_t j = 0; j < x.cols; ++j) p.w(c, j) = theta[c * x.cols + j];
            p.b(0, c) = theta[classes * x.cols + c];
        }
        return p;
    }

    std::vector<double> probabilities(std::span<const double> xi, std::int64_t classes) const {
        std::vector<double> logits(classes);
        double mx = -std::numeric_limits<double>::infinity();
        for (std::int64_t c = 0; c < classes; ++c) {
            logits[c] = dot(w.row(c), xi) + b(0, c);
            mx = std::max(mx, logits[c]);
        }
        double den = 0.0;
        for (std::int64_t c = 0; c < classes; ++c) {
            logits[c] = std::exp(logits[c] - mx);
            den += logits[c];
        }
        for (std::int64_t c = 0; c < classes; ++c) logits[c] /= den;
        return logits;
    }
};

double macro_f1(const std::vector<std::int64_t>& truth, const std::vector<std::int64_t>& pred,
                std::int64_t classes) {
    double sum = 0.0;
    for (std::int64_t c = 0; c < classes; ++c) {
        std::int64_t tp = 0, fp = 0, fn = 0;
        for (std::size_t i = 0; i < truth.size(); ++i) {
            if (pred[i] == c && truth[i] == c) ++tp;
            else if (pred[i] == c) ++fp;
            else if (truth[i] == c) ++fn;
        }
        double den = static_cast<double>(2 * tp + fp + fn);
        sum += den > 0.0 ? 2.0 * static_cast<double>(tp) / den : 0.0;
    }
    return sum / static_cast<double>(classes);
}

double micro_f1(const std::vector<std::int64_t>& truth, const std::vector<std::int64_t>& pred) {
    std::int64_t hit = 0;
    for (std::size_t i = 0; i < truth.size(); ++i)
        if (truth[i] == pred[i]) ++hit;
    return static_cast<double>(hit) / static_cast<double>(truth.size());
}

// one-vs-rest AUC via the rank statistic, macro-averaged over classes with
// both positives and negatives present
double macro_auc(const std::vector<std::int64_t>& truth, const Matrix& probs) {
    const std::int64_t classes = probs.cols;
    const std::int64_t n = probs.rows;
    double sum = 0.0;
    std::int64_t used = 0;
    std::vector<std::pair<double, std::int64_t>> scored(n);
    for (std::int64_t c = 0; c < classes; ++c) {
        std::int64_t pos = 0;
        for (std::int64_t i = 0; i < n; ++i) {
            scored[i] = {probs(i, c), truth[i] == c ? 1 : 0};
            pos += scored[i].second;
        }
        if (pos == 0 || pos == n) continue;
        std::sort(scored.begin(), scored.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        // mid-ranks for ties
        double rank_sum_pos = 0.0;
        std::int64_t i = 0;
        while (i < n) {
            std::int64_t j = i;
            while (j < n && scored[j].first == scored[i].first) ++j;
            double mid_rank = 0.5 * static_cast<double>(i + 1 + j);  // average of ranks i+1..j
            for (std::int64_t t = i; t < j; ++t)
                if (scored[t].second) rank_sum_pos += mid_rank;
            i = j;
        }
        double neg = static_cast<double>(n - pos);
        double auc = (rank_sum_pos - 0.5 * static_cast<double>(pos) * (pos + 1)) /
                     (static_cast<double>(pos) * neg);
        sum += auc;
        ++used;
    }
    if (used == 0) throw std::runtime_error("auc: no class has both positives and negatives");
    return sum / static_cast<double>(used);
}

} // namespace

ProbeMetrics linear_probe(const Matrix& embeddings, const std::vector<std::int64_t>& labels,
                          const std::vector<std::int64_t>& train_ids,
                          const std::vector<std::int64_t>& test_ids, int runs,
                          std::uint64_t base_seed) {
    if (train_ids.empty() || test_ids.empty())
        throw std::invalid_argument("linear_probe: empty split");
    const std::int64_t classes = count_classes(labels);
    std::vector<char> seen(classes, 0);
    for (std::int64_t id : train_ids) seen[labels[id]] = 1;
    for (std::int64_t c = 0; c < classes; ++c)
        if (!seen[c])
            throw std::runtime_error("linear_probe: class " + std::to_string(c) +
                                     " absent from train split");

    std::vector<double> maf1s, mif1s, aucs;
    for (int run = 0; run < runs; ++run) {
        SoftmaxProbe probe =
            SoftmaxProbe::fit(embeddings, labels, train_ids, classes, base_seed + run);
        std::vector<std::int64_t> truth, pred;
        Matrix probs(static_cast<std::int64_t>(test_ids.size()), classes);
        for (std::size_t i = 0; i < test_ids.size(); ++i) {
            auto p = probe.probabilities(embeddings.row(test_ids[i]), classes);
            std::int64_t best = 0;
            for (std::int64_t c = 0; c < classes; ++c) {
                probs(static_cast<std::int64_t>(i), c) = p[c];
                if (p[c] > p[best]) best = c;
            }
            truth.push_back(labels[test_ids[i]]);
            pred.push_back(best);
        }
        maf1s.push_back(macro_f1(truth, pred, classes));
        mif1s.push_back(micro_f1(truth, pred));
        aucs.push_back(macro_auc(truth, probs));
    }
    return {mean_std(maf1s), mean_std(mif1s), mean_std(aucs)};
}

KMeansResult kmeans(const Matrix& points, std::int64_t k, std::uint64_t seed, int max_iters) {
    const std::int64_t n = points.rows, d = points.cols;
    if (k < 1 || k > n) throw std::invalid_argument("kmeans: bad k");
    Rng rng(seed * 0x2545F4914F6CDD1DULL + 3);

    // k-means++ seeding
    Matrix centers(k, d);
    std::vector<double> dist2(n, std::numeric_limits<double>::infinity());
    std::int64_t first = static_cast<std::int64_t>(rng.next_below(n));
    std::copy(points.row(first).begin(), points.row(first).end(), centers.row(0).begin());
    for (std::int64_t c = 1; c < k; ++c) {
        double total = 0.0;
        for (std::int64_t i = 0; i < n; ++i) {
            double d2 = 0.0;
            auto pi = points.row(i);
            auto pc = centers.row(c - 1);
            for (std::int64_t j = 0; j < d; ++j) d2 += (pi[j] - pc[j]) * (pi[j] - pc[j]);
            dist2[i] = std::min(dist2[i], d2);
            total += dist2[i];
        }
        std::int64_t chosen = 0;
        if (total > 0.0) {
            double target = rng.next_double() * total;
            double acc = 0.0;
            for (std::int64_t i = 0; i < n; ++i) {
                acc += dist2[i];
                if (acc >= target) {
                    chosen = i;
                    break;
                }
            }
        } else {
            chosen = static_cast<std::int64_t>(rng.next_below(n));
        }
        std::copy(points.row(chosen).begin(), points.row(chosen).end(), centers.row(c).begin());
    }

    KMeansResult res;
    res.assignment.assign(n, 0);
    std::vector<std::int64_t> counts(k);
    for (int iter = 0; iter < max_iters; ++iter) {
        bool changed = false;
        res.inertia = 0.0;
        for (std::int64_t i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::infinity();
            std::int64_t besti = 0;
            auto pi = points.row(i);
            for (std::int64_t c = 0; c < k; ++c) {
                double d2 = 0.0;
                auto pc = centers.row(c);
                for (std::int64_t j = 0; j < d; ++j) d2 += (pi[j] - pc[j]) * (pi[j] - pc[j]);
                if (d2 < best) {
                    best = d2;
                    besti = c;
                }
            }
            if (res.assignment[i] != besti) {
                res.assignment[i] = besti;
                changed = true;
            }
            res.inertia += best;
        }
        if (!changed && iter > 0) break;
        centers = Matrix(k, d);
        std::fill(counts.begin(), counts.end(), 0);
        for (std::int64_t i = 0; i < n; ++i) {
            ++counts[res.assignment[i]];
            auto pi = points.row(i);
            for (std::int64_t j = 0; j < d; ++j) centers(res.assignment[i], j) += pi[j];
        }
        for (std::int64_t c = 0; c < k; ++c) {
            if (counts[c] == 0) {
                // re-seed an empty cluster at a random point
                std::int64_t pick = static_cast<std::int64_t>(rng.next_below(n));
                std::copy(points.row(pick).begin(), points.row(pick).end(), centers.row(c).begin());
            } else {
                for (std::int64_t j = 0; j < d; ++j) centers(c, j) /= static_cast<double>(counts[c]);
            }
        }
    }
    return res;
}

double normalized_mutual_information(const std::vector<std::int64_t>& a,
                                     const std::vector<std::int64_t>& b) {
    if (a.size() != b.size() || a.empty())
        throw std::invalid_argument("nmi: label vectors must match");
    const double n = static_cast<double>(a.size());
    const std::int64_t ca = count_classes(a), cb = count_classes(b);
    std::vector<std::vector<double>> joint(ca, std::vector<double>(cb, 0.0));
    std::vector<double> pa(ca, 0.0), pb(cb, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i) {
        joint[a[i]][b[i]] += 1.0;
        pa[a[i]] += 1.0;
        pb[b[i]] += 1.0;
    }
    double mi = 0.0, ha = 0.0, hb = 0.0;
    for (std::int64_t i = 0; i < ca; ++i)
        for (std::int64_t j = 0; j < cb; ++j)
            if (joint[i][j] > 0.0)
                mi += joint[i][j] / n * std::log(joint[i][j] * n / (pa[i] * pb[j]));
    for (double p : pa)
        if (p > 0.0) ha -= p / n * std::log(p / n);
    for (double p : pb)
        if (p > 0.0) hb -= p / n * std::log(p / n);
    double denom = 0.5 * (ha + hb);
    if (denom <= 0.0) return mi > 0.0 ? 1.0 : 0.0;
    return mi / denom;
}

double adjusted_rand_index(const std::vector<std::int64_t>& a, const std::vector<std::int64_t>& b) {
    if (a.size() != b.size() || a.empty())
        throw std::invalid_argument("ari: label vectors must match");
    const std::int64_t ca = count_classes(a), cb = count_classes(b);
    std::vector<std::vector<std::int64_t>> joint(ca, std::vector<std::int64_t>(cb, 0));
    std::vector<std::int64_t> ra(ca, 0), rb(cb, 0);
    for (std::size_t i = 0; i < a.size(); ++i) {
        ++joint[a[i]][b[i]];
        ++ra[a[i]];
        ++rb[b[i]];
    }
    auto choose2 = [](std::int64_t m) { return 0.5 * static_cast<double>(m) * (m - 1); };
    double sum_ij = 0.0, sum_a = 0.0, sum_b = 0.0;
    for (std::int64_t i = 0; i < ca; ++i)
        for (std::int64_t j = 0; j < cb; ++j) sum_ij += choose2(joint[i][j]);
    for (std::int64_t m : ra) sum_a += choose2(m);
    for (std::int64_t m : rb) sum_b += choose2(m);
    double total = choose2(static_cast<std::int64_t>(a.size()));
    double expected = sum_a * sum_b / total;
    double max_index = 0.5 * (sum_a + sum_b);
    if (max_index == expected) return 1.0;  // both partitions trivial and identical
    return (sum_ij - expected) / (max_index - expected);
}

double silhouette_score(const Matrix& points, const std::vector<std::int64_t>& assignment) {
    const std::int64_t n = points.rows;
    const std::int64_t k = count_classes(assignment);
    if (k < 2) return 0.0;
    std::vector<std::int64_t> counts(k, 0);
    for (std::int64_t c : assignment) ++counts[c];

    double total = 0.0;
#pragma omp parallel for schedule(static) reduction(+ : total)
    for (std::int64_t i = 0; i < n; ++i) {
        std::vector<double> mean_dist(k, 0.0);
        auto pi = points.row(i);
        for (std::int64_t j = 0; j < n; ++j) {
            if (j == i) continue;
            double d2 = 0.0;
            auto pj = points.row(j);
            for (std::int64_t t = 0; t < points.cols; ++t) d2 += (pi[t] - pj[t]) * (pi[t] - pj[t]);
            mean_dist[assignment[j]] += std::sqrt(d2);
        }
        std::int64_t own = assignment[i];
        if (counts[own] <= 1) continue;  // silhouette of singleton defined as 0
        double a_val = mean_dist[own] / static_cast<double>(counts[own] - 1);
        double b_val = std::numeric_limits<double>::infinity();
        for (std::int64_t c = 0; c < k; ++c) {
            if (c == own || counts[c] == 0) continue;
            b_val = std::min(b_val, mean_dist[c] / static_cast<double>(counts[c]));
        }
        total += (b_val - a_val) / std::max(a_val, b_val);
    }
    return total / static_cast<double>(n);
}

ClusterMetrics cluster_eval(const Matrix& embeddings, const std::vector<std::int64_t>& labels,
                            int restarts, std::uint64_t base_seed) {
    const std::int64_t classes = count_classes(labels);
    if (classes < 2) throw std::invalid_argument("cluster_eval: need at least two classes");
    ClusterMetrics out;
    double best_inertia = std::numeric_limits<double>::infinity();
    std::vector<std::int64_t> best_assignment;
    for (int r = 0; r < restarts; ++r) {
        KMeansResult km = kmeans(embeddings, classes, base_seed + r);
        out.nmi += normalized_mutual_information(labels, km.assignment);
        out.ari += adjusted_rand_index(labels, km.assignment);
        if (km.inertia < best_inertia) {
            best_inertia = km.inertia;
            best_assignment = km.assignment;
        }
    }
    out.nmi /= restarts;
    out.ari /= restarts;
    out.silhouette = silhouette_score(embeddings, best_assignment);
    return out;
}

std::map<std::int64_t, double> similarity_search(
    const Matrix& embeddings, const std::vector<std::int64_t>& labels,
    const std::vector<std::optional<double>>& node_hr, std::int64_t n_lowest,
    const std::vector<std::int64_t>& ks, bool* truncated) {
    const std::int64_t n = embeddings.rows;
    std::vector<std::pair<double, std::int64_t>> ranked;
    for (std::int64_t i = 0; i < n; ++i)
        if (node_hr[i].has_value()) ranked.emplace_back(*node_hr[i], i);
    std::sort(ranked.begin(), ranked.end());
    if (truncated) *truncated = static_cast<std::int64_t>(ranked.size()) < n_lowest;
    std::int64_t picked = std::min<std::int64_t>(n_lowest, static_cast<std::int64_t>(ranked.size()));
    if (picked == 0) throw std::runtime_error("similarity_search: no non-isolated nodes");

    std::vector<double> norms(n);
    for (std::int64_t i = 0; i < n; ++i) norms[i] = norm2(embeddings.row(i));

    std::int64_t max_k = *std::max_element(ks.begin(), ks.end());
    std::map<std::int64_t, double> acc;
    for (std::int64_t k : ks) acc[k] = 0.0;

    for (std::int64_t t = 0; t < picked; ++t) {
        std::int64_t i = ranked[t].second;
        std::vector<std::pair<double, std::int64_t>> scored;
        scored.reserve(n - 1);
        auto ei = embeddings.row(i);
        for (std::int64_t j = 0; j < n; ++j) {
            if (j == i) continue;
            double sim = (norms[i] > 0.0 && norms[j] > 0.0)
                             ? dot(ei, embeddings.row(j)) / (norms[i] * norms[j])
                             : 0.0;
            scored.emplace_back(sim, j);
        }
        auto better = [](const auto& a, const auto& b) {
            if (a.first != b.first) return a.first > b.first;
            return a.second < b.second;
        };
        std::int64_t kk = std::min<std::int64_t>(max_k, static_cast<std::int64_t>(scored.size()));
        std::partial_sort(scored.begin(), scored.begin() + kk, scored.end(), better);
        for (std::int64_t k : ks) {
            std::int64_t take = std::min(k, kk);
            std::int64_t same = 0;
            for (std::int64_t s = 0; s < take; ++s)
                if (labels[scored[s].second] == labels[i]) ++same;
            acc[k] += take > 0 ? static_cast<double>(same) / static_cast<double>(take) : 0.0;
        }
    }
    for (auto& [k, v] : acc) v /= static_cast<double>(picked);
    return acc;
}

} // namespace hetrolat
