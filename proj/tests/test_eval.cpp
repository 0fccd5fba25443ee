#include <doctest.h>

#include <cmath>

#include "hetrolat/eval.hpp"
#include "hetrolat/homophily.hpp"
#include "hetrolat/rng.hpp"
#include "hetrolat/synthetic.hpp"
#include "oracles.hpp"

using namespace hetrolat;

namespace {

Matrix one_hot_embeddings(const std::vector<std::int64_t>& labels, std::int64_t classes) {
    Matrix m(static_cast<std::int64_t>(labels.size()), classes);
    for (std::size_t i = 0; i < labels.size(); ++i) m(static_cast<std::int64_t>(i), labels[i]) = 1.0;
    return m;
}

// Gram-Schmidt orthogonalization of a random square matrix
Matrix random_rotation(std::int64_t d, Rng& rng) {
    Matrix q(d, d);
    for (double& v : q.data) v = rng.uniform(-1, 1);
    for (std::int64_t i = 0; i < d; ++i) {
        for (std::int64_t j = 0; j < i; ++j) {
            double proj = dot(q.row(i), q.row(j));
            for (std::int64_t c = 0; c < d; ++c) q(i, c) -= proj * q(j, c);
        }
        double nrm = norm2(q.row(i));
        for (std::int64_t c = 0; c < d; ++c) q(i, c) /= nrm;
    }
    return q;
}

std::vector<std::int64_t> balanced_labels(std::int64_t n, std::int64_t classes) {
    std::vector<std::int64_t> y(n);
    for (std::int64_t i = 0; i < n; ++i) y[i] = i % classes;
    return y;
}

} // namespace

TEST_CASE("linear probe on separable and chance-level data") {
    SUBCASE("perfectly separable one-hot embeddings") {
        auto y = balanced_labels(30, 3);
        Matrix emb = one_hot_embeddings(y, 3);
        std::vector<std::int64_t> train, test;
        for (std::int64_t i = 0; i < 30; ++i) (i % 2 ? train : test).push_back(i);
        ProbeMetrics pm = linear_probe(emb, y, train, test, 3);
        CHECK(pm.macro_f1.mean == doctest::Approx(1.0));
        CHECK(pm.micro_f1.mean == doctest::Approx(1.0));
        CHECK(pm.auc.mean == doctest::Approx(1.0));
    }
    SUBCASE("shuffled labels sit at chance AUC") {
        Rng rng(101);
        std::int64_t n = 400;
        Matrix emb(n, 6);
        for (double& v : emb.data) v = rng.uniform(-1, 1);
        auto y = balanced_labels(n, 2);
        std::vector<std::int64_t> train, test;
        for (std::int64_t i = 0; i < n; ++i) (i < 200 ? train : test).push_back(i);
        ProbeMetrics pm = linear_probe(emb, y, train, test, 3);
        CHECK(pm.auc.mean == doctest::Approx(0.5).epsilon(0.1));
    }
    SUBCASE("class missing from the train split is an error") {
        auto y = balanced_labels(12, 3);
        Matrix emb = one_hot_embeddings(y, 3);
        std::vector<std::int64_t> train = {0, 1, 3, 4};  // classes 0 and 1 only
        std::vector<std::int64_t> test = {2, 5, 8};
        CHECK_THROWS_WITH_AS(linear_probe(emb, y, train, test, 1),
                             doctest::Contains("absent from train"), std::runtime_error);
    }
    SUBCASE("accuracy is invariant under orthogonal rotation") {
        Rng rng(103);
        SyntheticSpec spec;
        spec.nodes_per_class = 40;
        spec.feature_dim = 8;
        spec.feature_noise = 1.0;
        spec.seed = 4;
        HeteroGraph g = generate_synthetic(spec);
        std::vector<std::int64_t> train, test;
        for (std::int64_t i = 0; i < g.num_targets(); ++i) (i % 2 ? train : test).push_back(i);
        ProbeMetrics base = linear_probe(g.features, g.labels, train, test, 3);
        for (int t = 0; t < 5; ++t) {
            Matrix rot = random_rotation(8, rng);
            Matrix rotated = matmul_bt(g.features, rot);
            ProbeMetrics pm = linear_probe(rotated, g.labels, train, test, 3);
            CHECK(std::abs(pm.macro_f1.mean - base.macro_f1.mean) <= 0.005 + 1e-12);
        }
    }
}

TEST_CASE("clustering metrics") {
    SUBCASE("one-hot embeddings cluster perfectly") {
        auto y = balanced_labels(30, 3);
        Matrix emb = one_hot_embeddings(y, 3);
        ClusterMetrics cm = cluster_eval(emb, y, 5);
        CHECK(cm.nmi == doctest::Approx(1.0));
        CHECK(cm.ari == doctest::Approx(1.0));
    }
    SUBCASE("collapsed embeddings carry no information") {
        auto y = balanced_labels(20, 2);
        Matrix emb(20, 4, 1.0);
        ClusterMetrics cm = cluster_eval(emb, y, 3);
        CHECK(cm.nmi == doctest::Approx(0.0).epsilon(1e-9));
    }
    SUBCASE("three tight gaussian blobs") {
        Rng rng(107);
        std::int64_t per = 30;
        Matrix emb(3 * per, 2);
        std::vector<std::int64_t> y(3 * per);
        for (std::int64_t c = 0; c < 3; ++c) {
            for (std::int64_t i = 0; i < per; ++i) {
                std::int64_t id = c * per + i;
                y[id] = c;
                emb(id, 0) = 10.0 * static_cast<double>(c) + rng.uniform(-0.5, 0.5);
                emb(id, 1) = rng.uniform(-0.5, 0.5);
            }
        }
        ClusterMetrics cm = cluster_eval(emb, y, 10);
        CHECK(cm.ari >= 0.95);
        CHECK(cm.silhouette > 0.5);
    }
    SUBCASE("fewer than two classes is an error") {
        Matrix emb(5, 2, 1.0);
        CHECK_THROWS(cluster_eval(emb, std::vector<std::int64_t>(5, 0), 2));
    }
}

TEST_CASE("NMI and ARI are invariant under cluster-id permutation") {
    Rng rng(109);
    std::vector<std::int64_t> a(50), b(50);
    for (auto& v : a) v = static_cast<std::int64_t>(rng.next_below(4));
    for (auto& v : b) v = static_cast<std::int64_t>(rng.next_below(3));
    std::vector<std::int64_t> perm = {2, 0, 1};
    std::vector<std::int64_t> b_perm(50);
    for (std::size_t i = 0; i < b.size(); ++i) b_perm[i] = perm[b[i]];
    CHECK(normalized_mutual_information(a, b) ==
          doctest::Approx(normalized_mutual_information(a, b_perm)).epsilon(1e-12));
    CHECK(adjusted_rand_index(a, b) ==
          doctest::Approx(adjusted_rand_index(a, b_perm)).epsilon(1e-12));
}

TEST_CASE("similarity search on low-homophily nodes") {
    auto y = balanced_labels(30, 3);
    Matrix emb = one_hot_embeddings(y, 3);
    std::vector<std::optional<double>> nhr(30);
    for (std::int64_t i = 0; i < 30; ++i) nhr[i] = 0.1 * static_cast<double>(i % 7);

    SUBCASE("label one-hots are perfect below the class size") {
        auto table = similarity_search(emb, y, nhr, 10, {1, 5});
        CHECK(table[1] == doctest::Approx(1.0));
        CHECK(table[5] == doctest::Approx(1.0));
    }
    SUBCASE("random embeddings sit near chance") {
        Rng rng(113);
        Matrix rnd(300, 8);
        for (double& v : rnd.data) v = rng.uniform(-1, 1);
        auto yy = balanced_labels(300, 3);
        std::vector<std::optional<double>> hr(300, 0.5);
        auto table = similarity_search(rnd, yy, hr, 100, {10});
        CHECK(table[10] == doctest::Approx(1.0 / 3.0).epsilon(0.35));
    }
    SUBCASE("fewer candidates than requested trips the warning flag") {
        std::vector<std::optional<double>> sparse_hr(30);
        sparse_hr[0] = 0.0;
        sparse_hr[1] = 0.5;
        bool truncated = false;
        auto table = similarity_search(emb, y, sparse_hr, 10, {1}, &truncated);
        CHECK(truncated);
        CHECK(table.count(1) == 1);
    }
}

TEST_CASE("synthetic generator properties") {
    SUBCASE("zero inter-class probability gives perfectly homophilic metapaths") {
        SyntheticSpec spec;
        spec.nodes_per_class = 25;
        spec.metapaths = {{0.3, 0.0}};
        spec.seed = 7;
        HeteroGraph g = generate_synthetic(spec);
        CHECK(metapath_homophily(g, g.metapaths[0]) == 1.0);
    }
    SUBCASE("intra = inter sits at the chance level") {
        SyntheticSpec spec;
        spec.nodes_per_class = 40;
        spec.metapaths = {{0.2, 0.2}};
        double expect = spec.expected_mhr(0);
        // chance level: fraction of same-class pairs among all pairs
        double per = 40, c = 3, n = per * c;
        double same_pairs = c * per * (per - 1) / 2;
        double all_pairs = n * (n - 1) / 2;
        CHECK(expect == doctest::Approx(same_pairs / all_pairs).epsilon(1e-12));

        double acc = 0.0;
        for (std::uint64_t s = 0; s < 5; ++s) {
            spec.seed = s;
            HeteroGraph g = generate_synthetic(spec);
            acc += metapath_homophily(g, g.metapaths[0]);
        }
        CHECK(acc / 5.0 == doctest::Approx(expect).epsilon(0.08));
    }
    SUBCASE("empirical MHR stays within three standard errors over 20 seeds") {
        SyntheticSpec spec;  // default acceptance configuration
        for (std::size_t p = 0; p < spec.metapaths.size(); ++p) {
            std::vector<double> vals;
            for (std::uint64_t s = 0; s < 20; ++s) {
                spec.seed = s;
                HeteroGraph g = generate_synthetic(spec);
                vals.push_back(metapath_homophily(g, g.metapaths[p]));
            }
            double mean = 0.0;
            for (double v : vals) mean += v;
            mean /= vals.size();
            double var = 0.0;
            for (double v : vals) var += (v - mean) * (v - mean);
            var /= (vals.size() - 1);
            double se = std::sqrt(var / vals.size());
            CHECK(std::abs(mean - spec.expected_mhr(p)) <= 3.0 * se + 1e-9);
        }
    }
    SUBCASE("default spec plants one homophilic and one heterophilic metapath") {
        SyntheticSpec spec;
        spec.seed = 0;
        HeteroGraph g = generate_synthetic(spec);
        CHECK(metapath_homophily(g, g.metapaths[0]) > 0.7);
        CHECK(metapath_homophily(g, g.metapaths[1]) < 0.5);
    }
    SUBCASE("splits are nested and disjoint from val/test") {
        SyntheticSpec spec;
        spec.seed = 3;
        HeteroGraph g = generate_synthetic(spec);
        REQUIRE(g.splits.count("train20"));
        REQUIRE(g.splits.count("train60"));
        REQUIRE(g.splits.count("val"));
        REQUIRE(g.splits.count("test"));
        CHECK(g.splits.at("train20").size() == 60);   // 20 per class
        CHECK(g.splits.at("train60").size() == 180);  // 60 per class
        for (std::int64_t id : g.splits.at("train20")) {
            const auto& t60 = g.splits.at("train60");
            CHECK(std::find(t60.begin(), t60.end(), id) != t60.end());
            const auto& test = g.splits.at("test");
            CHECK(std::find(test.begin(), test.end(), id) == test.end());
        }
    }
}
