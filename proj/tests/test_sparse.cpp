#include <doctest.h>

#include <cmath>

#include "hetrolat/rng.hpp"
#include "hetrolat/sparse.hpp"
#include "oracles.hpp"

using namespace hetrolat;

namespace {

SparseAdjacency random_symmetric(std::int64_t n, double density, Rng& rng) {
    std::vector<std::tuple<std::int64_t, std::int64_t, double>> trip;
    for (std::int64_t i = 0; i < n; ++i)
        for (std::int64_t j = i + 1; j < n; ++j)
            if (rng.next_double() < density) {
                trip.emplace_back(i, j, 1.0);
                trip.emplace_back(j, i, 1.0);
            }
    return make_csr(n, std::move(trip), true);
}

SparseAdjacency single_edge() {
    return make_csr(2, {{0, 1, 1.0}, {1, 0, 1.0}}, true);
}

} // namespace

TEST_CASE("make_csr validates and canonicalizes") {
    SparseAdjacency a = make_csr(3, {{2, 0, 1.0}, {0, 2, 1.0}, {0, 2, 2.0}});
    CHECK(a.nnz() == 2);
    CHECK(a.value_at(0, 2) == 3.0);  // duplicates summed
    CHECK(a.value_at(2, 0) == 1.0);
    CHECK_THROWS_AS(make_csr(2, {{0, 5, 1.0}}), std::out_of_range);
    CHECK_THROWS_AS(make_csr(2, {{0, 1, 1.0}}, true), std::invalid_argument);  // asymmetric
    // explicit zeros dropped
    CHECK(make_csr(2, {{0, 1, 0.0}}).nnz() == 0);
}

TEST_CASE("renormalized adjacency on hand-checked graphs") {
    SUBCASE("isolated node") {
        SparseAdjacency a = make_csr(1, {});
        SparseAdjacency out = renormalized_adjacency(a);
        CHECK(out.value_at(0, 0) == doctest::Approx(1.0).epsilon(1e-15));
    }
    SUBCASE("single edge") {
        SparseAdjacency out = renormalized_adjacency(single_edge());
        for (std::int64_t i = 0; i < 2; ++i)
            for (std::int64_t j = 0; j < 2; ++j)
                CHECK(out.value_at(i, j) == doctest::Approx(0.5).epsilon(1e-15));
    }
    SUBCASE("triangle") {
        SparseAdjacency tri = make_csr(
            3, {{0, 1, 1.}, {1, 0, 1.}, {1, 2, 1.}, {2, 1, 1.}, {0, 2, 1.}, {2, 0, 1.}}, true);
        SparseAdjacency out = renormalized_adjacency(tri);
        for (std::int64_t i = 0; i < 3; ++i)
            for (std::int64_t j = 0; j < 3; ++j)
                CHECK(out.value_at(i, j) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
    }
    SUBCASE("requires zero diagonal") {
        SparseAdjacency loop = make_csr(1, {{0, 0, 1.0}});
        CHECK_THROWS(renormalized_adjacency(loop));
    }
}

TEST_CASE("renormalized Laplacian on hand-checked graphs") {
    SUBCASE("isolated node row vanishes") {
        SparseAdjacency out = renormalized_laplacian(make_csr(1, {}));
        CHECK(out.nnz() == 0);  // exact zero pruned
    }
    SUBCASE("single edge") {
        SparseAdjacency out = renormalized_laplacian(single_edge());
        CHECK(out.value_at(0, 0) == doctest::Approx(0.5));
        CHECK(out.value_at(0, 1) == doctest::Approx(-0.5));
        CHECK(out.value_at(1, 0) == doctest::Approx(-0.5));
        CHECK(out.value_at(1, 1) == doctest::Approx(0.5));
    }
}

TEST_CASE("spectral identities hold on random graphs") {
    Rng rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        std::int64_t n = 2 + static_cast<std::int64_t>(rng.next_below(30));
        SparseAdjacency a = random_symmetric(n, 0.3, rng);
        SparseAdjacency adj = renormalized_adjacency(a);
        SparseAdjacency lap = renormalized_laplacian(a);

        // adjacency + Laplacian = identity, elementwise
        SparseAdjacency sum = add(adj, lap);
        for (std::int64_t i = 0; i < n; ++i)
            for (std::int64_t j = 0; j < n; ++j)
                CHECK(std::abs(sum.value_at(i, j) - (i == j ? 1.0 : 0.0)) <= 1e-12);

        // the Laplacian annihilates sqrt(degree+1) exactly
        Matrix null_vec(n, 1);
        for (std::int64_t i = 0; i < n; ++i) {
            double deg = 1.0;
            for (std::int64_t k = a.offsets[i]; k < a.offsets[i + 1]; ++k) deg += a.values[k];
            null_vec(i, 0) = std::sqrt(deg);
        }
        Matrix res = spmm(lap, null_vec);
        for (double v : res.data) CHECK(std::abs(v) <= 1e-9);

        // walk matrix rows sum to one
        SparseAdjacency rw = random_walk_normalized(a);
        for (std::int64_t i = 0; i < n; ++i) {
            double s = 0.0;
            for (double v : rw.row_values(i)) s += v;
            CHECK(std::abs(s - 1.0) <= 1e-12);
        }
    }
}

TEST_CASE("random walk normalization hand values") {
    SparseAdjacency out = random_walk_normalized(single_edge());
    for (std::int64_t i = 0; i < 2; ++i)
        for (std::int64_t j = 0; j < 2; ++j)
            CHECK(out.value_at(i, j) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(random_walk_normalized(make_csr(1, {})).value_at(0, 0) == doctest::Approx(1.0));
}

TEST_CASE("spmm matches the dense oracle and its serial reference") {
    Rng rng(11);
    for (int trial = 0; trial < 10; ++trial) {
        std::int64_t n = 2 + static_cast<std::int64_t>(rng.next_below(63));
        std::vector<std::tuple<std::int64_t, std::int64_t, double>> trip;
        for (std::int64_t i = 0; i < n; ++i)
            for (std::int64_t j = 0; j < n; ++j)
                if (rng.next_double() < 0.2) trip.emplace_back(i, j, rng.uniform(-1, 1));
        SparseAdjacency a = make_csr(n, std::move(trip));
        Matrix h(n, 3);
        for (double& v : h.data) v = rng.uniform(-1, 1);

        Matrix got = spmm(a, h);
        Matrix serial = spmm_serial(a, h);
        CHECK(got.data == serial.data);  // bitwise

        Matrix expect = oracle::dense_matmul(oracle::to_dense(a), h);
        for (std::size_t t = 0; t < got.data.size(); ++t)
            CHECK(got.data[t] == doctest::Approx(expect.data[t]).epsilon(1e-12));
    }
}

TEST_CASE("spmm identity and zero") {
    Matrix h(4, 2);
    Rng rng(3);
    for (double& v : h.data) v = rng.next_double();
    CHECK(spmm(SparseAdjacency::identity(4), h).data == h.data);
    Matrix z = spmm(make_csr(4, {}), h);
    for (double v : z.data) CHECK(v == 0.0);
    CHECK_THROWS(spmm(SparseAdjacency::identity(3), h));  // dimension mismatch
}

TEST_CASE("boolean relation product matches dense reachability") {
    Rng rng(17);
    for (int trial = 0; trial < 10; ++trial) {
        std::int64_t n1 = 1 + static_cast<std::int64_t>(rng.next_below(8));
        std::int64_t n2 = 1 + static_cast<std::int64_t>(rng.next_below(8));
        std::int64_t n3 = 1 + static_cast<std::int64_t>(rng.next_below(8));
        std::vector<std::pair<std::int64_t, std::int64_t>> p1, p2;
        for (std::int64_t i = 0; i < n1; ++i)
            for (std::int64_t j = 0; j < n2; ++j)
                if (rng.next_double() < 0.3) p1.emplace_back(i, j);
        for (std::int64_t i = 0; i < n2; ++i)
            for (std::int64_t j = 0; j < n3; ++j)
                if (rng.next_double() < 0.3) p2.emplace_back(i, j);
        auto a = SparseRelation::from_pairs(n1, n2, p1);
        auto b = SparseRelation::from_pairs(n2, n3, p2);
        auto prod = boolean_product(a, b);

        Matrix da(n1, n2), db(n2, n3);
        for (auto [i, j] : p1) da(i, j) = 1.0;
        for (auto [i, j] : p2) db(i, j) = 1.0;
        Matrix expect = oracle::dense_matmul(da, db);
        for (std::int64_t i = 0; i < n1; ++i) {
            for (std::int64_t j = 0; j < n3; ++j) {
                bool want = expect(i, j) > 0.0;
                auto cols = prod.offsets[i + 1] - prod.offsets[i];
                bool got = false;
                for (std::int64_t k = prod.offsets[i]; k < prod.offsets[i + 1]; ++k)
                    if (prod.columns[k] == j) got = true;
                (void)cols;
                CHECK(got == want);
            }
        }
    }
}

TEST_CASE("symmetrize_union and drop_diagonal") {
    SparseAdjacency a = make_csr(3, {{0, 1, 1.0}, {1, 1, 1.0}});
    SparseAdjacency sym = symmetrize_union(a);
    CHECK(sym.value_at(1, 0) == 1.0);
    CHECK(sym.value_at(0, 1) == 1.0);
    SparseAdjacency nodiag = drop_diagonal(sym);
    CHECK(nodiag.value_at(1, 1) == 0.0);
    CHECK(nodiag.value_at(0, 1) == 1.0);
}
