// Kernel benchmark: OpenMP row-parallel kernels against their serial
// references. Outputs one line per (kernel, size) with timings and the
// maximum absolute deviation, which must be zero for spmm (identical
// per-row summation order).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "hetrolat/latent.hpp"
#include "hetrolat/rng.hpp"
#include "hetrolat/sparse.hpp"

using namespace hetrolat;
using Clock = std::chrono::steady_clock;

namespace {

double time_ms(const std::function<void()>& fn, int reps) {
    fn();  // warm up
    auto t0 = Clock::now();
    for (int i = 0; i < reps; ++i) fn();
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count() / reps;
}

SparseAdjacency random_graph(std::int64_t n, double density, Rng& rng) {
    std::vector<std::tuple<std::int64_t, std::int64_t, double>> trip;
    for (std::int64_t i = 0; i < n; ++i)
        for (std::int64_t j = i + 1; j < n; ++j)
            if (rng.next_double() < density) {
                trip.emplace_back(i, j, 1.0);
                trip.emplace_back(j, i, 1.0);
            }
    return make_csr(n, std::move(trip), true);
}

void set_threads(int t) {
#ifdef _OPENMP
    omp_set_num_threads(t);
#else
    (void)t;
#endif
}

int max_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

} // namespace

int main() {
    const int threads = max_threads();
    std::printf("threads available: %d\n", threads);
    std::printf("%-22s %8s %12s %12s %9s %12s\n", "kernel", "n", "serial ms", "parallel ms",
                "speedup", "max |diff|");

    Rng rng(12345);
    for (std::int64_t n : {500, 1500, 3000}) {
        SparseAdjacency a = random_graph(n, 30.0 / static_cast<double>(n), rng);
        Matrix h(n, 64);
        for (double& v : h.data) v = rng.uniform(-1, 1);

        Matrix serial_out = spmm_serial(a, h);
        Matrix parallel_out = spmm(a, h);
        double max_diff = 0.0;
        for (std::size_t t = 0; t < serial_out.data.size(); ++t)
            max_diff = std::max(max_diff, std::abs(serial_out.data[t] - parallel_out.data[t]));

        double t_serial = time_ms([&] { spmm_serial(a, h); }, 5);
        set_threads(threads);
        double t_parallel = time_ms([&] { spmm(a, h); }, 5);
        std::printf("%-22s %8lld %12.3f %12.3f %8.2fx %12.3g\n", "spmm", (long long)n, t_serial,
                    t_parallel, t_serial / t_parallel, max_diff);
    }

    for (std::int64_t n : {400, 800}) {
        SparseAdjacency walk = random_walk_normalized(random_graph(n, 20.0 / n, rng));
        Matrix x(n, 32);
        for (double& v : x.data) v = rng.next_double();

        set_threads(1);
        LatentGraphPair serial_pair = build_latent_graphs_full(walk, x, 5, 2);
        double t_serial = time_ms([&] { build_latent_graphs_full(walk, x, 5, 2); }, 2);
        set_threads(threads);
        LatentGraphPair parallel_pair = build_latent_graphs_full(walk, x, 5, 2);
        double t_parallel = time_ms([&] { build_latent_graphs_full(walk, x, 5, 2); }, 2);

        bool identical = serial_pair.homophilic_lists == parallel_pair.homophilic_lists &&
                         serial_pair.heterophilic_lists == parallel_pair.heterophilic_lists;
        std::printf("%-22s %8lld %12.3f %12.3f %8.2fx %12s\n", "latent-topk", (long long)n,
                    t_serial, t_parallel, t_serial / t_parallel, identical ? "identical" : "DIFFER");
    }

    return 0;
}
