#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

namespace hetrolat {

// Deterministic generator used everywhere randomness is needed. The
// distributions are implemented by hand because std::uniform_*_distribution
// output is implementation-defined and we need reproducible artifacts
// across toolchains.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed ? seed : 0x9e3779b97f4a7c15ULL) {}

    std::uint64_t next_u64() {
        // xorshift64* variant (Vigna), good enough for sampling and init
        std::uint64_t x = state_;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        state_ = x;
        return x * 0x2545F4914F6CDD1DULL;
    }

    // uniform in [0, 1)
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // uniform in [lo, hi)
    double uniform(double lo, double hi) {
        return lo + (hi - lo) * next_double();
    }

    // uniform integer in [0, n)
    std::uint64_t next_below(std::uint64_t n) {
        // rejection-free modulo bias is ~2^-64 for our n; acceptable and
        // keeps the stream length independent of n
        return next_u64() % n;
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(next_below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    // m distinct values from [0, n), returned sorted ascending
    std::vector<std::int64_t> sample_without_replacement(std::int64_t n, std::int64_t m) {
        std::vector<std::int64_t> pool(n);
        for (std::int64_t i = 0; i < n; ++i) pool[i] = i;
        // partial Fisher-Yates: first m slots become the sample
        for (std::int64_t i = 0; i < m; ++i) {
            std::int64_t j = i + static_cast<std::int64_t>(next_below(n - i));
            std::swap(pool[i], pool[j]);
        }
        pool.resize(m);
        std::sort(pool.begin(), pool.end());
        return pool;
    }

private:
    std::uint64_t state_;
};

} // namespace hetrolat
