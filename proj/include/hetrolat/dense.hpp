#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace hetrolat {

/// Dense row-major matrix of doubles. The workhorse container for features,
/// embeddings and model activations.
struct Matrix {
    std::int64_t rows = 0;
    std::int64_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::int64_t r, std::int64_t c, double fill = 0.0)
        : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, fill) {}

    double& operator()(std::int64_t i, std::int64_t j) {
        return data[static_cast<std::size_t>(i) * cols + j];
    }
    double operator()(std::int64_t i, std::int64_t j) const {
        return data[static_cast<std::size_t>(i) * cols + j];
    }

    std::span<double> row(std::int64_t i) {
        return {data.data() + static_cast<std::size_t>(i) * cols, static_cast<std::size_t>(cols)};
    }
    std::span<const double> row(std::int64_t i) const {
        return {data.data() + static_cast<std::size_t>(i) * cols, static_cast<std::size_t>(cols)};
    }

    bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }
};

inline double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm2(std::span<const double> a) {
    return std::sqrt(dot(a, a));
}

/// Cosine similarity; 0 when either vector has zero norm.
inline double cosine(std::span<const double> a, std::span<const double> b) {
    double na = norm2(a), nb = norm2(b);
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot(a, b) / (na * nb);
}

/// C = A * B^T where A is n x k and B is m x k. Row-parallel; each output
/// row depends only on one row of A, so results are identical for any
/// thread count.
Matrix matmul_bt(const Matrix& a, const Matrix& b);

/// C = A * B, plain triple loop.
Matrix matmul(const Matrix& a, const Matrix& b);

/// Row-wise L2 normalization. Throws if any row has zero norm (callers that
/// tolerate zero rows must check first).
Matrix row_normalize(const Matrix& m);

inline void check_finite(const Matrix& m, const char* what) {
    for (double v : m.data)
        if (!std::isfinite(v)) throw std::runtime_error(std::string("non-finite value in ") + what);
}

} // namespace hetrolat
