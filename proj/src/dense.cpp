#include "hetrolat/dense.hpp"

namespace hetrolat {

Matrix matmul_bt(const Matrix& a, const Matrix& b) {
    if (a.cols != b.cols) throw std::invalid_argument("matmul_bt: inner dimension mismatch");
    Matrix out(a.rows, b.rows);
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < a.rows; ++i) {
        for (std::int64_t j = 0; j < b.rows; ++j) {
            out(i, j) = dot(a.row(i), b.row(j));
        }
    }
    return out;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols != b.rows) throw std::invalid_argument("matmul: inner dimension mismatch");
    Matrix out(a.rows, b.cols);
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < a.rows; ++i) {
        for (std::int64_t k = 0; k < a.cols; ++k) {
            double v = a(i, k);
            if (v == 0.0) continue;
            for (std::int64_t j = 0; j < b.cols; ++j) out(i, j) += v * b(k, j);
        }
    }
    return out;
}

Matrix row_normalize(const Matrix& m) {
    Matrix out = m;
    for (std::int64_t i = 0; i < m.rows; ++i) {
        double nrm = norm2(m.row(i));
        if (nrm == 0.0) throw std::runtime_error("row_normalize: zero-norm row " + std::to_string(i));
        for (std::int64_t j = 0; j < m.cols; ++j) out(i, j) /= nrm;
    }
    return out;
}

} // namespace hetrolat
