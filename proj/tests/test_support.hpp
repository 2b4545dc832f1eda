#pragma once

#include "romkit/core.hpp"
#include "romkit/kernels.hpp"

#include <cmath>
#include <random>

namespace romkit::test {

inline Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint32_t seed,
                            double lo = -1.0, double hi = 1.0) {
    std::mt19937 gen(seed);
    std::uniform_real_distribution<double> dist(lo, hi);
    Matrix m(rows, cols);
    for (std::size_t j = 0; j < cols; ++j)
        for (std::size_t i = 0; i < rows; ++i) m(i, j) = dist(gen);
    return m;
}

inline Vector random_vector(std::size_t n, std::uint32_t seed, double lo = -1.0, double hi = 1.0) {
    std::mt19937 gen(seed);
    std::uniform_real_distribution<double> dist(lo, hi);
    Vector v(n);
    for (double& x : v) x = dist(gen);
    return v;
}

/// Orthonormal columns via modified Gram-Schmidt of a random matrix.
inline Matrix random_orthonormal(std::size_t rows, std::size_t cols, std::uint32_t seed) {
    Matrix q = random_matrix(rows, cols, seed);
    for (std::size_t j = 0; j < cols; ++j) {
        auto qj = q.col(j);
        for (int pass = 0; pass < 2; ++pass)
            for (std::size_t k = 0; k < j; ++k) {
                auto qk = q.col(k);
                double dot = 0.0;
                for (std::size_t i = 0; i < rows; ++i) dot += qk[i] * qj[i];
                for (std::size_t i = 0; i < rows; ++i) qj[i] -= dot * qk[i];
            }
        const double n = norm2(qj);
        for (double& x : qj) x /= n;
    }
    return q;
}

inline double max_abs_diff(const Matrix& a, const Matrix& b) {
    double m = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j)
        for (std::size_t i = 0; i < a.rows(); ++i) m = std::max(m, std::abs(a(i, j) - b(i, j)));
    return m;
}

inline double orthonormality_residual(const Matrix& q) {
    const Matrix g = matmul_tn(q, q);
    double m = 0.0;
    for (std::size_t j = 0; j < g.cols(); ++j)
        for (std::size_t i = 0; i < g.rows(); ++i)
            m = std::max(m, std::abs(g(i, j) - (i == j ? 1.0 : 0.0)));
    return m;
}

} // namespace romkit::test
