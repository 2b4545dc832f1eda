#include "romkit/kernels.hpp"

#include "romkit/parallel.hpp"

#include <cstdint>

namespace romkit {

namespace {

void check_mul_dims(std::size_t a_cols, std::size_t b_rows, const char* what) {
    if (a_cols != b_rows)
        throw DimensionError(std::string(what) + ": inner dimensions differ (" +
                             std::to_string(a_cols) + " vs " + std::to_string(b_rows) + ")");
}

// C(:,j) = sum_k B(k,j) * A(:,k), axpy over columns of A.
template <typename TA, typename TB, typename TC>
void mul_column(const TA& a, const TB& b, TC& c, std::size_t j) {
    const std::size_t n = a.rows();
    const std::size_t kk = a.cols();
    auto out = c.col(j);
    for (std::size_t k = 0; k < kk; ++k) {
        const auto bkj = b(k, j);
        const auto ak = a.col(k);
        for (std::size_t i = 0; i < n; ++i) out[i] += ak[i] * bkj;
    }
}

template <typename TA, typename TB, typename TC>
void mul_all(const TA& a, const TB& b, TC& c) {
    const auto m = static_cast<std::int64_t>(b.cols());
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(thread_count())
#endif
    for (std::int64_t j = 0; j < m; ++j) mul_column(a, b, c, static_cast<std::size_t>(j));
}

} // namespace

Matrix matmul(const Matrix& a, const Matrix& b) {
    check_mul_dims(a.cols(), b.rows(), "matmul");
    Matrix c(a.rows(), b.cols());
    mul_all(a, b, c);
    return c;
}

ComplexMatrix matmul(const ComplexMatrix& a, const ComplexMatrix& b) {
    check_mul_dims(a.cols(), b.rows(), "matmul");
    ComplexMatrix c(a.rows(), b.cols());
    mul_all(a, b, c);
    return c;
}

ComplexMatrix matmul(const Matrix& a, const ComplexMatrix& b) {
    check_mul_dims(a.cols(), b.rows(), "matmul");
    ComplexMatrix c(a.rows(), b.cols());
    mul_all(a, b, c);
    return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
    check_mul_dims(a.rows(), b.rows(), "matmul_tn");
    Matrix c(a.cols(), b.cols());
    const auto m = static_cast<std::int64_t>(b.cols());
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(thread_count())
#endif
    for (std::int64_t j = 0; j < m; ++j) {
        for (std::size_t i = 0; i < a.cols(); ++i) {
            const auto ai = a.col(i);
            const auto bj = b.col(static_cast<std::size_t>(j));
            double s = 0.0;
            for (std::size_t k = 0; k < a.rows(); ++k) s += ai[k] * bj[k];
            c(i, static_cast<std::size_t>(j)) = s;
        }
    }
    return c;
}

Vector matvec(const Matrix& a, std::span<const double> x) {
    check_mul_dims(a.cols(), x.size(), "matvec");
    Vector y(a.rows(), 0.0);
    for (std::size_t k = 0; k < a.cols(); ++k) {
        const auto ak = a.col(k);
        for (std::size_t i = 0; i < a.rows(); ++i) y[i] += ak[i] * x[k];
    }
    return y;
}

CVector matvec(const ComplexMatrix& a, std::span<const Complex> x) {
    check_mul_dims(a.cols(), x.size(), "matvec");
    CVector y(a.rows(), Complex{});
    for (std::size_t k = 0; k < a.cols(); ++k) {
        const auto ak = a.col(k);
        for (std::size_t i = 0; i < a.rows(); ++i) y[i] += ak[i] * x[k];
    }
    return y;
}

namespace ref {

Matrix matmul(const Matrix& a, const Matrix& b) {
    check_mul_dims(a.cols(), b.rows(), "matmul");
    Matrix c(a.rows(), b.cols());
    for (std::size_t j = 0; j < b.cols(); ++j) mul_column(a, b, c, j);
    return c;
}

ComplexMatrix matmul(const ComplexMatrix& a, const ComplexMatrix& b) {
    check_mul_dims(a.cols(), b.rows(), "matmul");
    ComplexMatrix c(a.rows(), b.cols());
    for (std::size_t j = 0; j < b.cols(); ++j) mul_column(a, b, c, j);
    return c;
}

ComplexMatrix matmul(const Matrix& a, const ComplexMatrix& b) {
    check_mul_dims(a.cols(), b.rows(), "matmul");
    ComplexMatrix c(a.rows(), b.cols());
    for (std::size_t j = 0; j < b.cols(); ++j) mul_column(a, b, c, j);
    return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
    check_mul_dims(a.rows(), b.rows(), "matmul_tn");
    Matrix c(a.cols(), b.cols());
    for (std::size_t j = 0; j < b.cols(); ++j)
        for (std::size_t i = 0; i < a.cols(); ++i) {
            const auto ai = a.col(i);
            const auto bj = b.col(j);
            double s = 0.0;
            for (std::size_t k = 0; k < a.rows(); ++k) s += ai[k] * bj[k];
            c(i, j) = s;
        }
    return c;
}

} // namespace ref

} // namespace romkit
