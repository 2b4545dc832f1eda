#pragma once

#include "romkit/core.hpp"

namespace romkit {

// Dense multiply kernels. The OpenMP versions split work by output column with
// a static schedule; every output entry is accumulated in the same order as in
// the serial reference, so results are bit-identical for any thread count.

Matrix matmul(const Matrix& a, const Matrix& b);
ComplexMatrix matmul(const ComplexMatrix& a, const ComplexMatrix& b);
/// real a times complex b
ComplexMatrix matmul(const Matrix& a, const ComplexMatrix& b);

/// a^T * b without materializing the transpose.
Matrix matmul_tn(const Matrix& a, const Matrix& b);

Vector matvec(const Matrix& a, std::span<const double> x);
CVector matvec(const ComplexMatrix& a, std::span<const Complex> x);

namespace ref {

// Serial references kept for testing and benchmarking.
Matrix matmul(const Matrix& a, const Matrix& b);
ComplexMatrix matmul(const ComplexMatrix& a, const ComplexMatrix& b);
ComplexMatrix matmul(const Matrix& a, const ComplexMatrix& b);
Matrix matmul_tn(const Matrix& a, const Matrix& b);

} // namespace ref

} // namespace romkit
