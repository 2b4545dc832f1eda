#pragma once

#include "romkit/core.hpp"

namespace romkit {

/// General eigendecomposition a * w_i = lambda_i * w_i. Eigenvalues are sorted
/// by modulus descending with conjugate pairs adjacent (positive imaginary
/// part first); eigenvectors have unit 2-norm with the first nonzero component
/// rotated onto the positive real axis. Real inputs yield an eigenvalue set
/// exactly closed under conjugation.
struct EigResult {
    CVector values;
    ComplexMatrix vectors;
};

EigResult eig(const Matrix& a);

/// Symmetric eigendecomposition, eigenvalues descending, orthonormal vectors
/// with the largest-magnitude component of each made positive.
struct SymEigResult {
    Vector values;
    Matrix vectors;
};

SymEigResult eig_sym(const Matrix& a);

} // namespace romkit
