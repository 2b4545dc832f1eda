#pragma once

#include "romkit/core.hpp"

namespace romkit {

/// Truncated singular value decomposition a ~= u * diag(sigma) * v^T.
/// u is rows x r and v is cols x r, both with orthonormal columns; sigma is
/// non-negative and non-increasing.
struct SvdResult {
    Matrix u;
    Vector sigma;
    Matrix v;
    std::size_t rank = 0;
};

SvdResult svd(const Matrix& a, RankSpec spec = RankSpec::full());

/// Moore-Penrose pseudoinverse. Singular values <= tol * sigma_1 are treated
/// as zero; tol < 0 selects the default max(rows, cols) * machine epsilon.
Matrix pinv(const Matrix& a, double tol = -1.0);

/// Minimum-norm least-squares solution of a x ~= b.
Vector lstsq(const Matrix& a, std::span<const double> b);

/// Complex least squares via the real 2n x 2r embedding of a.
CVector lstsq(const ComplexMatrix& a, std::span<const Complex> b);

/// Smallest retained rank under the spec given the full singular spectrum.
std::size_t resolve_rank(const Vector& sigma, RankSpec spec);

} // namespace romkit
