#include "romkit/linsolve.hpp"

#include <cmath>
#include <limits>

namespace romkit {

Matrix lu_solve(Matrix a, Matrix b, const std::string& context) {
    if (a.rows() != a.cols())
        throw DimensionError(context + ": system matrix is " + std::to_string(a.rows()) + "x" +
                             std::to_string(a.cols()) + ", square required");
    if (b.rows() != a.rows())
        throw DimensionError(context + ": rhs has " + std::to_string(b.rows()) +
                             " rows, expected " + std::to_string(a.rows()));
    const std::size_t n = a.rows();
    const double floor = static_cast<double>(n) * std::numeric_limits<double>::epsilon() *
                         std::max(max_abs(a), 1e-300);

    for (std::size_t k = 0; k < n; ++k) {
        std::size_t piv = k;
        for (std::size_t i = k + 1; i < n; ++i)
            if (std::abs(a(i, k)) > std::abs(a(piv, k))) piv = i;
        if (std::abs(a(piv, k)) <= floor)
            throw ConditioningError(context + ": singular system (pivot " + std::to_string(k) +
                                    " below noise floor)");
        if (piv != k) {
            for (std::size_t j = 0; j < n; ++j) std::swap(a(k, j), a(piv, j));
            for (std::size_t j = 0; j < b.cols(); ++j) std::swap(b(k, j), b(piv, j));
        }
        const double inv = 1.0 / a(k, k);
        for (std::size_t i = k + 1; i < n; ++i) {
            const double f = a(i, k) * inv;
            if (f == 0.0) continue;
            a(i, k) = f;
            for (std::size_t j = k + 1; j < n; ++j) a(i, j) -= f * a(k, j);
            for (std::size_t j = 0; j < b.cols(); ++j) b(i, j) -= f * b(k, j);
        }
    }
    // back substitution
    for (std::size_t col = 0; col < b.cols(); ++col) {
        for (std::size_t i = n; i-- > 0;) {
            double s = b(i, col);
            for (std::size_t j = i + 1; j < n; ++j) s -= a(i, j) * b(j, col);
            b(i, col) = s / a(i, i);
        }
    }
    return b;
}

} // namespace romkit
