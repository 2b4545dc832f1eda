#include "romkit/core.hpp"

#include <charconv>
#include <cmath>

namespace romkit {

Matrix transpose(const Matrix& a) {
    Matrix t(a.cols(), a.rows());
    for (std::size_t j = 0; j < a.cols(); ++j)
        for (std::size_t i = 0; i < a.rows(); ++i) t(j, i) = a(i, j);
    return t;
}

ComplexMatrix conjugate_transpose(const ComplexMatrix& a) {
    ComplexMatrix t(a.cols(), a.rows());
    for (std::size_t j = 0; j < a.cols(); ++j)
        for (std::size_t i = 0; i < a.rows(); ++i) t(j, i) = std::conj(a(i, j));
    return t;
}

double frobenius_norm(const Matrix& a) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += a.data()[k] * a.data()[k];
    return std::sqrt(s);
}

double frobenius_norm(const ComplexMatrix& a) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += std::norm(a.data()[k]);
    return std::sqrt(s);
}

double max_abs(const Matrix& a) {
    double m = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs(a.data()[k]));
    return m;
}

double norm2(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

double norm2(std::span<const Complex> v) {
    double s = 0.0;
    for (const Complex& x : v) s += std::norm(x);
    return std::sqrt(s);
}

void require_finite(const Matrix& a, const std::string& what) {
    for (std::size_t j = 0; j < a.cols(); ++j)
        for (std::size_t i = 0; i < a.rows(); ++i)
            if (!std::isfinite(a(i, j)))
                throw ValidationError(what + ": non-finite entry at (row " + std::to_string(i) +
                                      ", col " + std::to_string(j) + ")");
}

void require_finite(std::span<const double> v, const std::string& what) {
    for (std::size_t i = 0; i < v.size(); ++i)
        if (!std::isfinite(v[i]))
            throw ValidationError(what + ": non-finite entry at index " + std::to_string(i));
}

void require_nonempty(const Matrix& a, const std::string& what) {
    if (a.empty())
        throw DimensionError(what + ": empty matrix (" + std::to_string(a.rows()) + "x" +
                             std::to_string(a.cols()) + ")");
}

std::string format_double(double x) {
    char buf[40];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
    (void)ec;
    return std::string(buf, ptr);
}

std::uint64_t fnv1a64(const void* bytes, std::size_t n, std::uint64_t seed) {
    const auto* p = static_cast<const unsigned char*>(bytes);
    std::uint64_t h = seed;
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

} // namespace romkit
