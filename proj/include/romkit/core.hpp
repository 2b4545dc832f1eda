#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace romkit {

// Error taxonomy. Every failure surfaced by the library derives from Error so
// callers can split "bad input" (exit 1 in the CLI) from "numerical failure"
// (exit 2) by category.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
public:
    using Error::Error;
};
class ValidationError : public Error {
public:
    using Error::Error;
};
class RangeError : public Error {
public:
    using Error::Error;
};
class FormatError : public Error {
public:
    using Error::Error;
};
class IoError : public Error {
public:
    using Error::Error;
};
class ConvergenceError : public Error {
public:
    using Error::Error;
};
class ConditioningError : public Error {
public:
    using Error::Error;
};
class RankDeficiencyError : public Error {
public:
    using Error::Error;
};

using Vector = std::vector<double>;
using Complex = std::complex<double>;
using CVector = std::vector<Complex>;

/// Dense real matrix, column-major storage.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool empty() const { return rows_ == 0 || cols_ == 0; }

    double& operator()(std::size_t i, std::size_t j) { return data_[j * rows_ + i]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[j * rows_ + i]; }

    std::span<double> col(std::size_t j) { return {data_.data() + j * rows_, rows_}; }
    std::span<const double> col(std::size_t j) const { return {data_.data() + j * rows_, rows_}; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::size_t size() const { return data_.size(); }

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// Dense complex matrix, column-major storage.
class ComplexMatrix {
public:
    ComplexMatrix() = default;
    ComplexMatrix(std::size_t rows, std::size_t cols, Complex fill = {})
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static ComplexMatrix identity(std::size_t n) {
        ComplexMatrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool empty() const { return rows_ == 0 || cols_ == 0; }

    Complex& operator()(std::size_t i, std::size_t j) { return data_[j * rows_ + i]; }
    const Complex& operator()(std::size_t i, std::size_t j) const { return data_[j * rows_ + i]; }

    std::span<Complex> col(std::size_t j) { return {data_.data() + j * rows_, rows_}; }
    std::span<const Complex> col(std::size_t j) const { return {data_.data() + j * rows_, rows_}; }

    Complex* data() { return data_.data(); }
    const Complex* data() const { return data_.data(); }
    std::size_t size() const { return data_.size(); }

    friend bool operator==(const ComplexMatrix&, const ComplexMatrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<Complex> data_;
};

/// Rank-selection policy for truncated decompositions: keep everything, keep a
/// fixed count, or keep the smallest r whose squared singular values reach a
/// cumulative-energy fraction tau.
struct RankSpec {
    enum class Mode { Full, Fixed, Energy };

    Mode mode = Mode::Full;
    std::size_t count = 0;
    double tau = 1.0;

    static RankSpec full() { return {}; }
    static RankSpec fixed(std::size_t r) { return {Mode::Fixed, r, 1.0}; }
    static RankSpec energy(double tau) { return {Mode::Energy, 0, tau}; }
};

Matrix transpose(const Matrix& a);
ComplexMatrix conjugate_transpose(const ComplexMatrix& a);

double frobenius_norm(const Matrix& a);
double frobenius_norm(const ComplexMatrix& a);
double max_abs(const Matrix& a);
double norm2(std::span<const double> v);
double norm2(std::span<const Complex> v);

/// Throws ValidationError naming (row, col) of the first non-finite entry.
void require_finite(const Matrix& a, const std::string& what);
void require_finite(std::span<const double> v, const std::string& what);

/// Throws DimensionError unless the matrix has at least one row and column.
void require_nonempty(const Matrix& a, const std::string& what);

/// Shortest round-trip decimal form of a double (to_chars, general format).
std::string format_double(double x);

/// FNV-1a 64-bit over a byte range; the dataset content hash.
std::uint64_t fnv1a64(const void* bytes, std::size_t n, std::uint64_t seed = 0xcbf29ce484222325ull);

} // namespace romkit
