#pragma once

#include "romkit/core.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace romkit {
namespace asub {

/// One gradient observation of the scalar quantity of interest. Weights are
/// normalized to sum to one before use; the uniform default is weight = 1.
struct GradientSample {
    Vector point;
    Vector gradient;
    double weight = 1.0;
};

/// Uncentered covariance of the gradients, C = sum_i w_i g_i g_i^T.
Matrix covariance(std::span<const GradientSample> samples);

/// Eigenpairs of the gradient covariance, descending; w1 holds the leading
/// active_dim eigenvectors once a selection rule has been applied.
struct ActiveSubspace {
    Vector eigenvalues;   // length N, non-increasing, clamped >= 0
    Matrix eigenvectors;  // N x N, orthonormal columns
    std::size_t active_dim = 0;
    Matrix w1;  // N x active_dim
};

ActiveSubspace decompose(const Matrix& c);

struct DimRule {
    enum class Kind { Fixed, Gap, Energy };
    Kind kind = Kind::Gap;
    std::size_t k = 0;
    double tau = 0.95;

    static DimRule fixed(std::size_t k) { return {Kind::Fixed, k, 0.0}; }
    static DimRule gap() { return {Kind::Gap, 0, 0.0}; }
    static DimRule energy(double tau) { return {Kind::Energy, 0, tau}; }
};

ActiveSubspace select_dim(ActiveSubspace as, DimRule rule);

/// Active variables y = W1^T x.
Vector project(const ActiveSubspace& as, std::span<const double> x);

/// Local-linear-regression gradients from input/output pairs: per point, a
/// least-squares affine fit over its n_neighbors nearest samples.
std::vector<GradientSample> estimate_gradients(const Matrix& points, const Vector& values,
                                               std::size_t n_neighbors);

/// Sufficient-summary-plot table, one row per sample: (y_1..y_k, f).
Matrix summary_data(const ActiveSubspace& as, const Matrix& points, const Vector& values);

namespace ref {
/// Serial reference of the covariance accumulation.
Matrix covariance(std::span<const GradientSample> samples);
} // namespace ref

// CSV interfaces: samples are row-oriented tables with a header line.

struct SampleTable {
    std::vector<std::string> names;  // parameter column names
    Matrix points;                   // N x M
    Vector values;                   // length M
};

SampleTable read_sample_csv(const std::filesystem::path& path);
std::vector<GradientSample> read_gradient_csv(const std::filesystem::path& path);
void write_gradient_csv(const std::filesystem::path& path,
                        std::span<const GradientSample> samples,
                        std::span<const std::string> names);
void write_eigenvalue_csv(const std::filesystem::path& path, const ActiveSubspace& as);
void write_eigenvector_csv(const std::filesystem::path& path, const ActiveSubspace& as);
ActiveSubspace read_subspace_csv(const std::filesystem::path& eigenvalue_path,
                                 const std::filesystem::path& eigenvector_path);
void write_summary_csv(const std::filesystem::path& path, const Matrix& table);

} // namespace asub
} // namespace romkit
