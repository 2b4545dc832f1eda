#pragma once

#include "romkit/core.hpp"

#include <optional>

namespace romkit {

/// Scattered-data interpolator selection shared by the parametric reduced
/// models and the mesh morphing: radial basis kernels solved through a
/// regularized node system, or Shepard inverse-distance weighting.
struct InterpolatorConfig {
    enum class Kind { RbfGaussian, RbfThinPlate, RbfMultiquadric, Idw };

    Kind kind = Kind::Idw;
    double epsilon = 1.0;        // shape parameter for gaussian / multiquadric
    double power = 2.0;          // Shepard exponent
    double regularization = 0.0; // lambda added to the kernel diagonal

    bool is_rbf() const { return kind != Kind::Idw; }
};

void validate(const InterpolatorConfig& cfg);
std::string kind_name(InterpolatorConfig::Kind kind);
InterpolatorConfig::Kind kind_from_name(const std::string& name);

/// Radial kernel value at distance d >= 0.
double rbf_phi(const InterpolatorConfig& cfg, double d);

/// Euclidean distance between column j of nodes and the query point.
double node_distance(const Matrix& nodes, std::size_t j, std::span<const double> query);

/// Shepard weights for a query against node columns; a query within 1e-12 of
/// a node short-circuits to that node (weights one-hot, node_hit set).
struct IdwWeights {
    Vector w;
    std::optional<std::size_t> node_hit;
};

IdwWeights idw_weights(const Matrix& nodes, std::span<const double> query, double power);

/// Kernel matrix K_ij = phi(||node_i - node_j||) plus lambda on the diagonal.
Matrix rbf_kernel_matrix(const Matrix& nodes, const InterpolatorConfig& cfg);

/// Solves (K + lambda I) w = values^T; values is q x m (one row per output
/// component), the result is m x q node coefficients.
Matrix rbf_fit(const Matrix& nodes, const Matrix& values, const InterpolatorConfig& cfg);

/// Kernel row phi(||query - node_j||) for all nodes.
Vector rbf_eval_row(const Matrix& nodes, std::span<const double> query,
                    const InterpolatorConfig& cfg);

/// Throws ValidationError if any two node columns coincide within 1e-12.
void require_distinct_nodes(const Matrix& nodes, const std::string& what);

} // namespace romkit
