#pragma once

#include "romkit/core.hpp"
#include "romkit/interp.hpp"
#include "romkit/snapshots.hpp"

#include <filesystem>
#include <optional>

namespace romkit {
namespace podi {

/// Orthonormal basis of dominant snapshot structures (left singular vectors).
struct PodBasis {
    Matrix modes;            // n_dof x r, orthonormal columns
    Vector singular_values;  // length r, non-increasing
    double energy_fraction = 1.0;
};

PodBasis pod(const SnapshotSet& set, RankSpec rank_spec);

/// Modal coefficients modes^T * data, r x m.
Matrix project(const PodBasis& basis, const Matrix& data);
Matrix project(const PodBasis& basis, const SnapshotSet& set);

/// Equation-free parametric surrogate: POD basis plus an interpolant of the
/// modal coefficients over the sampled parameter points.
struct PodiModel {
    PodBasis basis;
    Matrix train_params;  // n_params x m
    Matrix coeffs;        // r x m
    InterpolatorConfig interp;
    Matrix rbf_coefficients;  // m x r, empty for idw (rebuilt on load)
};

PodiModel fit(const SnapshotSet& set, RankSpec rank_spec, const InterpolatorConfig& interp);

struct EvalResult {
    Vector state;
    bool outside_train_box = false;       // query left the training bounding box
    std::optional<std::size_t> node_hit;  // query coincided with a training point
};

EvalResult evaluate(const PodiModel& model, std::span<const double> mu);

/// romk container, section tag "PODI".
void save_model(const PodiModel& model, const std::filesystem::path& path);
PodiModel load_model(const std::filesystem::path& path);

/// Max relative error of evaluate() against the training snapshots.
double training_residual(const PodiModel& model, const SnapshotSet& set);

} // namespace podi
} // namespace romkit
