#pragma once

#include "romkit/core.hpp"
#include "romkit/interp.hpp"

#include <array>
#include <cstddef>
#include <vector>

namespace romkit {
namespace morph {

/// Cartesian points, one per column.
struct PointCloud {
    Matrix points;  // 3 x P

    std::size_t count() const { return points.cols(); }
};

void validate(const PointCloud& cloud);

/// Axis-orthogonal Bernstein control lattice. dims are control counts per
/// axis (>= 2 each, polynomial degree = count - 1); displacements are stored
/// flat with index i + dims[0] * (j + dims[1] * k).
struct FfdLattice {
    std::array<double, 3> origin{};
    std::array<std::array<double, 3>, 3> axes{};  // edge vectors spanning the box
    std::array<std::size_t, 3> dims{2, 2, 2};
    std::vector<std::array<double, 3>> displacements;

    std::size_t control_count() const { return dims[0] * dims[1] * dims[2]; }
    std::size_t flat_index(std::size_t i, std::size_t j, std::size_t k) const {
        return i + dims[0] * (j + dims[1] * k);
    }
    std::array<double, 3>& displacement(std::size_t i, std::size_t j, std::size_t k) {
        return displacements[flat_index(i, j, k)];
    }
    const std::array<double, 3>& displacement(std::size_t i, std::size_t j, std::size_t k) const {
        return displacements[flat_index(i, j, k)];
    }
};

void validate(const FfdLattice& lattice);

/// Nonzero displacements on the outermost control layers; moving those breaks
/// C0 continuity at the lattice boundary, so deformation reports them.
std::vector<std::array<std::size_t, 3>> boundary_controls(const FfdLattice& lattice);

/// Trivariate Bernstein deformation. Points whose local coordinates leave
/// [0,1]^3 are passed through bitwise unchanged. When warnings is non-null it
/// receives the boundary-control report.
PointCloud ffd_deform(const FfdLattice& lattice, const PointCloud& cloud,
                      std::vector<std::array<std::size_t, 3>>* warnings = nullptr);

/// Analytic Jacobian of the FFD map at one point (identity outside the box).
Matrix ffd_jacobian(const FfdLattice& lattice, const std::array<double, 3>& x);

/// Shepard deformation: displaces every point by the inverse-distance-weighted
/// combination of the control displacements; exact at controls.
PointCloud idw_deform(const PointCloud& controls, const Matrix& displacements,
                      const PointCloud& cloud, double power);

/// Radial-basis deformation: solves the control kernel system per Cartesian
/// component, then displaces the cloud; exact at controls when lambda = 0.
PointCloud rbf_deform(const PointCloud& controls, const Matrix& displacements,
                      const PointCloud& cloud, const InterpolatorConfig& kernel);

namespace ref {
PointCloud ffd_deform(const FfdLattice& lattice, const PointCloud& cloud);
PointCloud idw_deform(const PointCloud& controls, const Matrix& displacements,
                      const PointCloud& cloud, double power);
} // namespace ref

} // namespace morph
} // namespace romkit
