#include "romkit/morph.hpp"

#include "romkit/parallel.hpp"

#include <cmath>

namespace romkit {
namespace morph {

namespace {

double dot3(const std::array<double, 3>& a, const std::array<double, 3>& b) {
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

// All Bernstein basis values of the given degree at s, by the de Casteljau
// style recurrence.
void bernstein_all(std::size_t degree, double s, std::span<double> out) {
    out[0] = 1.0;
    for (std::size_t d = 1; d <= degree; ++d) {
        double saved = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
            const double tmp = out[i];
            out[i] = saved + (1.0 - s) * tmp;
            saved = s * tmp;
        }
        out[d] = saved;
    }
}

// Derivatives of the Bernstein basis: B'_i^n(s) = n (B_{i-1}^{n-1} - B_i^{n-1}).
void bernstein_derivative_all(std::size_t degree, double s, std::span<double> out) {
    if (degree == 0) {
        out[0] = 0.0;
        return;
    }
    std::vector<double> lower(degree);
    bernstein_all(degree - 1, s, lower);
    const double n = static_cast<double>(degree);
    for (std::size_t i = 0; i <= degree; ++i) {
        const double left = i > 0 ? lower[i - 1] : 0.0;
        const double right = i < degree ? lower[i] : 0.0;
        out[i] = n * (left - right);
    }
}

struct LocalFrame {
    std::array<std::array<double, 3>, 3> dirs;  // axis / |axis|^2 rows
};

LocalFrame local_frame(const FfdLattice& lattice) {
    LocalFrame f;
    for (std::size_t a = 0; a < 3; ++a) {
        const double len2 = dot3(lattice.axes[a], lattice.axes[a]);
        for (std::size_t c = 0; c < 3; ++c) f.dirs[a][c] = lattice.axes[a][c] / len2;
    }
    return f;
}

bool local_coords(const FfdLattice& lattice, const LocalFrame& frame, const double* x,
                  std::array<double, 3>& stu) {
    const std::array<double, 3> rel = {x[0] - lattice.origin[0], x[1] - lattice.origin[1],
                                       x[2] - lattice.origin[2]};
    for (std::size_t a = 0; a < 3; ++a) {
        stu[a] = dot3(rel, frame.dirs[a]);
        if (stu[a] < 0.0 || stu[a] > 1.0) return false;
    }
    return true;
}

void deform_point(const FfdLattice& lattice, const LocalFrame& frame, const double* in,
                  double* out) {
    std::array<double, 3> stu;
    if (!local_coords(lattice, frame, in, stu)) {
        out[0] = in[0];
        out[1] = in[1];
        out[2] = in[2];
        return;
    }
    std::vector<double> bi(lattice.dims[0]), bj(lattice.dims[1]), bk(lattice.dims[2]);
    bernstein_all(lattice.dims[0] - 1, stu[0], bi);
    bernstein_all(lattice.dims[1] - 1, stu[1], bj);
    bernstein_all(lattice.dims[2] - 1, stu[2], bk);
    double dx = 0.0, dy = 0.0, dz = 0.0;
    for (std::size_t k = 0; k < lattice.dims[2]; ++k)
        for (std::size_t j = 0; j < lattice.dims[1]; ++j) {
            const double bjk = bj[j] * bk[k];
            for (std::size_t i = 0; i < lattice.dims[0]; ++i) {
                const double w = bi[i] * bjk;
                const std::array<double, 3>& d = lattice.displacement(i, j, k);
                dx += w * d[0];
                dy += w * d[1];
                dz += w * d[2];
            }
        }
    out[0] = in[0] + dx;
    out[1] = in[1] + dy;
    out[2] = in[2] + dz;
}

PointCloud ffd_run(const FfdLattice& lattice, const PointCloud& cloud, bool parallel) {
    validate(lattice);
    validate(cloud);
    const LocalFrame frame = local_frame(lattice);
    PointCloud out;
    out.points = Matrix(3, cloud.count());
    const auto np = static_cast<std::int64_t>(cloud.count());
    if (parallel) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(thread_count())
#endif
        for (std::int64_t p = 0; p < np; ++p)
            deform_point(lattice, frame, cloud.points.col(static_cast<std::size_t>(p)).data(),
                         out.points.col(static_cast<std::size_t>(p)).data());
    } else {
        for (std::int64_t p = 0; p < np; ++p)
            deform_point(lattice, frame, cloud.points.col(static_cast<std::size_t>(p)).data(),
                         out.points.col(static_cast<std::size_t>(p)).data());
    }
    return out;
}

// Fused Shepard accumulation, no per-point allocations.
void idw_point(const PointCloud& controls, const Matrix& displacements, double power,
               const double* in, double* out) {
    const std::size_t c = controls.count();
    double wsum = 0.0, dx = 0.0, dy = 0.0, dz = 0.0;
    for (std::size_t j = 0; j < c; ++j) {
        auto cj = controls.points.col(j);
        const double ex = in[0] - cj[0], ey = in[1] - cj[1], ez = in[2] - cj[2];
        const double dist = std::sqrt(ex * ex + ey * ey + ez * ez);
        if (dist <= 1e-12) {
            auto d = displacements.col(j);
            out[0] = in[0] + d[0];
            out[1] = in[1] + d[1];
            out[2] = in[2] + d[2];
            return;
        }
        const double w = std::pow(dist, -power);
        auto d = displacements.col(j);
        wsum += w;
        dx += w * d[0];
        dy += w * d[1];
        dz += w * d[2];
    }
    out[0] = in[0] + dx / wsum;
    out[1] = in[1] + dy / wsum;
    out[2] = in[2] + dz / wsum;
}

PointCloud idw_run(const PointCloud& controls, const Matrix& displacements,
                   const PointCloud& cloud, double power, bool parallel) {
    validate(controls);
    validate(cloud);
    if (controls.count() == 0) throw ValidationError("idw_deform: no control points");
    if (!(power > 0.0)) throw ValidationError("idw_deform: power must be positive");
    if (displacements.rows() != 3 || displacements.cols() != controls.count())
        throw DimensionError("idw_deform: displacement table must be 3x" +
                             std::to_string(controls.count()));
    require_finite(displacements, "idw displacements");
    require_distinct_nodes(controls.points, "idw controls");

    PointCloud out;
    out.points = Matrix(3, cloud.count());
    const auto np = static_cast<std::int64_t>(cloud.count());
    if (parallel) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(thread_count())
#endif
        for (std::int64_t p = 0; p < np; ++p)
            idw_point(controls, displacements, power,
                      cloud.points.col(static_cast<std::size_t>(p)).data(),
                      out.points.col(static_cast<std::size_t>(p)).data());
    } else {
        for (std::int64_t p = 0; p < np; ++p)
            idw_point(controls, displacements, power,
                      cloud.points.col(static_cast<std::size_t>(p)).data(),
                      out.points.col(static_cast<std::size_t>(p)).data());
    }
    return out;
}

} // namespace

void validate(const PointCloud& cloud) {
    if (cloud.points.rows() != 3)
        throw DimensionError("point cloud must have 3 coordinate rows, got " +
                             std::to_string(cloud.points.rows()));
    require_finite(cloud.points, "point cloud");
}

void validate(const FfdLattice& lattice) {
    for (std::size_t a = 0; a < 3; ++a) {
        if (lattice.dims[a] < 2)
            throw ValidationError("ffd lattice needs at least 2 control points per axis");
        const double len = std::sqrt(dot3(lattice.axes[a], lattice.axes[a]));
        if (!(len > 0.0)) throw ValidationError("ffd lattice axis " + std::to_string(a) +
                                                " is degenerate (zero length)");
    }
    for (std::size_t a = 0; a < 3; ++a)
        for (std::size_t b = a + 1; b < 3; ++b) {
            const double la = std::sqrt(dot3(lattice.axes[a], lattice.axes[a]));
            const double lb = std::sqrt(dot3(lattice.axes[b], lattice.axes[b]));
            if (std::abs(dot3(lattice.axes[a], lattice.axes[b])) > 1e-10 * la * lb)
                throw ValidationError("ffd lattice axes " + std::to_string(a) + " and " +
                                      std::to_string(b) + " are not orthogonal");
        }
    if (lattice.displacements.size() != lattice.control_count())
        throw DimensionError("ffd lattice has " + std::to_string(lattice.displacements.size()) +
                             " displacements for " + std::to_string(lattice.control_count()) +
                             " controls");
    for (const auto& d : lattice.displacements)
        if (!std::isfinite(d[0]) || !std::isfinite(d[1]) || !std::isfinite(d[2]))
            throw ValidationError("ffd lattice has a non-finite displacement");
}

std::vector<std::array<std::size_t, 3>> boundary_controls(const FfdLattice& lattice) {
    std::vector<std::array<std::size_t, 3>> out;
    for (std::size_t k = 0; k < lattice.dims[2]; ++k)
        for (std::size_t j = 0; j < lattice.dims[1]; ++j)
            for (std::size_t i = 0; i < lattice.dims[0]; ++i) {
                const auto& d = lattice.displacement(i, j, k);
                if (d[0] == 0.0 && d[1] == 0.0 && d[2] == 0.0) continue;
                const bool boundary = i == 0 || i == lattice.dims[0] - 1 || j == 0 ||
                                      j == lattice.dims[1] - 1 || k == 0 ||
                                      k == lattice.dims[2] - 1;
                if (boundary) out.push_back({i, j, k});
            }
    return out;
}

PointCloud ffd_deform(const FfdLattice& lattice, const PointCloud& cloud,
                      std::vector<std::array<std::size_t, 3>>* warnings) {
    if (warnings != nullptr) *warnings = boundary_controls(lattice);
    return ffd_run(lattice, cloud, true);
}

Matrix ffd_jacobian(const FfdLattice& lattice, const std::array<double, 3>& x) {
    validate(lattice);
    const LocalFrame frame = local_frame(lattice);
    Matrix jac = Matrix::identity(3);
    std::array<double, 3> stu;
    if (!local_coords(lattice, frame, x.data(), stu)) return jac;

    std::vector<double> bi(lattice.dims[0]), bj(lattice.dims[1]), bk(lattice.dims[2]);
    std::vector<double> dbi(lattice.dims[0]), dbj(lattice.dims[1]), dbk(lattice.dims[2]);
    bernstein_all(lattice.dims[0] - 1, stu[0], bi);
    bernstein_all(lattice.dims[1] - 1, stu[1], bj);
    bernstein_all(lattice.dims[2] - 1, stu[2], bk);
    bernstein_derivative_all(lattice.dims[0] - 1, stu[0], dbi);
    bernstein_derivative_all(lattice.dims[1] - 1, stu[1], dbj);
    bernstein_derivative_all(lattice.dims[2] - 1, stu[2], dbk);

    // dD/ds, dD/dt, dD/du, then chain through ds/dx = axis / |axis|^2
    std::array<std::array<double, 3>, 3> dd{};
    for (std::size_t k = 0; k < lattice.dims[2]; ++k)
        for (std::size_t j = 0; j < lattice.dims[1]; ++j)
            for (std::size_t i = 0; i < lattice.dims[0]; ++i) {
                const auto& d = lattice.displacement(i, j, k);
                const double ws = dbi[i] * bj[j] * bk[k];
                const double wt = bi[i] * dbj[j] * bk[k];
                const double wu = bi[i] * bj[j] * dbk[k];
                for (std::size_t c = 0; c < 3; ++c) {
                    dd[0][c] += ws * d[c];
                    dd[1][c] += wt * d[c];
                    dd[2][c] += wu * d[c];
                }
            }
    for (std::size_t c = 0; c < 3; ++c)
        for (std::size_t col = 0; col < 3; ++col)
            for (std::size_t a = 0; a < 3; ++a) jac(c, col) += dd[a][c] * frame.dirs[a][col];
    return jac;
}

PointCloud idw_deform(const PointCloud& controls, const Matrix& displacements,
                      const PointCloud& cloud, double power) {
    return idw_run(controls, displacements, cloud, power, true);
}

PointCloud rbf_deform(const PointCloud& controls, const Matrix& displacements,
                      const PointCloud& cloud, const InterpolatorConfig& kernel) {
    validate(controls);
    validate(cloud);
    romkit::validate(kernel);
    if (!kernel.is_rbf()) throw ValidationError("rbf_deform: configuration selects idw");
    if (displacements.rows() != 3 || displacements.cols() != controls.count())
        throw DimensionError("rbf_deform: displacement table must be 3x" +
                             std::to_string(controls.count()));
    require_finite(displacements, "rbf displacements");
    require_distinct_nodes(controls.points, "rbf controls");

    // node coefficients per Cartesian component: C x 3
    const Matrix gamma = rbf_fit(controls.points, displacements, kernel);

    PointCloud out;
    out.points = Matrix(3, cloud.count());
    const auto np = static_cast<std::int64_t>(cloud.count());
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(thread_count())
#endif
    for (std::int64_t pi = 0; pi < np; ++pi) {
        const auto p = static_cast<std::size_t>(pi);
        auto in = cloud.points.col(p);
        const Vector row = rbf_eval_row(controls.points, in, kernel);
        auto o = out.points.col(p);
        for (std::size_t c = 0; c < 3; ++c) {
            double d = 0.0;
            for (std::size_t j = 0; j < row.size(); ++j) d += row[j] * gamma(j, c);
            o[c] = in[c] + d;
        }
    }
    return out;
}

namespace ref {

PointCloud ffd_deform(const FfdLattice& lattice, const PointCloud& cloud) {
    return ffd_run(lattice, cloud, false);
}

PointCloud idw_deform(const PointCloud& controls, const Matrix& displacements,
                      const PointCloud& cloud, double power) {
    return idw_run(controls, displacements, cloud, power, false);
}

} // namespace ref

} // namespace morph
} // namespace romkit
