#include "romkit/svd.hpp"

#include "romkit/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace romkit {

namespace {

constexpr double kOrthTol = 1e-14;
constexpr int kMaxSweeps = 60;

// One-sided Jacobi on a tall-or-square matrix: rotates column pairs of b until
// all pairs are orthogonal, accumulating the rotation product in v. Singular
// values drop out as the column norms.
void jacobi_sweeps(Matrix& b, Matrix& v) {
    const std::size_t m = b.cols();
    bool rotated = true;
    for (int sweep = 0; sweep < kMaxSweeps && rotated; ++sweep) {
        rotated = false;
        for (std::size_t p = 0; p + 1 < m; ++p) {
            for (std::size_t q = p + 1; q < m; ++q) {
                auto bp = b.col(p);
                auto bq = b.col(q);
                double alpha = 0.0, beta = 0.0, gamma = 0.0;
                for (std::size_t i = 0; i < b.rows(); ++i) {
                    alpha += bp[i] * bp[i];
                    beta += bq[i] * bq[i];
                    gamma += bp[i] * bq[i];
                }
                if (alpha == 0.0 || beta == 0.0) continue;
                if (std::abs(gamma) <= kOrthTol * std::sqrt(alpha) * std::sqrt(beta)) continue;
                rotated = true;
                const double zeta = (beta - alpha) / (2.0 * gamma);
                const double t =
                    (zeta >= 0.0 ? 1.0 : -1.0) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                for (std::size_t i = 0; i < b.rows(); ++i) {
                    const double x = bp[i], y = bq[i];
                    bp[i] = c * x - s * y;
                    bq[i] = s * x + c * y;
                }
                auto vp = v.col(p);
                auto vq = v.col(q);
                for (std::size_t i = 0; i < m; ++i) {
                    const double x = vp[i], y = vq[i];
                    vp[i] = c * x - s * y;
                    vq[i] = s * x + c * y;
                }
            }
        }
        if (sweep == kMaxSweeps - 1 && rotated)
            throw ConvergenceError("svd: Jacobi sweeps did not converge for " +
                                   std::to_string(b.rows()) + "x" + std::to_string(m) + " matrix");
    }
}

// Replace a zero column of u with a unit vector orthogonal to all others
// (two Gram-Schmidt passes).
void complete_column(Matrix& u, std::size_t j) {
    const std::size_t n = u.rows();
    for (std::size_t cand = 0; cand < n; ++cand) {
        Vector w(n, 0.0);
        w[cand] = 1.0;
        for (int pass = 0; pass < 2; ++pass) {
            for (std::size_t k = 0; k < u.cols(); ++k) {
                if (k == j) continue;
                auto uk = u.col(k);
                double dot = 0.0;
                for (std::size_t i = 0; i < n; ++i) dot += uk[i] * w[i];
                for (std::size_t i = 0; i < n; ++i) w[i] -= dot * uk[i];
            }
        }
        const double nw = norm2(w);
        if (nw > 0.5) {
            auto uj = u.col(j);
            for (std::size_t i = 0; i < n; ++i) uj[i] = w[i] / nw;
            return;
        }
    }
    throw ConvergenceError("svd: failed to complete orthonormal basis");
}

// Full SVD of a tall-or-square matrix (rows >= cols).
void svd_tall(const Matrix& a, Matrix& u, Vector& sigma, Matrix& v) {
    const std::size_t m = a.cols();
    Matrix b = a;
    v = Matrix::identity(m);
    jacobi_sweeps(b, v);

    sigma.assign(m, 0.0);
    for (std::size_t j = 0; j < m; ++j) sigma[j] = norm2(b.col(j));

    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t i, std::size_t j) { return sigma[i] > sigma[j]; });

    Matrix us(a.rows(), m);
    Matrix vs(m, m);
    Vector ss(m);
    for (std::size_t j = 0; j < m; ++j) {
        const std::size_t src = order[j];
        ss[j] = sigma[src];
        auto bc = b.col(src);
        auto uc = us.col(j);
        if (ss[j] > 0.0)
            for (std::size_t i = 0; i < a.rows(); ++i) uc[i] = bc[i] / ss[j];
        auto vsrc = v.col(src);
        auto vdst = vs.col(j);
        std::copy(vsrc.begin(), vsrc.end(), vdst.begin());
    }
    for (std::size_t j = 0; j < m; ++j)
        if (ss[j] == 0.0) complete_column(us, j);

    // canonical sign: largest-magnitude entry of each left singular vector positive
    for (std::size_t j = 0; j < m; ++j) {
        auto uc = us.col(j);
        std::size_t imax = 0;
        for (std::size_t i = 1; i < uc.size(); ++i)
            if (std::abs(uc[i]) > std::abs(uc[imax])) imax = i;
        if (uc[imax] < 0.0) {
            for (double& x : uc) x = -x;
            for (double& x : vs.col(j)) x = -x;
        }
    }
    u = std::move(us);
    v = std::move(vs);
    sigma = std::move(ss);
}

} // namespace

std::size_t resolve_rank(const Vector& sigma, RankSpec spec) {
    const std::size_t full = sigma.size();
    switch (spec.mode) {
        case RankSpec::Mode::Full:
            return full;
        case RankSpec::Mode::Fixed:
            if (spec.count < 1 || spec.count > full)
                throw RangeError("rank " + std::to_string(spec.count) + " outside [1, " +
                                 std::to_string(full) + "]");
            return spec.count;
        case RankSpec::Mode::Energy: {
            if (!(spec.tau > 0.0) || spec.tau > 1.0)
                throw RangeError("energy fraction must lie in (0, 1], got " +
                                 format_double(spec.tau));
            double total = 0.0;
            for (double s : sigma) total += s * s;
            if (total == 0.0) return 1;
            double cum = 0.0;
            for (std::size_t r = 0; r < full; ++r) {
                cum += sigma[r] * sigma[r];
                if (cum >= spec.tau * total) return r + 1;
            }
            return full;
        }
    }
    return full;
}

SvdResult svd(const Matrix& a, RankSpec spec) {
    require_nonempty(a, "svd");
    require_finite(a, "svd");

    Matrix u, v;
    Vector sigma;
    if (a.rows() >= a.cols()) {
        svd_tall(a, u, sigma, v);
    } else {
        svd_tall(transpose(a), v, sigma, u);
    }

    const std::size_t r = resolve_rank(sigma, spec);
    SvdResult out;
    out.rank = r;
    out.sigma.assign(sigma.begin(), sigma.begin() + static_cast<std::ptrdiff_t>(r));
    out.u = Matrix(a.rows(), r);
    out.v = Matrix(a.cols(), r);
    for (std::size_t j = 0; j < r; ++j) {
        auto us = u.col(j);
        auto vd = out.u.col(j);
        std::copy(us.begin(), us.end(), vd.begin());
        auto vsrc = v.col(j);
        auto vdst = out.v.col(j);
        std::copy(vsrc.begin(), vsrc.end(), vdst.begin());
    }
    return out;
}

Matrix pinv(const Matrix& a, double tol) {
    require_nonempty(a, "pinv");
    require_finite(a, "pinv");
    if (tol < 0.0)
        tol = static_cast<double>(std::max(a.rows(), a.cols())) *
              std::numeric_limits<double>::epsilon();

    SvdResult f = svd(a, RankSpec::full());
    const double cutoff = tol * (f.sigma.empty() ? 0.0 : f.sigma[0]);
    Matrix v_scaled = f.v;
    for (std::size_t j = 0; j < f.rank; ++j) {
        const double inv = f.sigma[j] > cutoff ? 1.0 / f.sigma[j] : 0.0;
        for (double& x : v_scaled.col(j)) x *= inv;
    }
    return matmul(v_scaled, transpose(f.u));
}

Vector lstsq(const Matrix& a, std::span<const double> b) {
    if (b.size() != a.rows())
        throw DimensionError("lstsq: rhs length " + std::to_string(b.size()) +
                             " does not match rows " + std::to_string(a.rows()));
    SvdResult f = svd(a, RankSpec::full());
    const double cutoff = static_cast<double>(std::max(a.rows(), a.cols())) *
                          std::numeric_limits<double>::epsilon() *
                          (f.sigma.empty() ? 0.0 : f.sigma[0]);
    Vector x(a.cols(), 0.0);
    for (std::size_t j = 0; j < f.rank; ++j) {
        if (f.sigma[j] <= cutoff) continue;
        auto uj = f.u.col(j);
        double c = 0.0;
        for (std::size_t i = 0; i < a.rows(); ++i) c += uj[i] * b[i];
        c /= f.sigma[j];
        auto vj = f.v.col(j);
        for (std::size_t i = 0; i < a.cols(); ++i) x[i] += c * vj[i];
    }
    return x;
}

CVector lstsq(const ComplexMatrix& a, std::span<const Complex> b) {
    if (b.size() != a.rows())
        throw DimensionError("lstsq: rhs length " + std::to_string(b.size()) +
                             " does not match rows " + std::to_string(a.rows()));
    const std::size_t n = a.rows(), r = a.cols();
    Matrix e(2 * n, 2 * r);
    for (std::size_t j = 0; j < r; ++j)
        for (std::size_t i = 0; i < n; ++i) {
            const Complex z = a(i, j);
            e(i, j) = z.real();
            e(i + n, j) = z.imag();
            e(i, j + r) = -z.imag();
            e(i + n, j + r) = z.real();
        }
    Vector rhs(2 * n);
    for (std::size_t i = 0; i < n; ++i) {
        rhs[i] = b[i].real();
        rhs[i + n] = b[i].imag();
    }
    Vector x = lstsq(e, rhs);
    CVector z(r);
    for (std::size_t j = 0; j < r; ++j) z[j] = Complex(x[j], x[j + r]);
    return z;
}

} // namespace romkit
