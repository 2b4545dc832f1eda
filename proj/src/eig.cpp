#include "romkit/eig.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace romkit {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

// Householder reduction to upper Hessenberg form, accumulating the orthogonal
// similarity q so that a = q * h * q^T.
void hessenberg(Matrix& h, Matrix& q) {
    const std::size_t n = h.rows();
    q = Matrix::identity(n);
    if (n < 3) return;
    Vector v(n);
    for (std::size_t k = 0; k + 2 < n; ++k) {
        double scale = 0.0;
        for (std::size_t i = k + 1; i < n; ++i) scale += std::abs(h(i, k));
        if (scale == 0.0) continue;
        double sq = 0.0;
        for (std::size_t i = k + 1; i < n; ++i) {
            v[i] = h(i, k) / scale;
            sq += v[i] * v[i];
        }
        double alpha = std::sqrt(sq);
        if (v[k + 1] > 0.0) alpha = -alpha;
        v[k + 1] -= alpha;
        const double denom = -alpha * v[k + 1];
        if (denom == 0.0) continue;

        // h <- P h P with P = I - v v^T / denom
        for (std::size_t j = 0; j < n; ++j) {
            double s = 0.0;
            for (std::size_t i = k + 1; i < n; ++i) s += v[i] * h(i, j);
            s /= denom;
            for (std::size_t i = k + 1; i < n; ++i) h(i, j) -= s * v[i];
        }
        for (std::size_t i = 0; i < n; ++i) {
            double s = 0.0;
            for (std::size_t j = k + 1; j < n; ++j) s += h(i, j) * v[j];
            s /= denom;
            for (std::size_t j = k + 1; j < n; ++j) h(i, j) -= s * v[j];
        }
        for (std::size_t i = 0; i < n; ++i) {
            double s = 0.0;
            for (std::size_t j = k + 1; j < n; ++j) s += q(i, j) * v[j];
            s /= denom;
            for (std::size_t j = k + 1; j < n; ++j) q(i, j) -= s * v[j];
        }
        h(k + 1, k) = alpha * scale;
        for (std::size_t i = k + 2; i < n; ++i) h(i, k) = 0.0;
    }
}

struct Givens {
    double c;
    Complex s;
};

// Unitary [[c, s], [-conj(s), c]] with c real that zeroes the second entry.
Givens make_givens(Complex a, Complex b) {
    if (b == Complex{}) return {1.0, {}};
    if (a == Complex{}) return {0.0, std::conj(b) / std::abs(b)};
    const double d = std::hypot(std::abs(a), std::abs(b));
    const double c = std::abs(a) / d;
    const Complex s = (a / std::abs(a)) * std::conj(b) / d;
    return {c, s};
}

void rotate_rows(ComplexMatrix& h, std::size_t k, const Givens& g, std::size_t col_lo,
                 std::size_t col_hi) {
    for (std::size_t j = col_lo; j < col_hi; ++j) {
        const Complex x = h(k, j), y = h(k + 1, j);
        h(k, j) = g.c * x + g.s * y;
        h(k + 1, j) = -std::conj(g.s) * x + g.c * y;
    }
}

void rotate_cols(ComplexMatrix& h, std::size_t k, const Givens& g, std::size_t row_hi) {
    for (std::size_t i = 0; i < row_hi; ++i) {
        const Complex x = h(i, k), y = h(i, k + 1);
        h(i, k) = g.c * x + std::conj(g.s) * y;
        h(i, k + 1) = -g.s * x + g.c * y;
    }
}

Complex wilkinson_shift(Complex a, Complex b, Complex c, Complex d) {
    const Complex tr = a + d;
    const Complex det = a * d - b * c;
    const Complex disc = std::sqrt(tr * tr - 4.0 * det);
    const Complex l1 = 0.5 * (tr + disc);
    const Complex l2 = 0.5 * (tr - disc);
    return std::abs(l1 - d) < std::abs(l2 - d) ? l1 : l2;
}

// Implicit single-shift QR on the Hessenberg block [lo, hi], accumulating the
// unitary transforms into u. Standard bulge chase.
void qr_step(ComplexMatrix& h, ComplexMatrix& u, std::size_t lo, std::size_t hi, Complex shift) {
    const std::size_t n = h.rows();
    Complex x = h(lo, lo) - shift;
    Complex z = h(lo + 1, lo);
    for (std::size_t k = lo; k < hi; ++k) {
        const Givens g = make_givens(x, z);
        rotate_rows(h, k, g, k > 0 ? k - 1 : 0, n);
        rotate_cols(h, k, g, std::min(k + 3, n));
        for (std::size_t i = 0; i < n; ++i) {
            const Complex a = u(i, k), b = u(i, k + 1);
            u(i, k) = g.c * a + std::conj(g.s) * b;
            u(i, k + 1) = -g.s * a + g.c * b;
        }
        if (k + 1 < hi) {
            x = h(k + 1, k);
            z = h(k + 2, k);
        }
    }
}

// Complex Schur form of an upper Hessenberg matrix: h becomes upper triangular,
// u accumulates so the original matrix equals u * h * u^H.
void schur(ComplexMatrix& h, ComplexMatrix& u) {
    const std::size_t n = h.rows();
    if (n == 1) return;
    std::size_t hi = n - 1;
    int iters_here = 0;
    int total = 0;
    const int max_total = 60 * static_cast<int>(n);
    while (true) {
        // deflate converged trailing eigenvalues
        std::size_t lo = hi;
        while (lo > 0) {
            const double off = std::abs(h(lo, lo - 1));
            if (off <= kEps * (std::abs(h(lo - 1, lo - 1)) + std::abs(h(lo, lo)))) {
                h(lo, lo - 1) = 0.0;
                break;
            }
            --lo;
        }
        if (lo == hi) {
            if (hi == 0) break;
            --hi;
            iters_here = 0;
            continue;
        }
        if (++total > max_total)
            throw ConvergenceError("eig: QR iteration did not converge for " + std::to_string(n) +
                                   "x" + std::to_string(n) + " matrix");
        Complex shift;
        if (++iters_here % 12 == 0) {
            // exceptional shift to break cycling
            shift = h(hi, hi) + Complex(0.75 * std::abs(h(hi, hi - 1)), 0.0);
        } else {
            shift = wilkinson_shift(h(hi - 1, hi - 1), h(hi - 1, hi), h(hi, hi - 1), h(hi, hi));
        }
        qr_step(h, u, lo, hi, shift);
    }
}

// Eigenvector of the upper triangular t for the eigenvalue at position idx,
// by back-substitution; small denominators are perturbed.
CVector triangular_eigvec(const ComplexMatrix& t, std::size_t idx) {
    const std::size_t n = t.rows();
    CVector y(n, Complex{});
    y[idx] = 1.0;
    const double small = kEps * std::max(1.0, frobenius_norm(t));
    for (std::size_t jj = idx; jj-- > 0;) {
        Complex num{};
        for (std::size_t k = jj + 1; k <= idx; ++k) num += t(jj, k) * y[k];
        Complex den = t(jj, jj) - t(idx, idx);
        if (std::abs(den) < small) den = Complex(small, 0.0);
        y[jj] = -num / den;
    }
    return y;
}

void normalize_eigvec(std::span<Complex> w) {
    const double nw = norm2(std::span<const Complex>(w.data(), w.size()));
    if (nw == 0.0) return;
    for (Complex& x : w) x /= nw;
    // rotate the first significant component onto the positive real axis
    for (const Complex& x : w) {
        if (std::abs(x) > 1e-12) {
            const Complex phase = std::conj(x) / std::abs(x);
            for (Complex& y : w) y *= phase;
            break;
        }
    }
}

// Pair eigenvalues of a real matrix into exact conjugates and sort by
// (|lambda| desc, |arg| asc, Im desc).
void canonicalize_real_spectrum(CVector& values, ComplexMatrix& vectors) {
    const std::size_t n = values.size();
    double scale = 0.0;
    for (const Complex& v : values) scale = std::max(scale, std::abs(v));
    const double real_tol = 1e-12 * (1.0 + scale);

    std::vector<bool> done(n, false);
    for (std::size_t i = 0; i < n; ++i) {
        if (done[i]) continue;
        if (std::abs(values[i].imag()) <= real_tol) {
            values[i] = Complex(values[i].real(), 0.0);
            done[i] = true;
            continue;
        }
        std::size_t best = n;
        double best_dist = std::numeric_limits<double>::max();
        for (std::size_t j = i + 1; j < n; ++j) {
            if (done[j]) continue;
            const double d = std::abs(values[j] - std::conj(values[i]));
            if (d < best_dist) {
                best_dist = d;
                best = j;
            }
        }
        if (best == n || best_dist > 1e-6 * (1.0 + scale)) {
            done[i] = true; // leave unpaired; residual tests will judge
            continue;
        }
        const Complex lam(0.5 * (values[i].real() + values[best].real()),
                          0.5 * (values[i].imag() - values[best].imag()));
        values[i] = lam;
        values[best] = std::conj(lam);
        auto wi = vectors.col(i);
        auto wb = vectors.col(best);
        for (std::size_t k = 0; k < vectors.rows(); ++k) wb[k] = std::conj(wi[k]);
        done[i] = done[best] = true;
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
        return std::abs(values[i]) > std::abs(values[j]);
    });
    // near-ties in modulus order by |argument|, conjugates adjacent with the
    // positive-imaginary member first
    const double mod_tol = 1e-12 * (1.0 + scale);
    std::size_t run = 0;
    while (run < n) {
        std::size_t end = run + 1;
        while (end < n &&
               std::abs(values[order[end - 1]]) - std::abs(values[order[end]]) <= mod_tol)
            ++end;
        std::stable_sort(order.begin() + static_cast<std::ptrdiff_t>(run),
                         order.begin() + static_cast<std::ptrdiff_t>(end),
                         [&](std::size_t i, std::size_t j) {
                             const double ai = std::abs(std::arg(values[i]));
                             const double aj = std::abs(std::arg(values[j]));
                             if (ai != aj) return ai < aj;
                             return values[i].imag() > values[j].imag();
                         });
        run = end;
    }
    CVector sv(n);
    ComplexMatrix sw(vectors.rows(), n);
    for (std::size_t j = 0; j < n; ++j) {
        sv[j] = values[order[j]];
        auto src = vectors.col(order[j]);
        auto dst = sw.col(j);
        std::copy(src.begin(), src.end(), dst.begin());
    }
    values = std::move(sv);
    vectors = std::move(sw);
}

} // namespace

EigResult eig(const Matrix& a) {
    if (a.rows() != a.cols())
        throw DimensionError("eig: matrix is " + std::to_string(a.rows()) + "x" +
                             std::to_string(a.cols()) + ", square required");
    require_nonempty(a, "eig");
    require_finite(a, "eig");
    const std::size_t n = a.rows();

    Matrix h_real = a;
    Matrix q_real;
    hessenberg(h_real, q_real);

    ComplexMatrix t(n, n);
    ComplexMatrix u(n, n);
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t i = 0; i < n; ++i) {
            t(i, j) = Complex(h_real(i, j), 0.0);
            u(i, j) = Complex(q_real(i, j), 0.0);
        }
    schur(t, u);

    EigResult out;
    out.values.resize(n);
    out.vectors = ComplexMatrix(n, n);
    for (std::size_t i = 0; i < n; ++i) out.values[i] = t(i, i);
    for (std::size_t i = 0; i < n; ++i) {
        const CVector y = triangular_eigvec(t, i);
        auto w = out.vectors.col(i);
        for (std::size_t r = 0; r < n; ++r) {
            Complex s{};
            for (std::size_t k = 0; k <= i; ++k) s += u(r, k) * y[k];
            w[r] = s;
        }
        normalize_eigvec(w);
    }
    canonicalize_real_spectrum(out.values, out.vectors);
    for (std::size_t i = 0; i < n; ++i) normalize_eigvec(out.vectors.col(i));
    return out;
}

SymEigResult eig_sym(const Matrix& a) {
    if (a.rows() != a.cols())
        throw DimensionError("eig_sym: matrix is " + std::to_string(a.rows()) + "x" +
                             std::to_string(a.cols()) + ", square required");
    require_nonempty(a, "eig_sym");
    require_finite(a, "eig_sym");
    const std::size_t n = a.rows();

    Matrix d = a;
    Matrix v = Matrix::identity(n);
    const double norm = std::max(frobenius_norm(a), 1e-300);
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p + 1 < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off += d(p, q) * d(p, q);
        if (std::sqrt(2.0 * off) <= 1e-14 * norm) break;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = d(p, q);
                if (std::abs(apq) <= 1e-300) continue;
                const double tau = (d(q, q) - d(p, p)) / (2.0 * apq);
                const double t =
                    (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                for (std::size_t k = 0; k < n; ++k) {
                    const double x = d(p, k), y = d(q, k);
                    d(p, k) = c * x - s * y;
                    d(q, k) = s * x + c * y;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double x = d(k, p), y = d(k, q);
                    d(k, p) = c * x - s * y;
                    d(k, q) = s * x + c * y;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double x = v(k, p), y = v(k, q);
                    v(k, p) = c * x - s * y;
                    v(k, q) = s * x + c * y;
                }
            }
        }
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t i, std::size_t j) { return d(i, i) > d(j, j); });
    SymEigResult out;
    out.values.resize(n);
    out.vectors = Matrix(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        out.values[j] = d(order[j], order[j]);
        auto src = v.col(order[j]);
        auto dst = out.vectors.col(j);
        std::copy(src.begin(), src.end(), dst.begin());
        std::size_t imax = 0;
        for (std::size_t i = 1; i < n; ++i)
            if (std::abs(dst[i]) > std::abs(dst[imax])) imax = i;
        if (dst[imax] < 0.0)
            for (double& x : dst) x = -x;
    }
    return out;
}

} // namespace romkit
