#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "romkit/asub.hpp"
#include "romkit/parallel.hpp"
#include "test_support.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

using namespace romkit;
using test::random_matrix;

namespace {

asub::GradientSample sample(Vector point, Vector gradient, double weight = 1.0) {
    return {std::move(point), std::move(gradient), weight};
}

double cosine(std::span<const double> a, std::span<const double> b) {
    double dot = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) dot += a[i] * b[i];
    return dot / (norm2(a) * norm2(b));
}

// analytic gradients of f(x) = (a^T x)^2 on uniform samples
std::vector<asub::GradientSample> quadratic_ridge_samples(const Vector& a, std::size_t count,
                                                          std::uint32_t seed) {
    std::mt19937 gen(seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    std::vector<asub::GradientSample> out;
    for (std::size_t s = 0; s < count; ++s) {
        Vector x(a.size());
        for (double& xi : x) xi = dist(gen);
        double ax = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) ax += a[i] * x[i];
        Vector g(a.size());
        for (std::size_t i = 0; i < a.size(); ++i) g[i] = 2.0 * ax * a[i];
        out.push_back(sample(std::move(x), std::move(g)));
    }
    return out;
}

} // namespace

TEST_CASE("covariance of zero gradients is the zero matrix") {
    std::vector<asub::GradientSample> s = {sample({1.0, 2.0}, {0.0, 0.0}),
                                           sample({0.5, -1.0}, {0.0, 0.0})};
    CHECK(max_abs(asub::covariance(s)) == 0.0);
}

TEST_CASE("covariance of a single gradient is its outer product") {
    std::vector<asub::GradientSample> s = {sample({0.0, 0.0}, {1.0, 0.0})};
    const Matrix c = asub::covariance(s);
    CHECK(c(0, 0) == 1.0);
    CHECK(c(0, 1) == 0.0);
    CHECK(c(1, 0) == 0.0);
    CHECK(c(1, 1) == 0.0);
}

TEST_CASE("covariance averages outer products with normalized weights") {
    std::vector<asub::GradientSample> s = {sample({0.0, 0.0}, {1.0, 1.0}),
                                           sample({0.0, 0.0}, {1.0, -1.0})};
    const Matrix c = asub::covariance(s);
    CHECK(c(0, 0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(c(1, 1) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(std::abs(c(0, 1)) <= 1e-15);
}

TEST_CASE("covariance trace equals the weighted gradient energy") {
    std::mt19937 gen(7);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    std::vector<asub::GradientSample> s;
    double energy = 0.0, wsum = 0.0;
    for (int i = 0; i < 40; ++i) {
        Vector g = {dist(gen), dist(gen), dist(gen)};
        const double w = 0.25 + 0.5 * (dist(gen) + 1.0);
        s.push_back(sample({0.0, 0.0, 0.0}, g, w));
        wsum += w;
    }
    for (const auto& gs : s) {
        double n2 = 0.0;
        for (double g : gs.gradient) n2 += g * g;
        energy += gs.weight / wsum * n2;
    }
    const Matrix c = asub::covariance(s);
    CHECK(c(0, 0) + c(1, 1) + c(2, 2) == doctest::Approx(energy).epsilon(1e-12));
}

TEST_CASE("parallel covariance is bit-identical to the serial reference") {
    std::vector<asub::GradientSample> s;
    std::mt19937 gen(8);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    for (int i = 0; i < 500; ++i)
        s.push_back(sample({dist(gen), dist(gen), dist(gen)}, {dist(gen), dist(gen), dist(gen)}));
    CHECK(asub::covariance(s) == asub::ref::covariance(s));

    // fixed block decomposition: identical for any thread count
    set_threads(1);
    const Matrix c1 = asub::covariance(s);
    set_threads(5);
    const Matrix c5 = asub::covariance(s);
    set_threads(0);
    CHECK(c1 == c5);

    // agrees with a naive streaming sum to roundoff
    Matrix naive(3, 3, 0.0);
    for (const auto& gs : s)
        for (std::size_t j = 0; j < 3; ++j)
            for (std::size_t i = 0; i < 3; ++i)
                naive(i, j) += gs.gradient[i] * gs.gradient[j] / static_cast<double>(s.size());
    double worst = 0.0;
    for (std::size_t j = 0; j < 3; ++j)
        for (std::size_t i = 0; i < 3; ++i) worst = std::max(worst, std::abs(naive(i, j) - c1(i, j)));
    CHECK(worst <= 1e-13);
}

TEST_CASE("covariance input validation") {
    const std::vector<asub::GradientSample> none;
    CHECK_THROWS_AS(asub::covariance(none), ValidationError);
    std::vector<asub::GradientSample> bad = {sample({1.0}, {1.0, 2.0})};
    CHECK_THROWS_AS(asub::covariance(bad), DimensionError);
    std::vector<asub::GradientSample> neg = {sample({1.0}, {1.0}, -2.0)};
    CHECK_THROWS_AS(asub::covariance(neg), ValidationError);
}

TEST_CASE("decompose of the identity") {
    const asub::ActiveSubspace as = asub::decompose(Matrix::identity(3));
    for (double l : as.eigenvalues) CHECK(l == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(test::orthonormality_residual(as.eigenvectors) <= 1e-10);
}

TEST_CASE("decompose of a rank-1 projector finds the generating direction") {
    // oracle: a a^T with a = (0.6, 0.8) has spectrum (1, 0), eigvec +-a
    Matrix c(2, 2);
    c(0, 0) = 0.36;
    c(0, 1) = 0.48;
    c(1, 0) = 0.48;
    c(1, 1) = 0.64;
    const asub::ActiveSubspace as = asub::decompose(c);
    CHECK(as.eigenvalues[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(as.eigenvalues[1]) <= 1e-12);
    const Vector a = {0.6, 0.8};
    CHECK(std::abs(cosine(as.eigenvectors.col(0), a)) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("decompose of a diagonal matrix keeps axis eigenvectors") {
    Matrix c(2, 2);
    c(0, 0) = 4.0;
    c(1, 1) = 1.0;
    const asub::ActiveSubspace as = asub::decompose(c);
    CHECK(as.eigenvalues[0] == doctest::Approx(4.0));
    CHECK(as.eigenvalues[1] == doctest::Approx(1.0));
    CHECK(std::abs(as.eigenvectors(0, 0)) == doctest::Approx(1.0));
    CHECK(std::abs(as.eigenvectors(1, 1)) == doctest::Approx(1.0));
}

TEST_CASE("decompose rejects asymmetric input") {
    Matrix c(2, 2);
    c(0, 1) = 1.0;
    CHECK_THROWS_AS(asub::decompose(c), ValidationError);
}

TEST_CASE("select_dim rules") {
    asub::ActiveSubspace as;
    as.eigenvectors = Matrix::identity(3);

    SUBCASE("gap rule keys on the dominant ratio") {
        as.eigenvalues = {1.0, 1e-12, 0.0};
        CHECK(asub::select_dim(as, asub::DimRule::gap()).active_dim == 1);
    }
    SUBCASE("gap rule falls back to the rank for trailing zeros") {
        as.eigenvalues = {4.0, 0.0, 0.0};
        CHECK(asub::select_dim(as, asub::DimRule::gap()).active_dim == 1);
    }
    SUBCASE("energy rule accumulates eigenvalues") {
        as.eigenvalues = {4.0, 1.0, 0.0};
        CHECK(asub::select_dim(as, asub::DimRule::energy(0.75)).active_dim == 1);
        CHECK(asub::select_dim(as, asub::DimRule::energy(0.9)).active_dim == 2);
    }
    SUBCASE("fixed rule is a pass-through with range checking") {
        as.eigenvalues = {4.0, 1.0, 0.5};
        CHECK(asub::select_dim(as, asub::DimRule::fixed(2)).active_dim == 2);
        CHECK_THROWS_AS(asub::select_dim(as, asub::DimRule::fixed(4)), RangeError);
    }
    SUBCASE("all-zero spectrum is degenerate") {
        as.eigenvalues = {0.0, 0.0, 0.0};
        CHECK_THROWS_AS(asub::select_dim(as, asub::DimRule::gap()), ValidationError);
    }
}

TEST_CASE("project applies the leading eigenvectors") {
    asub::ActiveSubspace as;
    as.eigenvalues = {1.0, 0.5};
    as.eigenvectors = Matrix::identity(2);
    as = asub::select_dim(as, asub::DimRule::fixed(1));
    const Vector y = asub::project(as, std::vector<double>{3.0, 7.0});
    REQUIRE(y.size() == 1);
    CHECK(y[0] == 3.0);

    // diagonal direction: oracle inner product sqrt(2)
    asub::ActiveSubspace diag;
    diag.eigenvalues = {1.0, 0.0};
    diag.eigenvectors = Matrix(2, 2);
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    diag.eigenvectors(0, 0) = inv_sqrt2;
    diag.eigenvectors(1, 0) = inv_sqrt2;
    diag.eigenvectors(0, 1) = -inv_sqrt2;
    diag.eigenvectors(1, 1) = inv_sqrt2;
    diag = asub::select_dim(diag, asub::DimRule::fixed(1));
    const Vector y2 = asub::project(diag, std::vector<double>{1.0, 1.0});
    CHECK(y2[0] == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));

    CHECK(asub::project(diag, std::vector<double>{0.0, 0.0})[0] == 0.0);
}

TEST_CASE("project is linear") {
    asub::ActiveSubspace as;
    as.eigenvalues = {2.0, 1.0, 0.5};
    as.eigenvectors = test::random_orthonormal(3, 3, 30);
    as = asub::select_dim(as, asub::DimRule::fixed(2));
    const Vector x = test::random_vector(3, 31);
    const Vector z = test::random_vector(3, 32);
    const double alpha = 0.7, beta = -1.3;
    Vector combo(3);
    for (std::size_t i = 0; i < 3; ++i) combo[i] = alpha * x[i] + beta * z[i];
    const Vector lhs = asub::project(as, combo);
    const Vector px = asub::project(as, x);
    const Vector pz = asub::project(as, z);
    for (std::size_t i = 0; i < 2; ++i)
        CHECK(std::abs(lhs[i] - (alpha * px[i] + beta * pz[i])) <= 1e-12);
}

TEST_CASE("gradient estimation is exact for affine functions") {
    // f(x) = 2 x1 - x2 + 5
    const Matrix pts = random_matrix(2, 30, 33, -2.0, 2.0);
    Vector vals(30);
    for (std::size_t j = 0; j < 30; ++j) vals[j] = 2.0 * pts(0, j) - pts(1, j) + 5.0;
    const auto grads = asub::estimate_gradients(pts, vals, 12);
    for (const auto& g : grads) {
        CHECK(std::abs(g.gradient[0] - 2.0) <= 1e-10);
        CHECK(std::abs(g.gradient[1] + 1.0) <= 1e-10);
    }
}

TEST_CASE("gradient estimation of a constant function is zero") {
    const Matrix pts = random_matrix(3, 25, 34, -1.0, 1.0);
    const Vector vals(25, 4.2);
    const auto grads = asub::estimate_gradients(pts, vals, 8);
    for (const auto& g : grads)
        for (double c : g.gradient) CHECK(std::abs(c) <= 1e-10);
}

TEST_CASE("gradient estimation argument validation") {
    const Matrix pts = random_matrix(3, 10, 35);
    const Vector vals(10, 1.0);
    CHECK_THROWS_AS(asub::estimate_gradients(pts, vals, 3), RangeError);
    CHECK_THROWS_AS(asub::estimate_gradients(pts, vals, 11), RangeError);
    CHECK_THROWS_AS(asub::estimate_gradients(pts, Vector(9, 1.0), 5), DimensionError);
    // duplicate a point so every neighborhood of the first column is a line
    Matrix degenerate(2, 4);
    for (std::size_t j = 0; j < 4; ++j) {
        degenerate(0, j) = static_cast<double>(j);
        degenerate(1, j) = 2.0 * static_cast<double>(j);  // collinear
    }
    CHECK_THROWS_AS(asub::estimate_gradients(degenerate, Vector(4, 1.0), 3), ConditioningError);
}

TEST_CASE("quadratic ridge recovers its active direction from exact gradients") {
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    const Vector a = {inv_sqrt2, inv_sqrt2};
    const auto samples = quadratic_ridge_samples(a, 200, 36);
    const Matrix c = asub::covariance(samples);
    const asub::ActiveSubspace as = asub::decompose(c);
    CHECK(as.eigenvalues[1] <= 1e-10 * as.eigenvalues[0]);
    CHECK(std::abs(cosine(as.eigenvectors.col(0), a)) >= 1.0 - 1e-10);
}

TEST_CASE("quadratic ridge pipeline with regression gradients stays aligned") {
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    const Vector a = {inv_sqrt2, inv_sqrt2};
    std::mt19937 gen(37);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    Matrix pts(2, 200);
    Vector vals(200);
    for (std::size_t j = 0; j < 200; ++j) {
        pts(0, j) = dist(gen);
        pts(1, j) = dist(gen);
        const double ax = a[0] * pts(0, j) + a[1] * pts(1, j);
        vals[j] = ax * ax;
    }
    const auto grads = asub::estimate_gradients(pts, vals, 12);
    const asub::ActiveSubspace as = asub::decompose(asub::covariance(grads));
    CHECK(std::abs(cosine(as.eigenvectors.col(0), a)) >= 0.99);
}

TEST_CASE("rotation equivariance of the active subspace") {
    const auto samples = quadratic_ridge_samples({0.8, 0.6}, 120, 38);
    const asub::ActiveSubspace base = asub::decompose(asub::covariance(samples));

    const double theta = 0.77;
    const double c = std::cos(theta), s = std::sin(theta);
    std::vector<asub::GradientSample> rotated = samples;
    for (auto& gs : rotated) {
        const Vector p = gs.point, g = gs.gradient;
        gs.point = {c * p[0] - s * p[1], s * p[0] + c * p[1]};
        gs.gradient = {c * g[0] - s * g[1], s * g[0] + c * g[1]};
    }
    const asub::ActiveSubspace rot = asub::decompose(asub::covariance(rotated));
    for (std::size_t i = 0; i < 2; ++i)
        CHECK(std::abs(rot.eigenvalues[i] - base.eigenvalues[i]) <= 1e-10);
    // rotated top eigenvector equals Q times the base one, up to sign
    const Vector expect = {c * base.eigenvectors(0, 0) - s * base.eigenvectors(1, 0),
                           s * base.eigenvectors(0, 0) + c * base.eigenvectors(1, 0)};
    CHECK(std::abs(cosine(rot.eigenvectors.col(0), expect)) >= 1.0 - 1e-10);
}

TEST_CASE("summary table pairs active coordinates with values") {
    asub::ActiveSubspace as;
    as.eigenvalues = {1.0, 0.5};
    as.eigenvectors = Matrix(2, 2);
    as.eigenvectors(1, 0) = 1.0;  // leading eigenvector e2
    as.eigenvectors(0, 1) = 1.0;
    as = asub::select_dim(as, asub::DimRule::fixed(1));

    Matrix pts(2, 3);
    pts(0, 0) = 1.0;
    pts(1, 0) = 10.0;
    pts(0, 1) = 2.0;
    pts(1, 1) = 20.0;
    pts(0, 2) = 3.0;
    pts(1, 2) = 30.0;
    const Vector vals = {0.1, 0.2, 0.3};
    const Matrix table = asub::summary_data(as, pts, vals);
    REQUIRE(table.rows() == 3);
    REQUIRE(table.cols() == 2);
    for (std::size_t j = 0; j < 3; ++j) {
        CHECK(table(j, 0) == pts(1, j));  // y equals the second coordinate
        CHECK(table(j, 1) == vals[j]);
    }

    // permuting input columns permutes rows identically
    Matrix pts_rev(2, 3);
    Vector vals_rev(3);
    for (std::size_t j = 0; j < 3; ++j) {
        pts_rev(0, j) = pts(0, 2 - j);
        pts_rev(1, j) = pts(1, 2 - j);
        vals_rev[j] = vals[2 - j];
    }
    const Matrix table_rev = asub::summary_data(as, pts_rev, vals_rev);
    for (std::size_t j = 0; j < 3; ++j) {
        CHECK(table_rev(j, 0) == table(2 - j, 0));
        CHECK(table_rev(j, 1) == table(2 - j, 1));
    }

    Matrix single(2, 1);
    single(0, 0) = 5.0;
    single(1, 0) = 6.0;
    CHECK(asub::summary_data(as, single, Vector{1.0}).rows() == 1);
}

TEST_CASE("sample and gradient csv round trips") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::current_path() / "scratch_asub";
    fs::create_directories(dir);

    {
        std::ofstream os(dir / "samples.csv");
        os << "alpha,beta,f\n";
        os << "0.5,1.5,2.25\n";
        os << "1.0,2.0,9\n";
    }
    const asub::SampleTable t = asub::read_sample_csv(dir / "samples.csv");
    REQUIRE(t.names.size() == 2);
    CHECK(t.names[0] == "alpha");
    CHECK(t.points(1, 1) == 2.0);
    CHECK(t.values[1] == 9.0);

    const auto samples = quadratic_ridge_samples({0.6, 0.8}, 10, 39);
    asub::write_gradient_csv(dir / "grads.csv", samples, t.names);
    const auto back = asub::read_gradient_csv(dir / "grads.csv");
    REQUIRE(back.size() == samples.size());
    for (std::size_t i = 0; i < back.size(); ++i)
        for (std::size_t c = 0; c < 2; ++c) {
            CHECK(back[i].point[c] == samples[i].point[c]);
            CHECK(back[i].gradient[c] == samples[i].gradient[c]);
        }

    const asub::ActiveSubspace as = asub::decompose(asub::covariance(samples));
    asub::write_eigenvalue_csv(dir / "eigenvalues.csv", as);
    asub::write_eigenvector_csv(dir / "eigenvectors.csv", as);
    const asub::ActiveSubspace loaded =
        asub::read_subspace_csv(dir / "eigenvalues.csv", dir / "eigenvectors.csv");
    for (std::size_t i = 0; i < 2; ++i) CHECK(loaded.eigenvalues[i] == as.eigenvalues[i]);
    CHECK(loaded.eigenvectors == as.eigenvectors);
}
