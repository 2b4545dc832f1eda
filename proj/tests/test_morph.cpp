#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "romkit/morph.hpp"
#include "romkit/stl_io.hpp"
#include "test_support.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

using namespace romkit;
using namespace romkit::morph;
using test::random_matrix;

namespace {

namespace fs = std::filesystem;

FfdLattice unit_cube_lattice(std::array<std::size_t, 3> dims = {2, 2, 2}) {
    FfdLattice lat;
    lat.origin = {0.0, 0.0, 0.0};
    lat.axes = {{{1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}, {0.0, 0.0, 1.0}}};
    lat.dims = dims;
    lat.displacements.assign(lat.control_count(), {0.0, 0.0, 0.0});
    return lat;
}

PointCloud random_cloud(std::size_t count, std::uint32_t seed, double lo, double hi) {
    PointCloud c;
    c.points = random_matrix(3, count, seed, lo, hi);
    return c;
}

fs::path scratch() {
    const fs::path dir = fs::current_path() / "scratch_morph";
    fs::create_directories(dir);
    return dir;
}

} // namespace

TEST_CASE("ffd with zero displacements is the bitwise identity") {
    const FfdLattice lat = unit_cube_lattice();
    const PointCloud cloud = random_cloud(1000, 50, -0.5, 1.5);
    const PointCloud out = ffd_deform(lat, cloud);
    CHECK(out.points == cloud.points);
}

TEST_CASE("uniform control displacement translates interior points exactly") {
    FfdLattice lat = unit_cube_lattice({3, 2, 4});
    const std::array<double, 3> d = {0.3, -0.2, 0.7};
    for (auto& dp : lat.displacements) dp = d;
    const PointCloud cloud = random_cloud(1000, 51, 0.0, 1.0);
    const PointCloud out = ffd_deform(lat, cloud);
    for (std::size_t p = 0; p < cloud.count(); ++p)
        for (std::size_t c = 0; c < 3; ++c)
            CHECK(std::abs(out.points(c, p) - cloud.points(c, p) - d[c]) <= 1e-12);
}

TEST_CASE("single corner control moves the cube center by one eighth") {
    // oracle: B_1^1(0.5)^3 = 0.125
    FfdLattice lat = unit_cube_lattice();
    lat.displacement(1, 1, 1) = {1.0, 0.0, 0.0};
    PointCloud center;
    center.points = Matrix(3, 1, 0.5);
    const PointCloud out = ffd_deform(lat, center);
    CHECK(out.points(0, 0) == doctest::Approx(0.625).epsilon(1e-14));
    CHECK(out.points(1, 0) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(out.points(2, 0) == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("points outside the lattice are bitwise unchanged") {
    FfdLattice lat = unit_cube_lattice();
    lat.displacement(0, 0, 0) = {5.0, 5.0, 5.0};
    PointCloud outside;
    outside.points = Matrix(3, 4);
    outside.points(0, 0) = -0.01;
    outside.points(1, 0) = 0.5;
    outside.points(2, 0) = 0.5;
    outside.points(0, 1) = 1.01;
    outside.points(1, 1) = 0.2;
    outside.points(2, 1) = 0.2;
    outside.points(0, 2) = 0.5;
    outside.points(1, 2) = 2.0;
    outside.points(2, 2) = 0.5;
    outside.points(0, 3) = 0.5;
    outside.points(1, 3) = 0.5;
    outside.points(2, 3) = -7.0;
    const PointCloud out = ffd_deform(lat, outside);
    CHECK(out.points == outside.points);
}

TEST_CASE("parallel ffd matches the serial reference bitwise") {
    FfdLattice lat = unit_cube_lattice({4, 3, 3});
    std::mt19937 gen(52);
    std::uniform_real_distribution<double> dist(-0.05, 0.05);
    for (auto& dp : lat.displacements) dp = {dist(gen), dist(gen), dist(gen)};
    const PointCloud cloud = random_cloud(777, 53, -0.2, 1.2);
    CHECK(ffd_deform(lat, cloud).points == morph::ref::ffd_deform(lat, cloud).points);
}

TEST_CASE("ffd jacobian matches central finite differences") {
    FfdLattice lat = unit_cube_lattice({3, 3, 2});
    std::mt19937 gen(54);
    std::uniform_real_distribution<double> dist(-0.1, 0.1);
    for (auto& dp : lat.displacements) dp = {dist(gen), dist(gen), dist(gen)};

    const double h = 1e-6;
    for (std::uint32_t trial = 0; trial < 20; ++trial) {
        const Matrix p = random_matrix(3, 1, 100 + trial, 0.2, 0.8);
        const std::array<double, 3> x = {p(0, 0), p(1, 0), p(2, 0)};
        const Matrix jac = ffd_jacobian(lat, x);
        for (std::size_t col = 0; col < 3; ++col) {
            PointCloud plus, minus;
            plus.points = Matrix(3, 1);
            minus.points = Matrix(3, 1);
            for (std::size_t c = 0; c < 3; ++c) {
                plus.points(c, 0) = x[c] + (c == col ? h : 0.0);
                minus.points(c, 0) = x[c] - (c == col ? h : 0.0);
            }
            const PointCloud fp = ffd_deform(lat, plus);
            const PointCloud fm = ffd_deform(lat, minus);
            for (std::size_t row = 0; row < 3; ++row) {
                const double fd = (fp.points(row, 0) - fm.points(row, 0)) / (2.0 * h);
                CHECK(std::abs(jac(row, col) - fd) <= 1e-6);
            }
        }
    }
}

TEST_CASE("displaced boundary layers are reported") {
    FfdLattice lat = unit_cube_lattice({4, 4, 4});
    lat.displacement(0, 2, 1) = {0.1, 0.0, 0.0};  // i = 0 outer layer
    lat.displacement(1, 1, 1) = {0.1, 0.0, 0.0};  // interior
    std::vector<std::array<std::size_t, 3>> warnings;
    ffd_deform(lat, random_cloud(10, 55, 0.0, 1.0), &warnings);
    REQUIRE(warnings.size() == 1);
    CHECK(warnings[0] == std::array<std::size_t, 3>{0, 2, 1});
}

TEST_CASE("lattice validation rejects degenerate and skewed axes") {
    FfdLattice lat = unit_cube_lattice();
    lat.axes[1] = {0.0, 0.0, 0.0};
    CHECK_THROWS_AS(validate(lat), ValidationError);
    lat.axes[1] = {0.5, 1.0, 0.0};  // not orthogonal to axis 0
    CHECK_THROWS_AS(validate(lat), ValidationError);
    FfdLattice small = unit_cube_lattice({1, 2, 2});
    small.displacements.assign(4, {0.0, 0.0, 0.0});
    CHECK_THROWS_AS(validate(small), ValidationError);
}

TEST_CASE("idw deformation identity and node interpolation") {
    PointCloud controls;
    controls.points = Matrix(3, 2);
    controls.points(0, 0) = -1.0;
    controls.points(0, 1) = 1.0;
    Matrix disp(3, 2);

    const PointCloud cloud = random_cloud(50, 56, -2.0, 2.0);
    CHECK(idw_deform(controls, disp, cloud, 2.0).points == cloud.points);

    disp(1, 0) = 1.0;   // +e2 at control 0
    disp(1, 1) = -1.0;  // -e2 at control 1
    PointCloud query;
    query.points = Matrix(3, 2);
    // first query sits on control 0, second at the symmetric origin
    query.points(0, 0) = -1.0;
    const PointCloud out = idw_deform(controls, disp, query, 2.0);
    CHECK(out.points(1, 0) == 1.0);  // exactly d_0
    CHECK(out.points(0, 1) == 0.0);
    CHECK(out.points(1, 1) == 0.0);  // symmetric pulls cancel
    CHECK(out.points(2, 1) == 0.0);
}

TEST_CASE("idw weights sum to one: uniform displacements translate exactly") {
    PointCloud controls;
    controls.points = random_matrix(3, 5, 70, -1.0, 1.0);
    Matrix disp(3, 5);
    for (std::size_t j = 0; j < 5; ++j) {
        disp(0, j) = 0.4;
        disp(1, j) = -0.1;
        disp(2, j) = 0.9;
    }
    const PointCloud cloud = random_cloud(200, 71, -2.0, 2.0);
    const PointCloud out = idw_deform(controls, disp, cloud, 2.0);
    for (std::size_t p = 0; p < 200; ++p) {
        CHECK(std::abs(out.points(0, p) - cloud.points(0, p) - 0.4) <= 1e-12);
        CHECK(std::abs(out.points(1, p) - cloud.points(1, p) + 0.1) <= 1e-12);
        CHECK(std::abs(out.points(2, p) - cloud.points(2, p) - 0.9) <= 1e-12);
    }
}

TEST_CASE("idw deformation is rigid-rotation covariant") {
    PointCloud controls;
    controls.points = random_matrix(3, 4, 57, -1.0, 1.0);
    const Matrix disp = random_matrix(3, 4, 58, -0.2, 0.2);
    const PointCloud cloud = random_cloud(30, 59, -1.0, 1.0);
    const PointCloud base = idw_deform(controls, disp, cloud, 2.0);

    // rotation about z by 0.4
    const double c = std::cos(0.4), s = std::sin(0.4);
    auto rotate = [&](const Matrix& m) {
        Matrix r(3, m.cols());
        for (std::size_t j = 0; j < m.cols(); ++j) {
            r(0, j) = c * m(0, j) - s * m(1, j);
            r(1, j) = s * m(0, j) + c * m(1, j);
            r(2, j) = m(2, j);
        }
        return r;
    };
    PointCloud controls_r, cloud_r;
    controls_r.points = rotate(controls.points);
    cloud_r.points = rotate(cloud.points);
    const PointCloud out_r = idw_deform(controls_r, rotate(disp), cloud_r, 2.0);
    const Matrix expect = rotate(base.points);
    CHECK(test::max_abs_diff(out_r.points, expect) <= 1e-12);
}

TEST_CASE("idw rejects duplicate controls and matches its serial reference") {
    PointCloud dup;
    dup.points = Matrix(3, 2);
    CHECK_THROWS_AS(idw_deform(dup, Matrix(3, 2), random_cloud(5, 60, 0.0, 1.0), 2.0),
                    ValidationError);

    PointCloud controls;
    controls.points = random_matrix(3, 6, 61, -1.0, 1.0);
    const Matrix disp = random_matrix(3, 6, 62, -0.3, 0.3);
    const PointCloud cloud = random_cloud(333, 63, -1.5, 1.5);
    CHECK(idw_deform(controls, disp, cloud, 3.0).points ==
          morph::ref::idw_deform(controls, disp, cloud, 3.0).points);
}

TEST_CASE("rbf deformation identity and single-control exactness") {
    PointCloud control;
    control.points = Matrix(3, 1);
    control.points(0, 0) = 0.25;
    InterpolatorConfig g;
    g.kind = InterpolatorConfig::Kind::RbfGaussian;
    g.epsilon = 1.0;

    const PointCloud cloud = random_cloud(20, 64, -1.0, 1.0);
    CHECK(rbf_deform(control, Matrix(3, 1), cloud, g).points == cloud.points);

    Matrix disp(3, 1);
    disp(0, 0) = 0.5;
    disp(2, 0) = -0.25;
    PointCloud at_control;
    at_control.points = control.points;
    const PointCloud out = rbf_deform(control, disp, at_control, g);
    CHECK(out.points(0, 0) == doctest::Approx(0.75).epsilon(1e-14));
    CHECK(out.points(2, 0) == doctest::Approx(-0.25).epsilon(1e-14));
}

TEST_CASE("two-control gaussian rbf matches the hand solve") {
    // controls at x = 0 and x = 1, displacement (delta, 0, 0) at the first:
    // K = [[1, e^-1], [e^-1, 1]], solve K gamma = (delta, 0)
    const double delta = 0.4;
    const double e1 = std::exp(-1.0);
    const double det = 1.0 - e1 * e1;
    const double g0 = delta / det;
    const double g1 = -delta * e1 / det;

    PointCloud controls;
    controls.points = Matrix(3, 2);
    controls.points(0, 1) = 1.0;
    Matrix disp(3, 2);
    disp(0, 0) = delta;
    InterpolatorConfig g;
    g.kind = InterpolatorConfig::Kind::RbfGaussian;
    g.epsilon = 1.0;

    PointCloud mid;
    mid.points = Matrix(3, 1);
    mid.points(0, 0) = 0.5;
    const PointCloud out = rbf_deform(controls, disp, mid, g);
    const double phi_half = std::exp(-0.25);
    CHECK(out.points(0, 0) == doctest::Approx(0.5 + phi_half * (g0 + g1)).epsilon(1e-12));

    // exactness at both controls
    const PointCloud at = rbf_deform(controls, disp, controls, g);
    CHECK(at.points(0, 0) == doctest::Approx(delta).epsilon(1e-12));
    CHECK(at.points(0, 1) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("singular rbf kernel without regularization is a conditioning error") {
    PointCloud controls;
    controls.points = Matrix(3, 3);
    controls.points(0, 1) = 1.0;
    controls.points(0, 2) = 2.0;
    InterpolatorConfig tp;
    tp.kind = InterpolatorConfig::Kind::RbfThinPlate;
    CHECK_THROWS_AS(rbf_deform(controls, Matrix(3, 3), random_cloud(4, 65, 0.0, 1.0), tp),
                    ConditioningError);
    tp.regularization = 1e-8;
    CHECK_NOTHROW(rbf_deform(controls, Matrix(3, 3), random_cloud(4, 65, 0.0, 1.0), tp));
}

TEST_CASE("stl single triangle round trip") {
    TriMesh mesh;
    mesh.name = "tri";
    mesh.vertices = Matrix(3, 3);
    mesh.vertices(0, 1) = 1.0;
    mesh.vertices(1, 2) = 1.0;
    mesh.triangles = {{0, 1, 2}};
    const fs::path p = scratch() / "tri.stl";
    write_stl(mesh, p);
    const TriMesh back = read_stl(p);
    REQUIRE(back.triangles.size() == 1);
    REQUIRE(back.vertices.cols() == 3);
    CHECK(test::max_abs_diff(back.vertices, mesh.vertices) <= 1e-12);
    CHECK(back.triangles[0] == std::array<std::size_t, 3>{0, 1, 2});
    CHECK(back.name == "tri");
}

TEST_CASE("write recomputes facet normals from the vertex winding") {
    TriMesh mesh;
    mesh.vertices = Matrix(3, 3);
    mesh.vertices(0, 1) = 1.0;  // counter-clockwise in the xy plane: normal +z
    mesh.vertices(1, 2) = 1.0;
    mesh.triangles = {{0, 1, 2}};
    const fs::path p = scratch() / "normal.stl";
    write_stl(mesh, p);
    std::ifstream is(p);
    const std::string body((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    CHECK(body.find("facet normal 0 0 1") != std::string::npos);
}

TEST_CASE("empty solid reads as zero triangles") {
    const fs::path p = scratch() / "empty.stl";
    std::ofstream(p) << "solid nothing\nendsolid nothing\n";
    const TriMesh mesh = read_stl(p);
    CHECK(mesh.triangles.empty());
    CHECK(mesh.vertices.cols() == 0);
}

TEST_CASE("welding merges shared-edge vertices") {
    // two facets sharing an edge: 6 parsed vertices, 4 after welding
    TriMesh mesh;
    mesh.vertices = Matrix(3, 6);
    // triangle 1: (0,0,0), (1,0,0), (0,1,0)
    mesh.vertices(0, 1) = 1.0;
    mesh.vertices(1, 2) = 1.0;
    // triangle 2: (1,0,0), (1,1,0), (0,1,0)
    mesh.vertices(0, 3) = 1.0;
    mesh.vertices(0, 4) = 1.0;
    mesh.vertices(1, 4) = 1.0;
    mesh.vertices(1, 5) = 1.0;
    mesh.triangles = {{0, 1, 2}, {3, 4, 5}};
    const fs::path p = scratch() / "quad.stl";
    write_stl(mesh, p);
    const TriMesh parsed = read_stl(p);
    REQUIRE(parsed.vertices.cols() == 6);
    const TriMesh welded = weld_vertices(parsed, 1e-9);
    CHECK(welded.vertices.cols() == 4);
    CHECK(welded.triangles.size() == 2);
    // connectivity survives: the shared edge uses the same vertex ids
    CHECK(welded.triangles[0][1] == welded.triangles[1][0]);
    CHECK(welded.triangles[0][2] == welded.triangles[1][2]);
}

TEST_CASE("stl grammar violations carry line numbers") {
    const fs::path bad = scratch() / "bad.stl";
    std::ofstream(bad) << "solid x\nfacet normal 0 0 1\nouter loop\nvertex 0 0 0\nvertex 1 0 0\n"
                          "endloop\nendfacet\nendsolid x\n";
    try {
        read_stl(bad);
        FAIL("expected FormatError");
    } catch (const FormatError& e) {
        CHECK(std::string(e.what()).find(":6") != std::string::npos);  // endloop line
    }

    const fs::path junk = scratch() / "junk.stl";
    std::ofstream(junk) << "solid x\nfacet normal 0 0 q\n";
    CHECK_THROWS_AS(read_stl(junk), FormatError);

    const fs::path notstl = scratch() / "not.stl";
    std::ofstream(notstl) << "hello world\n";
    CHECK_THROWS_AS(read_stl(notstl), FormatError);
}

TEST_CASE("binary stl content is sniffed and rejected") {
    const fs::path p = scratch() / "bin.stl";
    std::ofstream os(p, std::ios::binary);
    char header[84] = {};
    header[80] = 2;  // little-endian triangle count, plus NUL padding
    os.write(header, sizeof(header));
    os.close();
    try {
        read_stl(p);
        FAIL("expected FormatError");
    } catch (const FormatError& e) {
        CHECK(std::string(e.what()).find("binary") != std::string::npos);
    }
}

TEST_CASE("mesh validation flags bad indices and degenerate triangles") {
    TriMesh mesh;
    mesh.vertices = Matrix(3, 3);
    mesh.vertices(0, 1) = 1.0;
    mesh.vertices(1, 2) = 1.0;
    mesh.triangles = {{0, 1, 7}};
    CHECK_THROWS_AS(validate_mesh(mesh), ValidationError);

    mesh.triangles = {{0, 1, 1}};
    const auto degenerate = validate_mesh(mesh);
    REQUIRE(degenerate.size() == 1);
    CHECK(degenerate[0] == 0);
}
