// Timing comparison of the OpenMP kernels against their serial references.
// Usage: bench_kernels [scale]   (scale shrinks/grows the default problem sizes)

#include "romkit/asub.hpp"
#include "romkit/kernels.hpp"
#include "romkit/morph.hpp"
#include "romkit/parallel.hpp"

#include <chrono>
#include <cstdio>
#include <random>

using namespace romkit;

namespace {

Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint32_t seed) {
    std::mt19937 gen(seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    Matrix m(rows, cols);
    for (std::size_t j = 0; j < cols; ++j)
        for (std::size_t i = 0; i < rows; ++i) m(i, j) = dist(gen);
    return m;
}

template <typename F>
double time_best_of(int reps, F&& fn) {
    double best = 1e300;
    for (int r = 0; r < reps; ++r) {
        const auto t0 = std::chrono::steady_clock::now();
        fn();
        const auto t1 = std::chrono::steady_clock::now();
        best = std::min(best, std::chrono::duration<double>(t1 - t0).count());
    }
    return best;
}

void report(const char* name, double serial, double parallel) {
    std::printf("%-22s serial %9.4f ms   parallel %9.4f ms   speedup %5.2fx\n", name,
                serial * 1e3, parallel * 1e3, parallel > 0.0 ? serial / parallel : 0.0);
}

} // namespace

int main(int argc, char** argv) {
    double scale = 1.0;
    if (argc > 1) scale = std::atof(argv[1]);
    const auto dim = [&](std::size_t base) {
        return std::max<std::size_t>(2, static_cast<std::size_t>(base * scale));
    };

    std::printf("threads: %d (OpenMP %s)\n", thread_count(),
                openmp_enabled() ? "enabled" : "disabled");

    {
        const Matrix a = random_matrix(dim(600), dim(300), 1);
        const Matrix b = random_matrix(dim(300), dim(400), 2);
        const double ts = time_best_of(3, [&] { (void)ref::matmul(a, b); });
        const double tp = time_best_of(3, [&] { (void)matmul(a, b); });
        report("matmul", ts, tp);
        if (!(matmul(a, b) == ref::matmul(a, b))) std::printf("  MISMATCH!\n");
    }
    {
        morph::FfdLattice lat;
        lat.origin = {0.0, 0.0, 0.0};
        lat.axes = {{{1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}, {0.0, 0.0, 1.0}}};
        lat.dims = {6, 6, 6};
        lat.displacements.assign(lat.control_count(), {0.0, 0.0, 0.0});
        std::mt19937 gen(3);
        std::uniform_real_distribution<double> dist(-0.05, 0.05);
        for (auto& d : lat.displacements) d = {dist(gen), dist(gen), dist(gen)};
        morph::PointCloud cloud;
        cloud.points = random_matrix(3, dim(200000), 4);
        const double ts = time_best_of(3, [&] { (void)morph::ref::ffd_deform(lat, cloud); });
        const double tp = time_best_of(3, [&] { (void)morph::ffd_deform(lat, cloud); });
        report("ffd_deform", ts, tp);
        if (!(morph::ffd_deform(lat, cloud).points == morph::ref::ffd_deform(lat, cloud).points))
            std::printf("  MISMATCH!\n");
    }
    {
        morph::PointCloud controls;
        controls.points = random_matrix(3, 64, 5);
        const Matrix disp = random_matrix(3, 64, 6);
        morph::PointCloud cloud;
        cloud.points = random_matrix(3, dim(100000), 7);
        const double ts =
            time_best_of(3, [&] { (void)morph::ref::idw_deform(controls, disp, cloud, 2.0); });
        const double tp =
            time_best_of(3, [&] { (void)morph::idw_deform(controls, disp, cloud, 2.0); });
        report("idw_deform", ts, tp);
        if (!(morph::idw_deform(controls, disp, cloud, 2.0).points ==
              morph::ref::idw_deform(controls, disp, cloud, 2.0).points))
            std::printf("  MISMATCH!\n");
    }
    {
        std::mt19937 gen(8);
        std::uniform_real_distribution<double> dist(-1.0, 1.0);
        std::vector<asub::GradientSample> samples(dim(200000));
        for (auto& s : samples) {
            s.point = {dist(gen), dist(gen), dist(gen), dist(gen)};
            s.gradient = {dist(gen), dist(gen), dist(gen), dist(gen)};
            s.weight = 1.0;
        }
        const double ts = time_best_of(3, [&] { (void)asub::ref::covariance(samples); });
        const double tp = time_best_of(3, [&] { (void)asub::covariance(samples); });
        report("gradient covariance", ts, tp);
        if (!(asub::covariance(samples) == asub::ref::covariance(samples)))
            std::printf("  MISMATCH!\n");
    }
    return 0;
}
