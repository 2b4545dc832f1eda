#include "romkit/dmd.hpp"

#include "romkit/eig.hpp"
#include "romkit/kernels.hpp"
#include "romkit/romk_format.hpp"
#include "romkit/svd.hpp"

#include <cmath>
#include <fstream>
#include <limits>

namespace romkit {
namespace dmd {

namespace {

constexpr std::array<char, 4> kTag = {'D', 'M', 'D', '1'};

Complex integer_power(Complex base, std::size_t k) {
    Complex acc(1.0, 0.0);
    Complex b = base;
    while (k != 0) {
        if (k & 1u) acc *= b;
        b *= b;
        k >>= 1u;
    }
    return acc;
}

StateResult expand(const DmdModel& model, const CVector& mode_scales) {
    CVector coeff(model.rank);
    for (std::size_t j = 0; j < model.rank; ++j) coeff[j] = model.amplitudes[j] * mode_scales[j];
    const CVector y = matvec(model.modes, coeff);
    StateResult out;
    out.state.resize(model.n_dof);
    double re2 = 0.0, im2 = 0.0;
    for (std::size_t i = 0; i < model.n_dof; ++i) {
        out.state[i] = y[i].real();
        re2 += y[i].real() * y[i].real();
        im2 += y[i].imag() * y[i].imag();
    }
    out.imag_ratio = re2 > 0.0 ? std::sqrt(im2) / std::sqrt(re2) : std::sqrt(im2);
    return out;
}

} // namespace

void validate(const DmdModel& model) {
    if (model.rank == 0) throw ValidationError("dmd model has rank 0");
    if (model.rank > model.n_dof || (model.m_snapshots > 0 && model.rank > model.m_snapshots - 1))
        throw ValidationError("dmd model rank " + std::to_string(model.rank) +
                              " exceeds n_dof or m-1");
    if (model.modes.rows() != model.n_dof || model.modes.cols() != model.rank ||
        model.eigenvalues.size() != model.rank || model.amplitudes.size() != model.rank)
        throw DimensionError("dmd model field shapes are inconsistent");
    if (!(model.dt > 0.0)) throw ValidationError("dmd model dt must be positive");
    for (const Complex& l : model.eigenvalues)
        if (!std::isfinite(l.real()) || !std::isfinite(l.imag()))
            throw ValidationError("dmd model has a non-finite eigenvalue");
    for (std::size_t j = 0; j < model.rank; ++j) {
        const double n = norm2(model.modes.col(j));
        if (!(n > 0.0) || !std::isfinite(n))
            throw ValidationError("dmd mode " + std::to_string(j) + " has invalid norm");
    }
}

DmdModel fit(const SnapshotSet& set, RankSpec rank_spec) {
    romkit::validate(set);
    auto [s, sdot] = split_shifted(set); // throws for m < 2

    const SvdResult f = svd(s, rank_spec);
    const std::size_t r = f.rank;
    if (f.sigma[r - 1] == 0.0)
        throw RankDeficiencyError("dmd fit: singular value " + std::to_string(r) +
                                  " is zero; request a smaller rank");

    // P = V_r Sigma_r^-1, reduced operator A~ = U_r^T Sdot P, modes = Sdot P W
    Matrix p = f.v;
    for (std::size_t j = 0; j < r; ++j)
        for (double& x : p.col(j)) x /= f.sigma[j];
    const Matrix g = matmul(sdot, p);          // n_dof x r
    const Matrix reduced = matmul_tn(f.u, g);  // r x r

    const EigResult ev = eig(reduced);

    DmdModel model;
    model.rank = r;
    model.dt = set.dt();
    model.n_dof = set.n_dof();
    model.m_snapshots = set.m();
    model.eigenvalues = ev.values;
    model.modes = matmul(g, ev.vectors);

    const auto x1 = set.data.col(0);
    CVector rhs(model.n_dof);
    for (std::size_t i = 0; i < model.n_dof; ++i) rhs[i] = Complex(x1[i], 0.0);
    model.amplitudes = lstsq(model.modes, rhs);

    validate(model);
    return model;
}

StateResult reconstruct(const DmdModel& model, std::size_t k) {
    validate(model);
    CVector scales(model.rank);
    for (std::size_t j = 0; j < model.rank; ++j)
        scales[j] = integer_power(model.eigenvalues[j], k);
    return expand(model, scales);
}

ForecastResult forecast(const DmdModel& model, double t) {
    validate(model);
    if (!(t >= 0.0)) throw RangeError("forecast time must be >= 0, got " + format_double(t));
    CVector scales(model.rank, Complex{});
    std::size_t excluded = 0;
    for (std::size_t j = 0; j < model.rank; ++j) {
        const Complex lambda = model.eigenvalues[j];
        if (std::abs(lambda) == 0.0) {
            ++excluded; // log branch undefined, mode decayed identically
            continue;
        }
        const Complex omega = std::log(lambda) / model.dt;
        scales[j] = std::exp(omega * t);
    }
    StateResult s = expand(model, scales);
    return {std::move(s.state), s.imag_ratio, excluded};
}

std::vector<SpectrumRow> spectrum(const DmdModel& model) {
    validate(model);
    std::vector<SpectrumRow> rows(model.rank);
    const double two_pi = 2.0 * std::acos(-1.0);
    for (std::size_t j = 0; j < model.rank; ++j) {
        const Complex lambda = model.eigenvalues[j];
        rows[j].eigenvalue = lambda;
        rows[j].magnitude = std::abs(lambda);
        rows[j].omega = std::abs(lambda) > 0.0 ? std::log(lambda) / model.dt
                                               : Complex(-std::numeric_limits<double>::infinity(), 0.0);
        rows[j].frequency = std::arg(lambda) / (two_pi * model.dt);
    }
    return rows;
}

void save_model(const DmdModel& model, const std::filesystem::path& path) {
    validate(model);
    std::filesystem::path tmp;
    std::ofstream os = romk::open_temp(path, tmp);
    romk::write_header(os, kTag);
    romk::write_u64(os, model.rank);
    romk::write_u64(os, model.n_dof);
    romk::write_u64(os, model.m_snapshots);
    romk::write_f64(os, model.dt);
    romk::write_c64_array(os, model.eigenvalues);
    romk::write_c64_array(os, model.amplitudes);
    romk::write_c64_array(os, {model.modes.data(), model.modes.size()});
    os.flush();
    if (!os) throw IoError("failed writing " + tmp.string());
    os.close();
    romk::rename_into(tmp, path);
}

DmdModel load_model(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open " + path.string());
    const std::string what = path.string();
    romk::check_header(is, what);
    if (romk::read_tag(is, what) != kTag)
        throw FormatError(what + ": not a DMD1 model file");
    DmdModel model;
    model.rank = romk::read_u64(is, what);
    model.n_dof = romk::read_u64(is, what);
    model.m_snapshots = romk::read_u64(is, what);
    model.dt = romk::read_f64(is, what);
    model.eigenvalues.resize(model.rank);
    model.amplitudes.resize(model.rank);
    romk::read_c64_array(is, model.eigenvalues, what);
    romk::read_c64_array(is, model.amplitudes, what);
    model.modes = ComplexMatrix(model.n_dof, model.rank);
    romk::read_c64_array(is, {model.modes.data(), model.modes.size()}, what);
    validate(model);
    return model;
}

double training_residual(const DmdModel& model, const SnapshotSet& set) {
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < set.m(); ++k) {
        const StateResult r = reconstruct(model, k);
        auto col = set.data.col(k);
        for (std::size_t i = 0; i < set.n_dof(); ++i) {
            const double d = r.state[i] - col[i];
            num += d * d;
            den += col[i] * col[i];
        }
    }
    return den > 0.0 ? std::sqrt(num) / std::sqrt(den) : std::sqrt(num);
}

} // namespace dmd
} // namespace romkit
