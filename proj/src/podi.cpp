#include "romkit/podi.hpp"

#include "romkit/kernels.hpp"
#include "romkit/romk_format.hpp"
#include "romkit/svd.hpp"

#include <cmath>
#include <fstream>

namespace romkit {
namespace podi {

namespace {

constexpr std::array<char, 4> kTag = {'P', 'O', 'D', 'I'};

std::uint32_t kind_code(InterpolatorConfig::Kind kind) {
    switch (kind) {
        case InterpolatorConfig::Kind::RbfGaussian: return 0;
        case InterpolatorConfig::Kind::RbfThinPlate: return 1;
        case InterpolatorConfig::Kind::RbfMultiquadric: return 2;
        case InterpolatorConfig::Kind::Idw: return 3;
    }
    return 3;
}

InterpolatorConfig::Kind kind_from_code(std::uint32_t code, const std::string& what) {
    switch (code) {
        case 0: return InterpolatorConfig::Kind::RbfGaussian;
        case 1: return InterpolatorConfig::Kind::RbfThinPlate;
        case 2: return InterpolatorConfig::Kind::RbfMultiquadric;
        case 3: return InterpolatorConfig::Kind::Idw;
    }
    throw FormatError(what + ": unknown interpolator code " + std::to_string(code));
}

Vector interpolate_coeffs(const PodiModel& model, std::span<const double> mu,
                          std::optional<std::size_t>& node_hit) {
    const std::size_t r = model.coeffs.rows();
    Vector c(r, 0.0);
    if (model.interp.kind == InterpolatorConfig::Kind::Idw) {
        const IdwWeights w = idw_weights(model.train_params, mu, model.interp.power);
        node_hit = w.node_hit;
        if (w.node_hit) {
            auto col = model.coeffs.col(*w.node_hit);
            std::copy(col.begin(), col.end(), c.begin());
            return c;
        }
        for (std::size_t j = 0; j < model.coeffs.cols(); ++j) {
            auto col = model.coeffs.col(j);
            for (std::size_t i = 0; i < r; ++i) c[i] += w.w[j] * col[i];
        }
        return c;
    }
    const Vector k = rbf_eval_row(model.train_params, mu, model.interp);
    for (std::size_t i = 0; i < r; ++i) {
        auto coeffs_i = model.rbf_coefficients.col(i); // node coefficients of mode i
        double s = 0.0;
        for (std::size_t j = 0; j < k.size(); ++j) s += k[j] * coeffs_i[j];
        c[i] = s;
    }
    return c;
}

} // namespace

PodBasis pod(const SnapshotSet& set, RankSpec rank_spec) {
    romkit::validate(set);
    const SvdResult full = svd(set.data, RankSpec::full());
    const std::size_t r = resolve_rank(full.sigma, rank_spec);

    PodBasis basis;
    basis.modes = Matrix(full.u.rows(), r);
    basis.singular_values.assign(full.sigma.begin(),
                                 full.sigma.begin() + static_cast<std::ptrdiff_t>(r));
    for (std::size_t j = 0; j < r; ++j) {
        auto src = full.u.col(j);
        auto dst = basis.modes.col(j);
        std::copy(src.begin(), src.end(), dst.begin());
    }
    double total = 0.0, kept = 0.0;
    for (double s : full.sigma) total += s * s;
    for (double s : basis.singular_values) kept += s * s;
    basis.energy_fraction = total > 0.0 ? kept / total : 1.0;
    return basis;
}

Matrix project(const PodBasis& basis, const Matrix& data) {
    if (data.rows() != basis.modes.rows())
        throw DimensionError("project: data has " + std::to_string(data.rows()) +
                             " dofs, basis has " + std::to_string(basis.modes.rows()));
    return matmul_tn(basis.modes, data);
}

Matrix project(const PodBasis& basis, const SnapshotSet& set) {
    return project(basis, set.data);
}

PodiModel fit(const SnapshotSet& set, RankSpec rank_spec, const InterpolatorConfig& interp) {
    romkit::validate(set);
    romkit::validate(interp);
    if (!set.params)
        throw ValidationError("podi fit: snapshot set carries no parameter table");
    require_distinct_nodes(*set.params, "podi training parameters");

    PodiModel model;
    model.basis = pod(set, rank_spec);
    model.train_params = *set.params;
    model.coeffs = project(model.basis, set);
    model.interp = interp;
    if (interp.is_rbf())
        model.rbf_coefficients = rbf_fit(model.train_params, model.coeffs, interp);
    return model;
}

EvalResult evaluate(const PodiModel& model, std::span<const double> mu) {
    if (mu.size() != model.train_params.rows())
        throw DimensionError("evaluate: parameter point has " + std::to_string(mu.size()) +
                             " components, model expects " +
                             std::to_string(model.train_params.rows()));
    require_finite(mu, "parameter point");

    EvalResult out;
    for (std::size_t i = 0; i < mu.size(); ++i) {
        double lo = model.train_params(i, 0), hi = lo;
        for (std::size_t j = 1; j < model.train_params.cols(); ++j) {
            lo = std::min(lo, model.train_params(i, j));
            hi = std::max(hi, model.train_params(i, j));
        }
        if (mu[i] < lo || mu[i] > hi) out.outside_train_box = true;
    }

    const Vector c = interpolate_coeffs(model, mu, out.node_hit);
    out.state = matvec(model.basis.modes, c);
    return out;
}

namespace {

// Sidecar manifest echoing the training parameter table next to the model.
void write_model_manifest(const PodiModel& model, const std::filesystem::path& path) {
    std::filesystem::path mpath = path;
    mpath += ".manifest";
    std::filesystem::path tmp;
    std::ofstream os = romk::open_temp(mpath, tmp);
    const std::size_t n = model.train_params.rows();
    const std::size_t m = model.train_params.cols();
    os << "n_dof=" << model.basis.modes.rows() << "\n";
    os << "m=" << m << "\n";
    os << "param_names=";
    for (std::size_t i = 0; i < n; ++i) os << (i ? "," : "") << "p" << i;
    os << "\n";
    os << "params=";
    bool first = true;
    for (std::size_t j = 0; j < m; ++j)
        for (std::size_t i = 0; i < n; ++i) {
            os << (first ? "" : ",") << format_double(model.train_params(i, j));
            first = false;
        }
    os << "\n";
    os.flush();
    if (!os) throw IoError("failed writing " + tmp.string());
    os.close();
    romk::rename_into(tmp, mpath);
}

} // namespace

void save_model(const PodiModel& model, const std::filesystem::path& path) {
    std::filesystem::path tmp;
    std::ofstream os = romk::open_temp(path, tmp);
    romk::write_header(os, kTag);
    romk::write_u64(os, model.basis.modes.rows());
    romk::write_u64(os, model.basis.modes.cols());
    romk::write_u64(os, model.train_params.rows());
    romk::write_u64(os, model.train_params.cols());
    romk::write_u32(os, kind_code(model.interp.kind));
    romk::write_f64(os, model.interp.epsilon);
    romk::write_f64(os, model.interp.power);
    romk::write_f64(os, model.interp.regularization);
    romk::write_f64(os, model.basis.energy_fraction);
    romk::write_f64_array(os, model.basis.singular_values);
    romk::write_f64_array(os, {model.basis.modes.data(), model.basis.modes.size()});
    romk::write_f64_array(os, {model.train_params.data(), model.train_params.size()});
    romk::write_f64_array(os, {model.coeffs.data(), model.coeffs.size()});
    os.flush();
    if (!os) throw IoError("failed writing " + tmp.string());
    os.close();
    romk::rename_into(tmp, path);
    write_model_manifest(model, path);
}

PodiModel load_model(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open " + path.string());
    const std::string what = path.string();
    romk::check_header(is, what);
    if (romk::read_tag(is, what) != kTag)
        throw FormatError(what + ": not a PODI model file");
    PodiModel model;
    const std::uint64_t n_dof = romk::read_u64(is, what);
    const std::uint64_t r = romk::read_u64(is, what);
    const std::uint64_t n_params = romk::read_u64(is, what);
    const std::uint64_t m = romk::read_u64(is, what);
    model.interp.kind = kind_from_code(romk::read_u32(is, what), what);
    model.interp.epsilon = romk::read_f64(is, what);
    model.interp.power = romk::read_f64(is, what);
    model.interp.regularization = romk::read_f64(is, what);
    model.basis.energy_fraction = romk::read_f64(is, what);
    model.basis.singular_values.resize(r);
    romk::read_f64_array(is, model.basis.singular_values, what);
    model.basis.modes = Matrix(n_dof, r);
    romk::read_f64_array(is, {model.basis.modes.data(), model.basis.modes.size()}, what);
    model.train_params = Matrix(n_params, m);
    romk::read_f64_array(is, {model.train_params.data(), model.train_params.size()}, what);
    model.coeffs = Matrix(r, m);
    romk::read_f64_array(is, {model.coeffs.data(), model.coeffs.size()}, what);
    if (model.interp.is_rbf())
        model.rbf_coefficients = rbf_fit(model.train_params, model.coeffs, model.interp);
    return model;
}

double training_residual(const PodiModel& model, const SnapshotSet& set) {
    double worst = 0.0;
    for (std::size_t j = 0; j < set.m(); ++j) {
        std::vector<double> mu(model.train_params.rows());
        for (std::size_t i = 0; i < mu.size(); ++i) mu[i] = model.train_params(i, j);
        const EvalResult r = evaluate(model, mu);
        auto col = set.data.col(j);
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < set.n_dof(); ++i) {
            const double d = r.state[i] - col[i];
            num += d * d;
            den += col[i] * col[i];
        }
        worst = std::max(worst, den > 0.0 ? std::sqrt(num / den) : std::sqrt(num));
    }
    return worst;
}

} // namespace podi
} // namespace romkit
