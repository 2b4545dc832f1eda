#include "romkit/interp.hpp"

#include "romkit/linsolve.hpp"

#include <cmath>

namespace romkit {

void validate(const InterpolatorConfig& cfg) {
    if (cfg.kind == InterpolatorConfig::Kind::RbfGaussian ||
        cfg.kind == InterpolatorConfig::Kind::RbfMultiquadric) {
        if (!(cfg.epsilon > 0.0))
            throw ValidationError("interpolator: epsilon must be positive, got " +
                                  format_double(cfg.epsilon));
    }
    if (cfg.kind == InterpolatorConfig::Kind::Idw && !(cfg.power > 0.0))
        throw ValidationError("interpolator: idw power must be positive, got " +
                              format_double(cfg.power));
    if (cfg.regularization < 0.0)
        throw ValidationError("interpolator: regularization must be >= 0");
}

std::string kind_name(InterpolatorConfig::Kind kind) {
    switch (kind) {
        case InterpolatorConfig::Kind::RbfGaussian: return "rbf-gaussian";
        case InterpolatorConfig::Kind::RbfThinPlate: return "rbf-thin-plate";
        case InterpolatorConfig::Kind::RbfMultiquadric: return "rbf-multiquadric";
        case InterpolatorConfig::Kind::Idw: return "idw";
    }
    return "idw";
}

InterpolatorConfig::Kind kind_from_name(const std::string& name) {
    if (name == "rbf-gaussian" || name == "gaussian") return InterpolatorConfig::Kind::RbfGaussian;
    if (name == "rbf-thin-plate" || name == "thin-plate")
        return InterpolatorConfig::Kind::RbfThinPlate;
    if (name == "rbf-multiquadric" || name == "multiquadric")
        return InterpolatorConfig::Kind::RbfMultiquadric;
    if (name == "idw") return InterpolatorConfig::Kind::Idw;
    throw ValidationError("unknown interpolator '" + name +
                          "', expected idw | rbf-gaussian | rbf-thin-plate | rbf-multiquadric");
}

double rbf_phi(const InterpolatorConfig& cfg, double d) {
    switch (cfg.kind) {
        case InterpolatorConfig::Kind::RbfGaussian: {
            const double ed = cfg.epsilon * d;
            return std::exp(-ed * ed);
        }
        case InterpolatorConfig::Kind::RbfThinPlate:
            return d > 0.0 ? d * d * std::log(d) : 0.0;
        case InterpolatorConfig::Kind::RbfMultiquadric: {
            const double ed = cfg.epsilon * d;
            return std::sqrt(1.0 + ed * ed);
        }
        case InterpolatorConfig::Kind::Idw:
            break;
    }
    throw ValidationError("rbf_phi called with a non-rbf interpolator");
}

double node_distance(const Matrix& nodes, std::size_t j, std::span<const double> query) {
    auto c = nodes.col(j);
    double s = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) {
        const double d = query[i] - c[i];
        s += d * d;
    }
    return std::sqrt(s);
}

IdwWeights idw_weights(const Matrix& nodes, std::span<const double> query, double power) {
    const std::size_t m = nodes.cols();
    IdwWeights out;
    out.w.assign(m, 0.0);
    Vector dist(m);
    for (std::size_t j = 0; j < m; ++j) {
        dist[j] = node_distance(nodes, j, query);
        if (dist[j] <= 1e-12) {
            out.w[j] = 1.0;
            out.node_hit = j;
            return out;
        }
    }
    double total = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
        out.w[j] = std::pow(dist[j], -power);
        total += out.w[j];
    }
    for (double& w : out.w) w /= total;
    return out;
}

Matrix rbf_kernel_matrix(const Matrix& nodes, const InterpolatorConfig& cfg) {
    const std::size_t m = nodes.cols();
    Matrix k(m, m);
    for (std::size_t j = 0; j < m; ++j) {
        for (std::size_t i = j; i < m; ++i) {
            const double d = node_distance(nodes, i, nodes.col(j));
            const double v = rbf_phi(cfg, d);
            k(i, j) = v;
            k(j, i) = v;
        }
        k(j, j) += cfg.regularization;
    }
    return k;
}

Matrix rbf_fit(const Matrix& nodes, const Matrix& values, const InterpolatorConfig& cfg) {
    if (values.cols() != nodes.cols())
        throw DimensionError("rbf_fit: values have " + std::to_string(values.cols()) +
                             " columns, expected one per node (" + std::to_string(nodes.cols()) +
                             ")");
    const Matrix k = rbf_kernel_matrix(nodes, cfg);
    try {
        return lu_solve(k, transpose(values), "rbf kernel system");
    } catch (const ConditioningError&) {
        throw ConditioningError("rbf kernel system is singular with regularization=" +
                                format_double(cfg.regularization) +
                                "; increase regularization (lambda > 0)");
    }
}

Vector rbf_eval_row(const Matrix& nodes, std::span<const double> query,
                    const InterpolatorConfig& cfg) {
    Vector row(nodes.cols());
    for (std::size_t j = 0; j < nodes.cols(); ++j)
        row[j] = rbf_phi(cfg, node_distance(nodes, j, query));
    return row;
}

void require_distinct_nodes(const Matrix& nodes, const std::string& what) {
    for (std::size_t a = 0; a < nodes.cols(); ++a)
        for (std::size_t b = a + 1; b < nodes.cols(); ++b) {
            const double d = node_distance(nodes, a, nodes.col(b));
            if (d < 1e-12)
                throw ValidationError(what + ": duplicate points at columns " + std::to_string(a) +
                                      " and " + std::to_string(b));
        }
}

} // namespace romkit
