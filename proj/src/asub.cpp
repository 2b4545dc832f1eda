#include "romkit/asub.hpp"

#include "romkit/eig.hpp"
#include "romkit/parallel.hpp"
#include "romkit/romk_format.hpp"
#include "romkit/svd.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace romkit {
namespace asub {

namespace {

// Fixed block size for the covariance reduction: partial sums are combined in
// block order, so the result is identical for any thread count.
constexpr std::size_t kBlock = 64;

void check_samples(std::span<const GradientSample> samples) {
    if (samples.empty()) throw ValidationError("covariance: no gradient samples");
    const std::size_t n = samples[0].point.size();
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const GradientSample& s = samples[i];
        if (s.point.size() != n || s.gradient.size() != n)
            throw DimensionError("covariance: sample " + std::to_string(i) +
                                 " has inconsistent dimension");
        require_finite(s.point, "sample " + std::to_string(i) + " point");
        require_finite(s.gradient, "sample " + std::to_string(i) + " gradient");
        if (!(s.weight >= 0.0) || !std::isfinite(s.weight))
            throw ValidationError("covariance: sample " + std::to_string(i) +
                                  " has negative or non-finite weight");
    }
}

double weight_total(std::span<const GradientSample> samples) {
    double t = 0.0;
    for (const GradientSample& s : samples) t += s.weight;
    if (!(t > 0.0)) throw ValidationError("covariance: weights sum to zero");
    return t;
}

// Upper-triangle accumulation of one block of samples.
void block_outer(std::span<const GradientSample> samples, std::size_t begin, std::size_t end,
                 double inv_total, Matrix& acc) {
    const std::size_t n = acc.rows();
    for (std::size_t s = begin; s < end; ++s) {
        const double w = samples[s].weight * inv_total;
        const Vector& g = samples[s].gradient;
        for (std::size_t j = 0; j < n; ++j) {
            const double wgj = w * g[j];
            for (std::size_t i = 0; i <= j; ++i) acc(i, j) += g[i] * wgj;
        }
    }
}

Matrix covariance_blocked(std::span<const GradientSample> samples, bool parallel) {
    check_samples(samples);
    const std::size_t n = samples[0].point.size();
    const double inv_total = 1.0 / weight_total(samples);
    const std::size_t nblocks = (samples.size() + kBlock - 1) / kBlock;

    std::vector<Matrix> partials(nblocks, Matrix(n, n, 0.0));
    if (parallel) {
        const auto nb = static_cast<std::int64_t>(nblocks);
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(thread_count())
#endif
        for (std::int64_t b = 0; b < nb; ++b) {
            const std::size_t begin = static_cast<std::size_t>(b) * kBlock;
            block_outer(samples, begin, std::min(begin + kBlock, samples.size()), inv_total,
                        partials[static_cast<std::size_t>(b)]);
        }
    } else {
        for (std::size_t b = 0; b < nblocks; ++b) {
            const std::size_t begin = b * kBlock;
            block_outer(samples, begin, std::min(begin + kBlock, samples.size()), inv_total,
                        partials[b]);
        }
    }

    Matrix c(n, n, 0.0);
    for (const Matrix& p : partials)
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t i = 0; i <= j; ++i) c(i, j) += p(i, j);
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t i = 0; i < j; ++i) c(j, i) = c(i, j);
    return c;
}

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur += ch;
        }
    }
    out.push_back(cur);
    return out;
}

bool parse_number(const std::string& s, double& out) {
    std::size_t b = 0, e = s.size();
    while (b < e && (s[b] == ' ' || s[b] == '\t')) ++b;
    while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t')) --e;
    const auto res = std::from_chars(s.data() + b, s.data() + e, out);
    return res.ec == std::errc{} && res.ptr == s.data() + e;
}

// Rows of numbers with an optional leading header line.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<Vector> rows;
};

CsvTable read_table(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open " + path.string());
    CsvTable table;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::vector<std::string> fields = split_line(line);
        Vector row(fields.size());
        bool numeric = true;
        for (std::size_t i = 0; i < fields.size(); ++i)
            if (!parse_number(fields[i], row[i])) {
                numeric = false;
                break;
            }
        if (!numeric) {
            if (line_no == 1 && table.rows.empty()) {
                table.header = fields;
                continue;
            }
            throw FormatError(path.string() + ": malformed number at line " +
                              std::to_string(line_no));
        }
        if (!table.rows.empty() && row.size() != table.rows[0].size())
            throw DimensionError(path.string() + ": ragged row at line " +
                                 std::to_string(line_no));
        require_finite(row, path.string() + " line " + std::to_string(line_no));
        table.rows.push_back(std::move(row));
    }
    if (table.rows.empty()) throw FormatError(path.string() + ": no data rows");
    return table;
}

} // namespace

Matrix covariance(std::span<const GradientSample> samples) {
    return covariance_blocked(samples, true);
}

namespace ref {
Matrix covariance(std::span<const GradientSample> samples) {
    return covariance_blocked(samples, false);
}
} // namespace ref

ActiveSubspace decompose(const Matrix& c) {
    require_nonempty(c, "decompose");
    require_finite(c, "decompose");
    if (c.rows() != c.cols())
        throw DimensionError("decompose: covariance is " + std::to_string(c.rows()) + "x" +
                             std::to_string(c.cols()));
    const double scale = std::max(1.0, frobenius_norm(c));
    for (std::size_t j = 0; j < c.cols(); ++j)
        for (std::size_t i = 0; i < j; ++i)
            if (std::abs(c(i, j) - c(j, i)) > 1e-10 * scale)
                throw ValidationError("decompose: matrix asymmetry at (" + std::to_string(i) +
                                      ", " + std::to_string(j) + ") beyond tolerance");

    Matrix sym(c.rows(), c.cols());
    for (std::size_t j = 0; j < c.cols(); ++j)
        for (std::size_t i = 0; i < c.rows(); ++i) sym(i, j) = 0.5 * (c(i, j) + c(j, i));

    const SymEigResult e = eig_sym(sym);
    ActiveSubspace as;
    as.eigenvalues = e.values;
    as.eigenvectors = e.vectors;
    for (double& l : as.eigenvalues) {
        if (l < -1e-10 * scale)
            throw ValidationError("decompose: eigenvalue " + format_double(l) +
                                  " is negative beyond the PSD tolerance");
        if (l < 0.0) l = 0.0;
    }
    return as;
}

ActiveSubspace select_dim(ActiveSubspace as, DimRule rule) {
    const std::size_t n = as.eigenvalues.size();
    if (n == 0) throw ValidationError("select_dim: empty spectrum");
    const double total = std::accumulate(as.eigenvalues.begin(), as.eigenvalues.end(), 0.0);
    if (total == 0.0)
        throw ValidationError("select_dim: all eigenvalues are zero (degenerate function)");

    std::size_t k = 0;
    switch (rule.kind) {
        case DimRule::Kind::Fixed:
            if (rule.k < 1 || rule.k > n)
                throw RangeError("select_dim: fixed dimension " + std::to_string(rule.k) +
                                 " outside [1, " + std::to_string(n) + "]");
            k = rule.k;
            break;
        case DimRule::Kind::Gap: {
            double best_ratio = -1.0;
            for (std::size_t i = 0; i + 1 < n; ++i) {
                if (!(as.eigenvalues[i + 1] > 0.0)) continue;
                const double ratio = as.eigenvalues[i] / as.eigenvalues[i + 1];
                if (ratio > best_ratio) {
                    best_ratio = ratio;
                    k = i + 1;
                }
            }
            if (k == 0) {
                // trailing zeros only: fall back to the numerical rank
                for (std::size_t i = 0; i < n; ++i)
                    if (as.eigenvalues[i] > 0.0) k = i + 1;
            }
            break;
        }
        case DimRule::Kind::Energy: {
            if (!(rule.tau > 0.0) || rule.tau > 1.0)
                throw RangeError("select_dim: energy fraction must lie in (0, 1]");
            double cum = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                cum += as.eigenvalues[i];
                if (cum >= rule.tau * total) {
                    k = i + 1;
                    break;
                }
            }
            if (k == 0) k = n;
            break;
        }
    }

    as.active_dim = k;
    as.w1 = Matrix(n, k);
    for (std::size_t j = 0; j < k; ++j) {
        auto src = as.eigenvectors.col(j);
        auto dst = as.w1.col(j);
        std::copy(src.begin(), src.end(), dst.begin());
    }
    return as;
}

Vector project(const ActiveSubspace& as, std::span<const double> x) {
    if (as.active_dim == 0) throw ValidationError("project: active dimension not selected");
    if (x.size() != as.w1.rows())
        throw DimensionError("project: point has " + std::to_string(x.size()) +
                             " components, subspace expects " + std::to_string(as.w1.rows()));
    Vector y(as.active_dim, 0.0);
    for (std::size_t j = 0; j < as.active_dim; ++j) {
        auto wj = as.w1.col(j);
        double s = 0.0;
        for (std::size_t i = 0; i < wj.size(); ++i) s += wj[i] * x[i];
        y[j] = s;
    }
    return y;
}

std::vector<GradientSample> estimate_gradients(const Matrix& points, const Vector& values,
                                               std::size_t n_neighbors) {
    require_nonempty(points, "estimate_gradients");
    require_finite(points, "estimate_gradients points");
    require_finite(values, "estimate_gradients values");
    const std::size_t n = points.rows();
    const std::size_t m = points.cols();
    if (values.size() != m)
        throw DimensionError("estimate_gradients: " + std::to_string(values.size()) +
                             " values for " + std::to_string(m) + " points");
    if (m < n + 1)
        throw ValidationError("estimate_gradients: need at least N+1 = " + std::to_string(n + 1) +
                              " points, got " + std::to_string(m));
    if (n_neighbors < n + 1 || n_neighbors > m)
        throw RangeError("estimate_gradients: n_neighbors must lie in [N+1, M] = [" +
                         std::to_string(n + 1) + ", " + std::to_string(m) + "]");

    std::vector<GradientSample> samples(m);
    std::vector<std::string> errors(m);
    const auto mi = static_cast<std::int64_t>(m);
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(thread_count())
#endif
    for (std::int64_t pi = 0; pi < mi; ++pi) {
        const auto p = static_cast<std::size_t>(pi);
        try {
            // nearest neighbors by (distance, index)
            std::vector<std::pair<double, std::size_t>> dist(m);
            for (std::size_t j = 0; j < m; ++j) {
                double s = 0.0;
                for (std::size_t i = 0; i < n; ++i) {
                    const double d = points(i, j) - points(i, p);
                    s += d * d;
                }
                dist[j] = {s, j};
            }
            std::partial_sort(dist.begin(),
                              dist.begin() + static_cast<std::ptrdiff_t>(n_neighbors), dist.end());

            // centered affine design [1, (x - x_bar)^T]
            Vector mean(n, 0.0);
            for (std::size_t t = 0; t < n_neighbors; ++t)
                for (std::size_t i = 0; i < n; ++i) mean[i] += points(i, dist[t].second);
            for (double& v : mean) v /= static_cast<double>(n_neighbors);

            Matrix design(n_neighbors, n + 1);
            Vector rhs(n_neighbors);
            for (std::size_t t = 0; t < n_neighbors; ++t) {
                design(t, 0) = 1.0;
                for (std::size_t i = 0; i < n; ++i)
                    design(t, i + 1) = points(i, dist[t].second) - mean[i];
                rhs[t] = values[dist[t].second];
            }
            const SvdResult f = svd(design, RankSpec::full());
            if (f.sigma.back() <= 1e-12 * f.sigma.front())
                throw ConditioningError(
                    "estimate_gradients: rank-deficient neighborhood design at point " +
                    std::to_string(p));
            const Vector sol = lstsq(design, rhs);

            GradientSample& s = samples[p];
            s.point.resize(n);
            for (std::size_t i = 0; i < n; ++i) s.point[i] = points(i, p);
            s.gradient.assign(sol.begin() + 1, sol.end());
            s.weight = 1.0;
        } catch (const std::exception& e) {
            errors[p] = e.what();
        }
    }
    // report the lowest failing point index so the error is deterministic
    for (const std::string& err : errors)
        if (!err.empty()) throw ConditioningError(err);
    return samples;
}

Matrix summary_data(const ActiveSubspace& as, const Matrix& points, const Vector& values) {
    if (as.active_dim == 0) throw ValidationError("summary_data: active dimension not selected");
    if (points.cols() != values.size())
        throw DimensionError("summary_data: " + std::to_string(values.size()) + " values for " +
                             std::to_string(points.cols()) + " points");
    const std::size_t k = as.active_dim;
    Matrix table(points.cols(), k + 1);
    std::vector<double> x(points.rows());
    for (std::size_t j = 0; j < points.cols(); ++j) {
        for (std::size_t i = 0; i < points.rows(); ++i) x[i] = points(i, j);
        const Vector y = project(as, x);
        for (std::size_t i = 0; i < k; ++i) table(j, i) = y[i];
        table(j, k) = values[j];
    }
    return table;
}

SampleTable read_sample_csv(const std::filesystem::path& path) {
    const CsvTable t = read_table(path);
    const std::size_t cols = t.rows[0].size();
    if (cols < 2)
        throw FormatError(path.string() + ": need at least one parameter column plus the value");
    SampleTable out;
    const std::size_t n = cols - 1;
    if (!t.header.empty()) {
        if (t.header.size() != cols)
            throw FormatError(path.string() + ": header width does not match data");
        out.names.assign(t.header.begin(), t.header.end() - 1);
    } else {
        for (std::size_t i = 0; i < n; ++i) out.names.push_back("p" + std::to_string(i));
    }
    out.points = Matrix(n, t.rows.size());
    out.values.resize(t.rows.size());
    for (std::size_t j = 0; j < t.rows.size(); ++j) {
        for (std::size_t i = 0; i < n; ++i) out.points(i, j) = t.rows[j][i];
        out.values[j] = t.rows[j][n];
    }
    return out;
}

std::vector<GradientSample> read_gradient_csv(const std::filesystem::path& path) {
    const CsvTable t = read_table(path);
    const std::size_t cols = t.rows[0].size();
    if (cols % 2 != 0)
        throw FormatError(path.string() +
                          ": gradient table must have 2N columns (point then gradient)");
    const std::size_t n = cols / 2;
    std::vector<GradientSample> samples(t.rows.size());
    for (std::size_t j = 0; j < t.rows.size(); ++j) {
        samples[j].point.assign(t.rows[j].begin(), t.rows[j].begin() + static_cast<std::ptrdiff_t>(n));
        samples[j].gradient.assign(t.rows[j].begin() + static_cast<std::ptrdiff_t>(n),
                                   t.rows[j].end());
        samples[j].weight = 1.0;
    }
    return samples;
}

void write_gradient_csv(const std::filesystem::path& path,
                        std::span<const GradientSample> samples,
                        std::span<const std::string> names) {
    check_samples(samples);
    std::filesystem::path tmp;
    std::ofstream os = romk::open_temp(path, tmp);
    const std::size_t n = samples[0].point.size();
    for (std::size_t i = 0; i < n; ++i)
        os << (i ? "," : "") << (i < names.size() ? names[i] : "p" + std::to_string(i));
    for (std::size_t i = 0; i < n; ++i)
        os << ",d_" << (i < names.size() ? names[i] : "p" + std::to_string(i));
    os << "\n";
    for (const GradientSample& s : samples) {
        for (std::size_t i = 0; i < n; ++i) os << (i ? "," : "") << format_double(s.point[i]);
        for (std::size_t i = 0; i < n; ++i) os << "," << format_double(s.gradient[i]);
        os << "\n";
    }
    os.flush();
    if (!os) throw IoError("failed writing " + tmp.string());
    os.close();
    romk::rename_into(tmp, path);
}

void write_eigenvalue_csv(const std::filesystem::path& path, const ActiveSubspace& as) {
    std::filesystem::path tmp;
    std::ofstream os = romk::open_temp(path, tmp);
    os << "index,eigenvalue\n";
    for (std::size_t i = 0; i < as.eigenvalues.size(); ++i)
        os << i << "," << format_double(as.eigenvalues[i]) << "\n";
    os.flush();
    if (!os) throw IoError("failed writing " + tmp.string());
    os.close();
    romk::rename_into(tmp, path);
}

void write_eigenvector_csv(const std::filesystem::path& path, const ActiveSubspace& as) {
    std::filesystem::path tmp;
    std::ofstream os = romk::open_temp(path, tmp);
    const std::size_t n = as.eigenvectors.rows();
    for (std::size_t j = 0; j < n; ++j) os << (j ? "," : "") << "v" << j;
    os << "\n";
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j)
            os << (j ? "," : "") << format_double(as.eigenvectors(i, j));
        os << "\n";
    }
    os.flush();
    if (!os) throw IoError("failed writing " + tmp.string());
    os.close();
    romk::rename_into(tmp, path);
}

ActiveSubspace read_subspace_csv(const std::filesystem::path& eigenvalue_path,
                                 const std::filesystem::path& eigenvector_path) {
    const CsvTable vals = read_table(eigenvalue_path);
    const CsvTable vecs = read_table(eigenvector_path);
    ActiveSubspace as;
    as.eigenvalues.resize(vals.rows.size());
    for (std::size_t i = 0; i < vals.rows.size(); ++i) {
        if (vals.rows[i].size() != 2)
            throw FormatError(eigenvalue_path.string() + ": expected index,eigenvalue rows");
        as.eigenvalues[i] = vals.rows[i][1];
    }
    const std::size_t n = vecs.rows[0].size();
    if (vecs.rows.size() != n || n != as.eigenvalues.size())
        throw DimensionError(eigenvector_path.string() + ": eigenvector table must be " +
                             std::to_string(as.eigenvalues.size()) + " square");
    as.eigenvectors = Matrix(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) as.eigenvectors(i, j) = vecs.rows[i][j];
    return as;
}

void write_summary_csv(const std::filesystem::path& path, const Matrix& table) {
    std::filesystem::path tmp;
    std::ofstream os = romk::open_temp(path, tmp);
    const std::size_t k = table.cols() - 1;
    for (std::size_t j = 0; j < k; ++j) os << (j ? "," : "") << "y" << j;
    os << ",f\n";
    for (std::size_t i = 0; i < table.rows(); ++i) {
        for (std::size_t j = 0; j < table.cols(); ++j)
            os << (j ? "," : "") << format_double(table(i, j));
        os << "\n";
    }
    os.flush();
    if (!os) throw IoError("failed writing " + tmp.string());
    os.close();
    romk::rename_into(tmp, path);
}

} // namespace asub
} // namespace romkit
