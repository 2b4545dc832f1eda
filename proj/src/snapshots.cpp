#include "romkit/snapshots.hpp"

#include "romkit/romk_format.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace romkit {

namespace {

constexpr std::uint32_t kFlagTimes = 1u << 0;
constexpr std::uint32_t kFlagParams = 1u << 1;

double parse_field(std::string_view field, std::size_t line_no, std::size_t offset) {
    std::size_t b = 0, e = field.size();
    while (b < e && (field[b] == ' ' || field[b] == '\t')) ++b;
    while (e > b && (field[e - 1] == ' ' || field[e - 1] == '\t' || field[e - 1] == '\r')) --e;
    double value = 0.0;
    const auto res = std::from_chars(field.data() + b, field.data() + e, value);
    if (res.ec != std::errc{} || res.ptr != field.data() + e)
        throw FormatError("csv: malformed number at line " + std::to_string(line_no) +
                          ", offset " + std::to_string(offset + b + 1));
    return value;
}

std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = s.find(sep, start);
        if (pos == std::string_view::npos) {
            out.emplace_back(s.substr(start));
            break;
        }
        out.emplace_back(s.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

std::filesystem::path manifest_path(const std::filesystem::path& path) {
    std::filesystem::path p = path;
    p += ".manifest";
    return p;
}

std::vector<double> parse_double_list(const std::string& value, const std::string& what) {
    std::vector<double> out;
    for (const std::string& f : split(value, ',')) {
        double v = 0.0;
        const auto res = std::from_chars(f.data(), f.data() + f.size(), v);
        if (res.ec != std::errc{} || res.ptr != f.data() + f.size())
            throw FormatError(what + ": malformed number '" + f + "'");
        out.push_back(v);
    }
    return out;
}

void write_manifest(const SnapshotSet& set, const std::filesystem::path& data_path) {
    const std::filesystem::path mpath = manifest_path(data_path);
    std::filesystem::path tmp;
    std::ofstream os = romk::open_temp(mpath, tmp);
    os << "n_dof=" << set.n_dof() << "\n";
    os << "m=" << set.m() << "\n";
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(content_checksum(set)));
    os << "checksum=" << buf << "\n";
    if (set.dt_explicit) os << "dt=" << format_double(*set.dt_explicit) << "\n";
    if (set.times) {
        os << "times=";
        for (std::size_t i = 0; i < set.times->size(); ++i)
            os << (i ? "," : "") << format_double((*set.times)[i]);
        os << "\n";
    }
    if (set.params) {
        const std::size_t n_params = set.params->rows();
        os << "param_names=";
        for (std::size_t i = 0; i < n_params; ++i) os << (i ? "," : "") << "p" << i;
        os << "\n";
        os << "params=";
        bool first = true;
        for (std::size_t j = 0; j < set.params->cols(); ++j)
            for (std::size_t i = 0; i < n_params; ++i) {
                os << (first ? "" : ",") << format_double((*set.params)(i, j));
                first = false;
            }
        os << "\n";
    }
    os.flush();
    if (!os) throw IoError("failed writing " + tmp.string());
    os.close();
    romk::rename_into(tmp, mpath);
}

void apply_manifest(SnapshotSet& set, const std::filesystem::path& data_path) {
    const std::filesystem::path mpath = manifest_path(data_path);
    std::ifstream is(mpath);
    if (!is) return; // sidecar is optional
    const std::string what = mpath.string();

    std::string line;
    std::size_t n_dof = set.n_dof(), m = set.m();
    std::optional<std::uint64_t> checksum;
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) throw FormatError(what + ": expected key=value, got '" + line + "'");
        const std::string key = line.substr(0, eq);
        const std::string value = line.substr(eq + 1);
        if (key == "n_dof") {
            n_dof = std::stoull(value);
        } else if (key == "m") {
            m = std::stoull(value);
        } else if (key == "dt") {
            set.dt_explicit = parse_double_list(value, what).at(0);
        } else if (key == "times") {
            set.times = parse_double_list(value, what);
        } else if (key == "params") {
            const std::vector<double> flat = parse_double_list(value, what);
            if (set.m() == 0 || flat.size() % set.m() != 0)
                throw FormatError(what + ": params length " + std::to_string(flat.size()) +
                                  " is not a multiple of m=" + std::to_string(set.m()));
            const std::size_t n_params = flat.size() / set.m();
            Matrix p(n_params, set.m());
            for (std::size_t j = 0; j < set.m(); ++j)
                for (std::size_t i = 0; i < n_params; ++i) p(i, j) = flat[j * n_params + i];
            set.params = std::move(p);
        } else if (key == "checksum") {
            checksum = std::stoull(value, nullptr, 16);
        } else if (key == "param_names") {
            // label-only metadata, validated for count on demand by callers
        } else {
            throw FormatError(what + ": unknown key '" + key + "'");
        }
    }
    if (n_dof != set.n_dof() || m != set.m())
        throw FormatError(what + ": manifest dimensions " + std::to_string(n_dof) + "x" +
                          std::to_string(m) + " do not match data " + std::to_string(set.n_dof()) +
                          "x" + std::to_string(set.m()));
    if (checksum && *checksum != content_checksum(set))
        throw FormatError(what + ": checksum mismatch, dataset content differs from manifest");
}

SnapshotSet load_csv(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open " + path.string());
    SnapshotSet set;
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t line_no = 0;
    std::size_t width = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<double> row;
        std::size_t offset = 0;
        for (const std::string& field : split(line, ',')) {
            row.push_back(parse_field(field, line_no, offset));
            offset += field.size() + 1;
        }
        if (width == 0) width = row.size();
        if (row.size() != width)
            throw DimensionError("csv: ragged row at line " + std::to_string(line_no) + " (" +
                                 std::to_string(row.size()) + " entries, expected " +
                                 std::to_string(width) + ")");
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw FormatError(path.string() + ": empty csv file");
    set.data = Matrix(rows.size(), width);
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < width; ++j) {
            if (!std::isfinite(rows[i][j]))
                throw ValidationError(path.string() + ": non-finite value at (row " +
                                      std::to_string(i) + ", col " + std::to_string(j) + ")");
            set.data(i, j) = rows[i][j];
        }
    apply_manifest(set, path);
    validate(set);
    return set;
}

void save_csv(const SnapshotSet& set, const std::filesystem::path& path) {
    std::filesystem::path tmp;
    std::ofstream os = romk::open_temp(path, tmp);
    for (std::size_t i = 0; i < set.n_dof(); ++i) {
        for (std::size_t j = 0; j < set.m(); ++j)
            os << (j ? "," : "") << format_double(set.data(i, j));
        os << "\n";
    }
    os.flush();
    if (!os) throw IoError("failed writing " + tmp.string());
    os.close();
    romk::rename_into(tmp, path);
    write_manifest(set, path);
}

SnapshotSet load_romk(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open " + path.string());
    const std::string what = path.string();
    romk::check_header(is, what);
    const std::uint64_t n_dof = romk::read_u64(is, what);
    const std::uint64_t m = romk::read_u64(is, what);
    const std::uint32_t flags = romk::read_u32(is, what);
    if (n_dof == 0 || m == 0)
        throw DimensionError(what + ": dataset is " + std::to_string(n_dof) + "x" +
                             std::to_string(m));

    const std::streamoff payload_start = is.tellg();
    is.seekg(0, std::ios::end);
    const std::streamoff payload_bytes = is.tellg() - payload_start;
    is.seekg(payload_start);
    if (payload_bytes < 0 || payload_bytes % 8 != 0)
        throw FormatError(what + ": payload is not a whole number of float64 values");
    std::uint64_t remaining = static_cast<std::uint64_t>(payload_bytes) / 8;

    SnapshotSet set;
    set.data = Matrix(n_dof, m);
    if (remaining < n_dof * m) throw FormatError(what + ": truncated data payload");
    romk::read_f64_array(is, {set.data.data(), set.data.size()}, what);
    remaining -= n_dof * m;

    if (flags & kFlagTimes) {
        if (remaining < m) throw FormatError(what + ": truncated times payload");
        std::vector<double> times(m);
        romk::read_f64_array(is, times, what);
        set.times = std::move(times);
        remaining -= m;
    }
    if (flags & kFlagParams) {
        if (remaining == 0 || remaining % m != 0)
            throw FormatError(what + ": params payload length " + std::to_string(remaining) +
                              " is not a positive multiple of m=" + std::to_string(m));
        const std::uint64_t n_params = remaining / m;
        Matrix p(n_params, m);
        romk::read_f64_array(is, {p.data(), p.size()}, what);
        set.params = std::move(p);
        remaining = 0;
    }
    if (remaining != 0) throw FormatError(what + ": trailing bytes after payload");
    validate(set);
    return set;
}

void save_romk(const SnapshotSet& set, const std::filesystem::path& path) {
    std::filesystem::path tmp;
    std::ofstream os = romk::open_temp(path, tmp);
    romk::write_header(os);
    romk::write_u64(os, set.n_dof());
    romk::write_u64(os, set.m());
    std::uint32_t flags = 0;
    if (set.times) flags |= kFlagTimes;
    if (set.params) flags |= kFlagParams;
    romk::write_u32(os, flags);
    romk::write_f64_array(os, {set.data.data(), set.data.size()});
    if (set.times) romk::write_f64_array(os, *set.times);
    if (set.params) romk::write_f64_array(os, {set.params->data(), set.params->size()});
    os.flush();
    if (!os) throw IoError("failed writing " + tmp.string());
    os.close();
    romk::rename_into(tmp, path);
}

} // namespace

double SnapshotSet::dt() const {
    if (dt_explicit) return *dt_explicit;
    if (times && times->size() >= 2)
        return (times->back() - times->front()) / static_cast<double>(times->size() - 1);
    return 1.0;
}

void validate(const SnapshotSet& set) {
    require_nonempty(set.data, "snapshot set");
    require_finite(set.data, "snapshot set");
    if (set.times) {
        if (set.times->size() != set.m())
            throw DimensionError("times length " + std::to_string(set.times->size()) +
                                 " does not match snapshot count " + std::to_string(set.m()));
        require_finite(*set.times, "times");
        if (set.times->size() >= 2) {
            const double dt =
                (set.times->back() - set.times->front()) / static_cast<double>(set.m() - 1);
            if (!(dt > 0.0)) throw ValidationError("times must be strictly increasing");
            for (std::size_t i = 0; i + 1 < set.times->size(); ++i) {
                const double step = (*set.times)[i + 1] - (*set.times)[i];
                if (!(step > 0.0)) throw ValidationError("times must be strictly increasing");
                if (std::abs(step - dt) > 1e-9 * dt)
                    throw ValidationError("times are not uniformly spaced: step " +
                                          std::to_string(i) + " deviates from dt by more than 1e-9*dt");
            }
        }
    }
    if (set.params) {
        if (set.params->cols() != set.m())
            throw DimensionError("parameter table has " + std::to_string(set.params->cols()) +
                                 " columns, expected one per snapshot (" + std::to_string(set.m()) +
                                 ")");
        require_finite(*set.params, "parameter table");
    }
    if (set.dt_explicit && !(*set.dt_explicit > 0.0))
        throw ValidationError("dt must be positive");
}

SnapshotFormat format_from_extension(const std::filesystem::path& path) {
    const std::string ext = path.extension().string();
    if (ext == ".csv") return SnapshotFormat::Csv;
    if (ext == ".romk") return SnapshotFormat::RomkBinary;
    throw FormatError(path.string() + ": unknown extension '" + ext +
                      "', expected .csv or .romk");
}

SnapshotSet load_snapshots(const std::filesystem::path& path, SnapshotFormat format) {
    return format == SnapshotFormat::Csv ? load_csv(path) : load_romk(path);
}

void save_snapshots(const SnapshotSet& set, const std::filesystem::path& path,
                    SnapshotFormat format) {
    validate(set);
    if (format == SnapshotFormat::Csv)
        save_csv(set, path);
    else
        save_romk(set, path);
}

std::pair<Matrix, Matrix> split_shifted(const SnapshotSet& set) {
    if (set.m() < 2)
        throw DimensionError("split_shifted requires at least 2 snapshots, got " +
                             std::to_string(set.m()));
    const std::size_t n = set.n_dof(), m = set.m();
    Matrix s(n, m - 1), sdot(n, m - 1);
    for (std::size_t j = 0; j + 1 < m; ++j) {
        auto src = set.data.col(j);
        auto dst = s.col(j);
        std::copy(src.begin(), src.end(), dst.begin());
        auto src2 = set.data.col(j + 1);
        auto dst2 = sdot.col(j);
        std::copy(src2.begin(), src2.end(), dst2.begin());
    }
    return {std::move(s), std::move(sdot)};
}

std::uint64_t content_checksum(const SnapshotSet& set) {
    std::uint64_t h = fnv1a64(set.data.data(), set.data.size() * sizeof(double));
    if (set.times) h = fnv1a64(set.times->data(), set.times->size() * sizeof(double), h);
    if (set.params) h = fnv1a64(set.params->data(), set.params->size() * sizeof(double), h);
    return h;
}

DatasetManifest manifest_for(const SnapshotSet& set) {
    DatasetManifest m;
    m.n_dof = set.n_dof();
    m.m = set.m();
    if (set.dt_explicit || set.times) m.dt = set.dt();
    if (set.params)
        for (std::size_t i = 0; i < set.params->rows(); ++i)
            m.param_names.push_back("p" + std::to_string(i));
    m.checksum = content_checksum(set);
    return m;
}

} // namespace romkit
