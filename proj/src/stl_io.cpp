#include "romkit/stl_io.hpp"

#include "romkit/romk_format.hpp"

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <unordered_map>

namespace romkit {
namespace morph {

namespace {

// Line-based tokenizer that remembers the current line for error messages.
class StlScanner {
public:
    explicit StlScanner(std::istream& is, std::string path) : is_(is), path_(std::move(path)) {}

    bool next(std::string& token) {
        while (true) {
            if (pos_ < tokens_.size()) {
                token = tokens_[pos_++];
                return true;
            }
            if (!std::getline(is_, line_)) return false;
            ++line_no_;
            tokens_.clear();
            pos_ = 0;
            std::istringstream ls(line_);
            std::string t;
            while (ls >> t) tokens_.push_back(t);
        }
    }

    std::string expect(const char* what) {
        std::string token;
        if (!next(token)) fail(std::string("unexpected end of file, expected ") + what);
        return token;
    }

    void expect_keyword(const char* keyword) {
        const std::string token = expect(keyword);
        if (token != keyword) fail("expected '" + std::string(keyword) + "', got '" + token + "'");
    }

    double expect_number(const char* what) {
        const std::string token = expect(what);
        double v = 0.0;
        const auto res = std::from_chars(token.data(), token.data() + token.size(), v);
        if (res.ec != std::errc{} || res.ptr != token.data() + token.size())
            fail("expected a number for " + std::string(what) + ", got '" + token + "'");
        if (!std::isfinite(v)) fail("non-finite " + std::string(what));
        return v;
    }

    [[noreturn]] void fail(const std::string& message) const {
        throw FormatError(path_ + ":" + std::to_string(line_no_) + ": " + message);
    }

    std::size_t line() const { return line_no_; }

private:
    std::istream& is_;
    std::string path_;
    std::string line_;
    std::vector<std::string> tokens_;
    std::size_t pos_ = 0;
    std::size_t line_no_ = 0;
};

void reject_binary(const std::filesystem::path& path) {
    std::ifstream probe(path, std::ios::binary);
    if (!probe) throw IoError("cannot open " + path.string());
    char buf[512];
    probe.read(buf, sizeof(buf));
    const std::streamsize got = probe.gcount();
    for (std::streamsize i = 0; i < got; ++i) {
        const unsigned char c = static_cast<unsigned char>(buf[i]);
        if (c == 0 || (c > 127)) {
            throw FormatError(path.string() +
                              ": binary STL detected; only ASCII STL is supported "
                              "(convert the file to ASCII first)");
        }
    }
}

struct GridKey {
    std::int64_t x, y, z;
    bool operator==(const GridKey&) const = default;
};

struct GridKeyHash {
    std::size_t operator()(const GridKey& k) const {
        std::uint64_t h = 1469598103934665603ull;
        for (std::int64_t v : {k.x, k.y, k.z}) {
            h ^= static_cast<std::uint64_t>(v);
            h *= 1099511628211ull;
        }
        return static_cast<std::size_t>(h);
    }
};

} // namespace

std::vector<std::size_t> validate_mesh(const TriMesh& mesh) {
    if (mesh.vertices.rows() != 3)
        throw DimensionError("mesh vertices must have 3 coordinate rows");
    const std::size_t v = mesh.vertices.cols();
    std::vector<std::size_t> degenerate;
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        const auto& tri = mesh.triangles[t];
        for (std::size_t idx : tri)
            if (idx >= v)
                throw ValidationError("triangle " + std::to_string(t) + " references vertex " +
                                      std::to_string(idx) + " of " + std::to_string(v));
        const auto a = mesh.vertices.col(tri[0]);
        const auto b = mesh.vertices.col(tri[1]);
        const auto c = mesh.vertices.col(tri[2]);
        const double ux = b[0] - a[0], uy = b[1] - a[1], uz = b[2] - a[2];
        const double vx = c[0] - a[0], vy = c[1] - a[1], vz = c[2] - a[2];
        const double nx = uy * vz - uz * vy;
        const double ny = uz * vx - ux * vz;
        const double nz = ux * vy - uy * vx;
        if (nx * nx + ny * ny + nz * nz == 0.0) degenerate.push_back(t);
    }
    return degenerate;
}

TriMesh read_stl(const std::filesystem::path& path) {
    reject_binary(path);
    std::ifstream is(path);
    if (!is) throw IoError("cannot open " + path.string());
    StlScanner scan(is, path.string());

    TriMesh mesh;
    scan.expect_keyword("solid");
    std::string token;
    bool have_token = scan.next(token);
    // optional solid name (may be absent right before facet/endsolid)
    if (have_token && token != "facet" && token != "endsolid") {
        mesh.name = token;
        have_token = scan.next(token);
    }

    std::vector<double> coords;
    while (true) {
        if (!have_token) scan.fail("unexpected end of file inside solid");
        if (token == "endsolid") break;
        if (token != "facet") scan.fail("expected 'facet' or 'endsolid', got '" + token + "'");
        scan.expect_keyword("normal");
        scan.expect_number("normal x");
        scan.expect_number("normal y");
        scan.expect_number("normal z");
        scan.expect_keyword("outer");
        scan.expect_keyword("loop");
        std::size_t nverts = 0;
        while (true) {
            const std::string inner = scan.expect("'vertex' or 'endloop'");
            if (inner == "endloop") break;
            if (inner != "vertex")
                scan.fail("expected 'vertex' or 'endloop', got '" + inner + "'");
            coords.push_back(scan.expect_number("vertex x"));
            coords.push_back(scan.expect_number("vertex y"));
            coords.push_back(scan.expect_number("vertex z"));
            ++nverts;
        }
        if (nverts != 3)
            scan.fail("facet loop has " + std::to_string(nverts) + " vertices, expected 3");
        scan.expect_keyword("endfacet");
        const std::size_t base = coords.size() / 3 - 3;
        mesh.triangles.push_back({base, base + 1, base + 2});
        have_token = scan.next(token);
    }
    // trailing solid name after endsolid is allowed and ignored

    mesh.vertices = Matrix(3, coords.size() / 3);
    for (std::size_t v = 0; v < coords.size() / 3; ++v)
        for (std::size_t c = 0; c < 3; ++c) mesh.vertices(c, v) = coords[3 * v + c];
    validate_mesh(mesh);
    return mesh;
}

void write_stl(const TriMesh& mesh, const std::filesystem::path& path) {
    validate_mesh(mesh);
    std::filesystem::path tmp;
    std::ofstream os = romk::open_temp(path, tmp);
    const std::string name = mesh.name.empty() ? "romkit" : mesh.name;
    os << "solid " << name << "\n";
    for (const auto& tri : mesh.triangles) {
        const auto a = mesh.vertices.col(tri[0]);
        const auto b = mesh.vertices.col(tri[1]);
        const auto c = mesh.vertices.col(tri[2]);
        const double ux = b[0] - a[0], uy = b[1] - a[1], uz = b[2] - a[2];
        const double vx = c[0] - a[0], vy = c[1] - a[1], vz = c[2] - a[2];
        double nx = uy * vz - uz * vy;
        double ny = uz * vx - ux * vz;
        double nz = ux * vy - uy * vx;
        const double len = std::sqrt(nx * nx + ny * ny + nz * nz);
        if (len > 0.0) {
            nx /= len;
            ny /= len;
            nz /= len;
        } else {
            nx = ny = 0.0;
            nz = 0.0;
        }
        os << "  facet normal " << format_double(nx) << " " << format_double(ny) << " "
           << format_double(nz) << "\n";
        os << "    outer loop\n";
        for (std::size_t idx : tri) {
            const auto p = mesh.vertices.col(idx);
            os << "      vertex " << format_double(p[0]) << " " << format_double(p[1]) << " "
               << format_double(p[2]) << "\n";
        }
        os << "    endloop\n";
        os << "  endfacet\n";
    }
    os << "endsolid " << name << "\n";
    os.flush();
    if (!os) throw IoError("failed writing " + tmp.string());
    os.close();
    romk::rename_into(tmp, path);
}

TriMesh weld_vertices(const TriMesh& mesh, double tol) {
    validate_mesh(mesh);
    if (!(tol > 0.0)) throw ValidationError("weld tolerance must be positive");
    const std::size_t v = mesh.vertices.cols();

    std::unordered_map<GridKey, std::vector<std::size_t>, GridKeyHash> grid;
    std::vector<std::size_t> remap(v);
    std::vector<double> kept;  // packed xyz of surviving vertices
    for (std::size_t i = 0; i < v; ++i) {
        const auto p = mesh.vertices.col(i);
        const GridKey key = {static_cast<std::int64_t>(std::floor(p[0] / tol)),
                             static_cast<std::int64_t>(std::floor(p[1] / tol)),
                             static_cast<std::int64_t>(std::floor(p[2] / tol))};
        bool matched = false;
        for (std::int64_t dx = -1; dx <= 1 && !matched; ++dx)
            for (std::int64_t dy = -1; dy <= 1 && !matched; ++dy)
                for (std::int64_t dz = -1; dz <= 1 && !matched; ++dz) {
                    const auto it = grid.find({key.x + dx, key.y + dy, key.z + dz});
                    if (it == grid.end()) continue;
                    for (std::size_t cand : it->second) {
                        const double ex = kept[3 * cand] - p[0];
                        const double ey = kept[3 * cand + 1] - p[1];
                        const double ez = kept[3 * cand + 2] - p[2];
                        if (ex * ex + ey * ey + ez * ez <= tol * tol) {
                            remap[i] = cand;
                            matched = true;
                            break;
                        }
                    }
                }
        if (!matched) {
            const std::size_t id = kept.size() / 3;
            kept.push_back(p[0]);
            kept.push_back(p[1]);
            kept.push_back(p[2]);
            grid[key].push_back(id);
            remap[i] = id;
        }
    }

    TriMesh out;
    out.name = mesh.name;
    out.vertices = Matrix(3, kept.size() / 3);
    for (std::size_t i = 0; i < kept.size() / 3; ++i)
        for (std::size_t c = 0; c < 3; ++c) out.vertices(c, i) = kept[3 * i + c];
    out.triangles.reserve(mesh.triangles.size());
    for (const auto& tri : mesh.triangles)
        out.triangles.push_back({remap[tri[0]], remap[tri[1]], remap[tri[2]]});
    return out;
}

} // namespace morph
} // namespace romkit
