#include "romkit/romk_format.hpp"

#include <cstring>

namespace romkit::romk {

namespace {

template <typename T>
void write_raw(std::ostream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_raw(std::istream& is, const std::string& what) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw FormatError(what + ": truncated file");
    return v;
}

} // namespace

void write_u32(std::ostream& os, std::uint32_t v) { write_raw(os, v); }
void write_u64(std::ostream& os, std::uint64_t v) { write_raw(os, v); }
void write_f64(std::ostream& os, double v) { write_raw(os, v); }

void write_f64_array(std::ostream& os, std::span<const double> v) {
    os.write(reinterpret_cast<const char*>(v.data()),
             static_cast<std::streamsize>(v.size() * sizeof(double)));
}

void write_c64_array(std::ostream& os, std::span<const Complex> v) {
    for (const Complex& z : v) {
        write_f64(os, z.real());
        write_f64(os, z.imag());
    }
}

std::uint32_t read_u32(std::istream& is, const std::string& what) {
    return read_raw<std::uint32_t>(is, what);
}
std::uint64_t read_u64(std::istream& is, const std::string& what) {
    return read_raw<std::uint64_t>(is, what);
}
double read_f64(std::istream& is, const std::string& what) { return read_raw<double>(is, what); }

void read_f64_array(std::istream& is, std::span<double> v, const std::string& what) {
    is.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
    if (!is) throw FormatError(what + ": truncated payload");
}

void read_c64_array(std::istream& is, std::span<Complex> v, const std::string& what) {
    for (Complex& z : v) {
        const double re = read_f64(is, what);
        const double im = read_f64(is, what);
        z = Complex(re, im);
    }
}

void write_header(std::ostream& os) {
    os.write(kMagic.data(), 4);
    write_u32(os, kVersion);
}

void write_header(std::ostream& os, std::array<char, 4> tag) {
    write_header(os);
    os.write(tag.data(), 4);
}

void check_header(std::istream& is, const std::string& path) {
    std::array<char, 4> magic{};
    is.read(magic.data(), 4);
    if (!is || magic != kMagic) throw FormatError(path + ": bad magic at offset 0, not a romk file");
    const std::uint32_t version = read_u32(is, path);
    if (version != kVersion)
        throw FormatError(path + ": unsupported romk version " + std::to_string(version));
}

std::array<char, 4> read_tag(std::istream& is, const std::string& path) {
    std::array<char, 4> tag{};
    is.read(tag.data(), 4);
    if (!is) throw FormatError(path + ": truncated file, missing section tag");
    return tag;
}

std::ofstream open_temp(const std::filesystem::path& path, std::filesystem::path& tmp_out) {
    tmp_out = path;
    tmp_out += ".tmp";
    std::ofstream os(tmp_out, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open " + tmp_out.string() + " for writing");
    return os;
}

void rename_into(const std::filesystem::path& tmp, const std::filesystem::path& path) {
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp);
        throw IoError("cannot move " + tmp.string() + " to " + path.string() + ": " + ec.message());
    }
}

} // namespace romkit::romk
