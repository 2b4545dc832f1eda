#pragma once

#include "romkit/core.hpp"

#include <array>
#include <bit>
#include <filesystem>
#include <fstream>

namespace romkit::romk {

// Shared low-level pieces of the romk binary container: 4-byte magic "ROMK",
// u32 version, then either a bare snapshot payload or a 4-byte section tag for
// model files. All integers little-endian, all floats IEEE-754 binary64.

inline constexpr std::array<char, 4> kMagic = {'R', 'O', 'M', 'K'};
inline constexpr std::uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "romk binary I/O assumes a little-endian host");

void write_u32(std::ostream& os, std::uint32_t v);
void write_u64(std::ostream& os, std::uint64_t v);
void write_f64(std::ostream& os, double v);
void write_f64_array(std::ostream& os, std::span<const double> v);
void write_c64_array(std::ostream& os, std::span<const Complex> v);

std::uint32_t read_u32(std::istream& is, const std::string& what);
std::uint64_t read_u64(std::istream& is, const std::string& what);
double read_f64(std::istream& is, const std::string& what);
void read_f64_array(std::istream& is, std::span<double> v, const std::string& what);
void read_c64_array(std::istream& is, std::span<Complex> v, const std::string& what);

void write_header(std::ostream& os);
void write_header(std::ostream& os, std::array<char, 4> tag);
void check_header(std::istream& is, const std::string& path);
std::array<char, 4> read_tag(std::istream& is, const std::string& path);

/// Opens for writing at `<path>.tmp`; rename_into commits atomically.
std::ofstream open_temp(const std::filesystem::path& path, std::filesystem::path& tmp_out);
void rename_into(const std::filesystem::path& tmp, const std::filesystem::path& path);

} // namespace romkit::romk
