#pragma once

#include "romkit/core.hpp"

#include <array>
#include <filesystem>
#include <string>
#include <vector>

namespace romkit {
namespace morph {

/// Indexed triangle surface; the ASCII STL carrier for morphing.
struct TriMesh {
    Matrix vertices;  // 3 x V
    std::vector<std::array<std::size_t, 3>> triangles;
    std::string name;
};

/// Throws on out-of-range indices; returns the indices of zero-area triangles
/// (a warning condition, not a rejection).
std::vector<std::size_t> validate_mesh(const TriMesh& mesh);

/// ASCII STL reader. Each facet contributes three fresh vertices; use
/// weld_vertices to merge duplicates. Binary STL input is detected and
/// rejected. Parse errors carry the line number.
TriMesh read_stl(const std::filesystem::path& path);

/// ASCII STL writer; facet normals are recomputed from the vertex winding.
void write_stl(const TriMesh& mesh, const std::filesystem::path& path);

/// Merges vertices closer than tol (absolute) and remaps the triangles.
TriMesh weld_vertices(const TriMesh& mesh, double tol = 1e-9);

} // namespace morph
} // namespace romkit
