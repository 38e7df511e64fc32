#pragma once

#include "epiguide/mesh.hpp"

#include <filesystem>

namespace epiguide {

struct LoadedMesh {
  Mesh mesh;
  /// Set when some edge is not shared by exactly two triangles. Signed
  /// distance queries against such a mesh cannot determine inside/outside.
  bool non_manifold = false;
};

/// Reads STL (binary or ASCII, detected from content) or OBJ (by extension).
/// STL vertices are merged by exact position. Normals are recomputed from the
/// winding. Throws ParseError on malformed or truncated input.
LoadedMesh load_mesh(const std::filesystem::path& path);

enum class StlEncoding { Binary, Ascii };

void save_stl(const Mesh& mesh, const std::filesystem::path& path, StlEncoding encoding);
void save_obj(const Mesh& mesh, const std::filesystem::path& path);

/// Writes to a sibling temp file and renames over `path`.
void write_file_atomically(const std::filesystem::path& path, const std::string& bytes);

} // namespace epiguide
