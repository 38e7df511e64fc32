#include "epiguide/mesh_io.hpp"

#include "epiguide/error.hpp"

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>

namespace epiguide {

namespace fs = std::filesystem;

namespace {

std::string read_all(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ParseError("cannot open mesh file: " + path.string());
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

template <typename T>
T read_le(const char* p) {
  T value;
  std::memcpy(&value, p, sizeof(T));
  return value;
}

template <typename T>
void append_le(std::string& out, T value) {
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.append(buf, sizeof(T));
}

bool looks_binary_stl(const std::string& bytes) {
  if (bytes.size() < 84) {
    return false;
  }
  const auto count = read_le<std::uint32_t>(bytes.data() + 80);
  return bytes.size() == 84 + 50ull * count;
}

Mesh parse_binary_stl(const std::string& bytes) {
  const auto count = read_le<std::uint32_t>(bytes.data() + 80);
  Mesh m;
  m.vertices.reserve(3ull * count);
  m.triangles.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    const char* rec = bytes.data() + 84 + 50ull * i;
    for (int k = 0; k < 3; ++k) {
      const char* v = rec + 12 + 12 * k;
      m.vertices.emplace_back(read_le<float>(v), read_le<float>(v + 4), read_le<float>(v + 8));
    }
    const auto base = static_cast<std::uint32_t>(3 * i);
    m.triangles.push_back({base, base + 1, base + 2});
  }
  return m;
}

Mesh parse_ascii_stl(const std::string& bytes) {
  std::istringstream in(bytes);
  std::string tok;
  in >> tok;
  if (lower(tok) != "solid") {
    throw ParseError("STL: missing 'solid' header");
  }
  std::getline(in, tok); // solid name
  Mesh m;
  bool closed = false;
  while (in >> tok) {
    tok = lower(tok);
    if (tok == "endsolid") {
      closed = true;
      break;
    }
    if (tok != "facet") {
      throw ParseError("STL: expected 'facet', got '" + tok + "'");
    }
    std::string word;
    double nx = 0, ny = 0, nz = 0;
    if (!(in >> word >> nx >> ny >> nz) || lower(word) != "normal") {
      throw ParseError("STL: malformed facet normal");
    }
    std::string outer, loop;
    if (!(in >> outer >> loop) || lower(outer) != "outer" || lower(loop) != "loop") {
      throw ParseError("STL: expected 'outer loop'");
    }
    const auto base = static_cast<std::uint32_t>(m.vertices.size());
    for (int k = 0; k < 3; ++k) {
      double x = 0, y = 0, z = 0;
      if (!(in >> word >> x >> y >> z) || lower(word) != "vertex") {
        throw ParseError("STL: malformed vertex");
      }
      m.vertices.emplace_back(x, y, z);
    }
    std::string endloop, endfacet;
    if (!(in >> endloop >> endfacet) || lower(endloop) != "endloop" || lower(endfacet) != "endfacet") {
      throw ParseError("STL: unterminated facet");
    }
    m.triangles.push_back({base, base + 1, base + 2});
  }
  if (!closed) {
    throw ParseError("STL: truncated file (no 'endsolid')");
  }
  return m;
}

Mesh parse_obj(const std::string& bytes) {
  std::istringstream in(bytes);
  std::string line;
  Mesh m;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag) || tag[0] == '#') {
      continue;
    }
    if (tag == "v") {
      double x = 0, y = 0, z = 0;
      if (!(ls >> x >> y >> z)) {
        throw ParseError("OBJ line " + std::to_string(line_no) + ": malformed vertex");
      }
      m.vertices.emplace_back(x, y, z);
    } else if (tag == "f") {
      std::vector<std::int64_t> idx;
      std::string ref;
      while (ls >> ref) {
        // "7", "7/2", "7//3", "7/2/3": only the position index matters.
        const auto slash = ref.find('/');
        const std::string head = ref.substr(0, slash);
        std::int64_t i = 0;
        try {
          i = std::stoll(head);
        } catch (const std::exception&) {
          throw ParseError("OBJ line " + std::to_string(line_no) + ": bad face index '" + ref + "'");
        }
        if (i < 0) {
          i += static_cast<std::int64_t>(m.vertices.size()) + 1;
        }
        if (i <= 0) {
          throw ParseError("OBJ line " + std::to_string(line_no) + ": face index out of range");
        }
        idx.push_back(i - 1);
      }
      if (idx.size() < 3) {
        throw ParseError("OBJ line " + std::to_string(line_no) + ": face with fewer than 3 vertices");
      }
      for (std::size_t k = 1; k + 1 < idx.size(); ++k) {
        m.triangles.push_back({static_cast<std::uint32_t>(idx[0]), static_cast<std::uint32_t>(idx[k]),
                               static_cast<std::uint32_t>(idx[k + 1])});
      }
    }
    // vt, vn, o, g, s, usemtl, mtllib: ignored
  }
  return m;
}

} // namespace

LoadedMesh load_mesh(const fs::path& path) {
  const std::string bytes = read_all(path);
  const std::string ext = lower(path.extension().string());
  Mesh m;
  if (ext == ".obj") {
    m = parse_obj(bytes);
  } else if (ext == ".stl") {
    if (looks_binary_stl(bytes)) {
      m = parse_binary_stl(bytes);
    } else if (bytes.rfind("solid", 0) == 0) {
      m = parse_ascii_stl(bytes);
    } else {
      throw ParseError("STL: not ASCII and binary size does not match facet count (truncated?)");
    }
    deduplicate_vertices(m);
  } else {
    throw ParseError("unrecognized mesh extension: " + path.string());
  }
  if (m.triangles.empty()) {
    throw ParseError("mesh has no triangles: " + path.string());
  }
  validate_indices(m);
  compute_normals(m);
  LoadedMesh out;
  out.non_manifold = !is_watertight(m);
  out.mesh = std::move(m);
  return out;
}

void write_file_atomically(const fs::path& path, const std::string& bytes) {
  if (path.has_parent_path()) {
    fs::create_directories(path.parent_path());
  }
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw std::runtime_error("cannot write " + tmp.string());
    }
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
      throw std::runtime_error("short write to " + tmp.string());
    }
  }
  fs::rename(tmp, path);
}

void save_stl(const Mesh& mesh, const fs::path& path, StlEncoding encoding) {
  Mesh copy = mesh;
  if (copy.normals.size() != copy.triangles.size()) {
    compute_normals(copy);
  }
  std::string out;
  if (encoding == StlEncoding::Binary) {
    out.assign(80, '\0');
    const char tag[] = "epiguide binary stl";
    std::memcpy(out.data(), tag, sizeof(tag) - 1);
    append_le<std::uint32_t>(out, static_cast<std::uint32_t>(copy.triangles.size()));
    for (std::size_t i = 0; i < copy.triangles.size(); ++i) {
      for (int k = 0; k < 3; ++k) {
        append_le<float>(out, static_cast<float>(copy.normals[i][k]));
      }
      for (int c = 0; c < 3; ++c) {
        const Vec3 v = copy.corner(i, c);
        for (int k = 0; k < 3; ++k) {
          append_le<float>(out, static_cast<float>(v[k]));
        }
      }
      append_le<std::uint16_t>(out, 0);
    }
  } else {
    std::ostringstream ss;
    ss << std::setprecision(std::numeric_limits<double>::max_digits10);
    ss << "solid epiguide\n";
    for (std::size_t i = 0; i < copy.triangles.size(); ++i) {
      const Vec3& n = copy.normals[i];
      ss << "  facet normal " << n.x() << ' ' << n.y() << ' ' << n.z() << "\n    outer loop\n";
      for (int c = 0; c < 3; ++c) {
        const Vec3 v = copy.corner(i, c);
        ss << "      vertex " << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
      }
      ss << "    endloop\n  endfacet\n";
    }
    ss << "endsolid epiguide\n";
    out = ss.str();
  }
  write_file_atomically(path, out);
}

void save_obj(const Mesh& mesh, const fs::path& path) {
  std::ostringstream ss;
  ss << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (const auto& v : mesh.vertices) {
    ss << "v " << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
  }
  for (const auto& t : mesh.triangles) {
    ss << "f " << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << '\n';
  }
  write_file_atomically(path, ss.str());
}

} // namespace epiguide
