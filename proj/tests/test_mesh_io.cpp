#include "test_util.hpp"

#include "epiguide/error.hpp"
#include "epiguide/mesh.hpp"
#include "epiguide/mesh_io.hpp"

#include <doctest.h>

using namespace epiguide;

TEST_SUITE("mesh_io") {

TEST_CASE("binary STL round trip keeps topology and float positions") {
  TempDir dir;
  const Mesh m = make_icosphere(12.5, Vec3(1, 2, 3), 2);
  save_stl(m, dir / "s.stl", StlEncoding::Binary);
  const auto loaded = load_mesh(dir / "s.stl");
  CHECK_FALSE(loaded.non_manifold);
  CHECK(loaded.mesh.triangle_count() == m.triangle_count());
  CHECK(loaded.mesh.vertices.size() == m.vertices.size());
  for (std::size_t i = 0; i < m.triangle_count(); ++i) {
    for (int k = 0; k < 3; ++k) {
      const Vec3 a = m.corner(i, k);
      const Vec3 b = loaded.mesh.corner(i, k);
      CHECK((a - b).norm() < 1e-5);
    }
  }
}

TEST_CASE("ASCII STL and OBJ round trips are exact") {
  TempDir dir;
  const Mesh m = make_icosphere(7.25, Vec3(-1, 0, 4), 1);
  save_stl(m, dir / "a.stl", StlEncoding::Ascii);
  save_obj(m, dir / "a.obj");
  for (const auto* name : {"a.stl", "a.obj"}) {
    const auto loaded = load_mesh(dir / name);
    REQUIRE(loaded.mesh.triangle_count() == m.triangle_count());
    for (std::size_t i = 0; i < m.triangle_count(); ++i) {
      for (int k = 0; k < 3; ++k) {
        CHECK(loaded.mesh.corner(i, k) == m.corner(i, k));
      }
    }
    CHECK(is_watertight(loaded.mesh));
  }
}

TEST_CASE("truncated binary STL is a parse error") {
  TempDir dir;
  save_stl(make_icosphere(1.0, Vec3::Zero(), 1), dir / "t.stl", StlEncoding::Binary);
  std::string bytes = read_text(dir / "t.stl");
  bytes.resize(bytes.size() - 30);
  write_text(dir / "t.stl", bytes);
  CHECK_THROWS_AS((void)load_mesh(dir / "t.stl"), ParseError);
}

TEST_CASE("malformed ASCII STL and OBJ are parse errors") {
  TempDir dir;
  write_text(dir / "bad.stl", "solid x\n  facet normal 0 0 1\n    outer loop\n      vertex 0 0\n");
  CHECK_THROWS_AS((void)load_mesh(dir / "bad.stl"), ParseError);
  write_text(dir / "open.stl", "solid x\n  facet normal 0 0 1\n    outer loop\n      vertex 0 0 0\n"
                               "      vertex 1 0 0\n      vertex 0 1 0\n    endloop\n  endfacet\n");
  CHECK_THROWS_AS((void)load_mesh(dir / "open.stl"), ParseError);
  write_text(dir / "bad.obj", "v 0 0 0\nv 1 0 0\nf 1 2 9\n");
  CHECK_THROWS_AS((void)load_mesh(dir / "bad.obj"), ParseError);
  write_text(dir / "word.obj", "v 0 zero 0\n");
  CHECK_THROWS_AS((void)load_mesh(dir / "word.obj"), ParseError);
  write_text(dir / "empty.obj", "# nothing\n");
  CHECK_THROWS_AS((void)load_mesh(dir / "empty.obj"), ParseError);
  write_text(dir / "x.ply", "ply\n");
  CHECK_THROWS_AS((void)load_mesh(dir / "x.ply"), ParseError);
  CHECK_THROWS_AS((void)load_mesh(dir / "missing.stl"), ParseError);
}

TEST_CASE("OBJ polygons are fanned and relative indices resolve") {
  TempDir dir;
  write_text(dir / "quad.obj", "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nvt 0 0\nf 1/1 2/1 3/1 4/1\nf -4 -2 -1\n");
  const auto loaded = load_mesh(dir / "quad.obj");
  CHECK(loaded.mesh.triangle_count() == 3);
  CHECK(loaded.non_manifold);
}

TEST_CASE("non-manifold meshes load with a flag") {
  TempDir dir;
  Mesh m = make_icosphere(3.0, Vec3::Zero(), 1);
  m.triangles.pop_back();
  save_obj(m, dir / "hole.obj");
  const auto loaded = load_mesh(dir / "hole.obj");
  CHECK(loaded.non_manifold);
}

TEST_CASE("atomic write leaves no temp file") {
  TempDir dir;
  write_file_atomically(dir / "sub" / "f.txt", "hello");
  CHECK(read_text(dir / "sub" / "f.txt") == "hello");
  CHECK_FALSE(std::filesystem::exists(dir / "sub" / "f.txt.tmp"));
}

} // TEST_SUITE
