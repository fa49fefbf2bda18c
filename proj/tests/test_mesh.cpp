#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include "mcflab/io.hpp"
#include "mcflab/shapes.hpp"

using namespace mcflab;

TEST_CASE("icosphere is a closed oriented manifold with the right area") {
  const Mesh m = make_icosphere(2.0, 3);
  REQUIRE(m.vertices.size() == 642);
  REQUIRE(m.triangles.size() == 1280);
  const MeshTopology topo = analyze_topology(m);
  CHECK(topo.manifold);
  CHECK(topo.closed);
  CHECK(topo.oriented);
  REQUIRE_NOTHROW(require_valid(m, {.require_closed = true}));

  // inscribed polyhedron: area slightly below 4 pi R^2, converging from below
  const double area = m.total_measure();
  CHECK(area < 4.0 * kPi * 4.0);
  CHECK(area == Catch::Approx(4.0 * kPi * 4.0).epsilon(5e-3));

  for (const Vec3& v : m.vertices) CHECK(v.norm() == Catch::Approx(2.0).margin(1e-12));
}

TEST_CASE("icosphere vertex set is centrally symmetric") {
  const Mesh m = make_icosphere(1.0, 2);
  for (const Vec3& v : m.vertices) {
    bool found = false;
    for (const Vec3& w : m.vertices)
      if ((v + w).norm() < 1e-12) {
        found = true;
        break;
      }
    CHECK(found);
  }
}

TEST_CASE("topology analysis names offending edges") {
  Mesh m = make_icosphere(1.0, 1);

  SECTION("extra face over an existing edge breaks manifoldness") {
    const Tri f = m.triangles.front();
    m.vertices.push_back(Vec3(2, 2, 2));
    m.triangles.push_back({f[0], f[1], (int)m.vertices.size() - 1});
    const MeshTopology topo = analyze_topology(m);
    CHECK_FALSE(topo.manifold);
    CHECK(topo.issue.find("edge (") != std::string::npos);
    CHECK(topo.issue.find("3 triangles") != std::string::npos);
    CHECK_THROWS_AS(require_valid(m), invariant_error);
  }

  SECTION("flipping one face breaks orientation") {
    std::swap(m.triangles[5][0], m.triangles[5][1]);
    const MeshTopology topo = analyze_topology(m);
    CHECK(topo.manifold);
    CHECK_FALSE(topo.oriented);
    CHECK(topo.issue.find("winding") != std::string::npos);
    CHECK_THROWS_AS(require_valid(m), invariant_error);
  }

  SECTION("removing one face opens the mesh") {
    m.triangles.pop_back();
    const MeshTopology topo = analyze_topology(m);
    CHECK(topo.manifold);
    CHECK(topo.oriented);
    CHECK_FALSE(topo.closed);
    CHECK(topo.boundary_edges.size() == 3);
    CHECK_THROWS_AS(require_valid(m, {.require_closed = true}), invariant_error);
    REQUIRE_NOTHROW(require_valid(m));  // open is fine unless closedness is demanded
  }
}

TEST_CASE("hex disk is an open oriented patch") {
  const Mesh m = make_hex_disk(1.0, 6);
  REQUIRE(m.triangles.size() == 6 * 36);
  const MeshTopology topo = analyze_topology(m);
  CHECK(topo.manifold);
  CHECK(topo.oriented);
  CHECK_FALSE(topo.closed);
  CHECK(topo.boundary_edges.size() == 36);
  CHECK(m.total_measure() == Catch::Approx(kPi).epsilon(0.05));
}

TEST_CASE("circle fixture is a closed curve") {
  const Mesh c = make_circle(std::sqrt(2.0), 64);
  REQUIRE(c.is_curve());
  REQUIRE(c.dim() == 1);
  const MeshTopology topo = analyze_topology(c);
  CHECK(topo.manifold);
  CHECK(topo.closed);
  CHECK(c.total_measure() == Catch::Approx(2.0 * kPi * std::sqrt(2.0)).epsilon(1e-3));
  REQUIRE_NOTHROW(require_valid(c, {.require_closed = true}));

  Mesh open = c;
  open.segments.pop_back();
  CHECK_THROWS_WITH(require_valid(open, {.require_closed = true}),
                    Catch::Matchers::ContainsSubstring("endpoint"));
}

TEST_CASE("degenerate and malformed meshes are rejected") {
  Mesh m = make_icosphere(1.0, 0);

  SECTION("zero-area face") {
    m.triangles.push_back(m.triangles.front());
    const Tri f = m.triangles.back();
    m.vertices.push_back(0.5 * (m.vertices[f[0]] + m.vertices[f[1]]));
    m.triangles.back() = {f[0], f[1], (int)m.vertices.size() - 1};
    CHECK_THROWS_WITH(require_valid(m), Catch::Matchers::ContainsSubstring("degenerate"));
  }

  SECTION("out-of-range index") {
    m.triangles.push_back({0, 1, 999});
    CHECK_THROWS_WITH(require_valid(m), Catch::Matchers::ContainsSubstring("999"));
  }

  SECTION("non-finite vertex") {
    m.vertices[3][1] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_WITH(require_valid(m), Catch::Matchers::ContainsSubstring("vertex 3"));
  }

  SECTION("repeated vertex in a face") {
    m.triangles.push_back({1, 1, 2});
    CHECK_THROWS_WITH(require_valid(m), Catch::Matchers::ContainsSubstring("repeats"));
  }
}

TEST_CASE("components split and merge") {
  const Mesh a = make_icosphere(1.0, 1);
  const Mesh b = make_icosphere(2.0, 1, Vec3(5, 0, 0));
  const Mesh merged = merge_meshes({a, b});
  int count = 0;
  connected_components(merged, &count);
  REQUIRE(count == 2);

  std::vector<std::vector<int>> maps;
  const std::vector<Mesh> parts = split_components(merged, &maps);
  REQUIRE(parts.size() == 2);
  CHECK(identical_meshes(parts[0], a));
  CHECK(identical_meshes(parts[1], b));
  CHECK(maps[1][0] == (int)a.vertices.size());
}

TEST_CASE("obj round trip is bitwise exact") {
  const Mesh m = make_icosphere(1.2345678901234567, 2);
  std::ostringstream out;
  write_obj(out, m);
  std::istringstream in(out.str());
  const Mesh back = read_obj(in);
  REQUIRE(identical_meshes(m, back));
}

TEST_CASE("obj parser reports offending line numbers") {
  auto parse = [](const std::string& text) {
    std::istringstream in(text);
    return read_obj(in, "test.obj");
  };

  SECTION("quad face") {
    try {
      parse("v 0 0 0\nv 1 0 0\nv 0 1 0\nv 1 1 0\nf 1 2 3 4\n");
      FAIL("expected parse_error");
    } catch (const parse_error& e) {
      CHECK(e.line() == 5);
      CHECK(std::string(e.what()).find("triangles") != std::string::npos);
    }
  }

  SECTION("negative index") {
    CHECK_THROWS_AS(parse("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 -1\n"), parse_error);
  }

  SECTION("index past the vertex count") {
    try {
      parse("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 4\n");
      FAIL("expected parse_error");
    } catch (const parse_error& e) {
      CHECK(e.line() == 4);
    }
  }

  SECTION("unsupported element") {
    CHECK_THROWS_WITH(parse("v 0 0 0\ncurv 1\n"),
                      Catch::Matchers::ContainsSubstring("unsupported"));
  }

  SECTION("comments, blank lines, and f v/vt/vn forms are accepted") {
    const Mesh m = parse("# header\n\nv 0 0 0\nv 1 0 0\nv 0 1 0\n\nf 1/1/1 2/2/2 3/3/3\n");
    CHECK(m.triangles.size() == 1);
  }

  SECTION("polylines become segments") {
    const Mesh m = parse("v 0 0 0\nv 1 0 0\nv 0 1 0\nl 1 2 3\nl 3 1\n");
    REQUIRE(m.is_curve());
    CHECK(m.segments.size() == 3);
  }
}

TEST_CASE("manifest loads weighted components") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "mcflab_manifest_test";
  fs::create_directories(dir);
  write_obj((dir / "sphere.obj").string(), make_icosphere(2.0, 1));
  write_obj((dir / "other.obj").string(), make_icosphere(1.0, 1, Vec3(9, 0, 0)));
  write_json((dir / "measure.json").string(),
             json{{"components",
                   {{{"mesh", "sphere.obj"}, {"multiplicity", 2}}, {{"mesh", "other.obj"}}}}});

  const WeightedMeasure mu = read_manifest((dir / "measure.json").string());
  REQUIRE(mu.components.size() == 2);
  CHECK(mu.components[0].multiplicity == 2);
  CHECK(mu.components[1].multiplicity == 1);
  REQUIRE_NOTHROW(mu.validate());

  write_json((dir / "bad.json").string(),
             json{{"components", {{{"mesh", "sphere.obj"}, {"multiplicity", 0}}}}});
  CHECK_THROWS_AS(read_manifest((dir / "bad.json").string()), parse_error);

  std::error_code ec;
  fs::remove_all(dir, ec);
}

TEST_CASE("measure canonicalization merges identical components") {
  const Mesh s = make_icosphere(2.0, 1);
  WeightedMeasure mu;
  mu.components.push_back({s, 1});
  mu.components.push_back({s, 1});
  mu.components.push_back({make_icosphere(1.0, 1, Vec3(6, 0, 0)), 1});
  const WeightedMeasure canon = mu.canonicalized();
  REQUIRE(canon.components.size() == 2);
  CHECK(canon.components[0].multiplicity == 2);
  CHECK(canon.total_weight() == Catch::Approx(mu.total_weight()));
}

TEST_CASE("neck fixture is a closed oriented manifold") {
  const Mesh m = make_neck_fixture(2.0, 2.5, 0.15);
  const MeshTopology topo = analyze_topology(m);
  CHECK(topo.manifold);
  CHECK(topo.closed);
  CHECK(topo.oriented);
  REQUIRE_NOTHROW(require_valid(m, {.require_closed = true}));
  int count = 0;
  connected_components(m, &count);
  CHECK(count == 1);
}
