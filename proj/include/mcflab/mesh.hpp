#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <numeric>
#include <utility>

#include "mcflab/common.hpp"

namespace mcflab {

// Triangle mesh in R^3, or a polygonal curve when `segments` is used instead
// of `triangles`.  Vertices are shared; orientation is per-face winding.
struct Mesh {
  std::vector<Vec3> vertices;
  std::vector<Tri> triangles;
  std::vector<Seg> segments;

  bool is_curve() const { return triangles.empty() && !segments.empty(); }
  // Intrinsic dimension n of the support (2 for surfaces, 1 for curves).
  int dim() const { return is_curve() ? 1 : 2; }

  Vec3 triangle_normal(int t) const {
    const Tri& f = triangles[t];
    return (vertices[f[1]] - vertices[f[0]]).cross(vertices[f[2]] - vertices[f[0]]);
  }
  double triangle_area(int t) const { return 0.5 * triangle_normal(t).norm(); }
  Vec3 triangle_centroid(int t) const {
    const Tri& f = triangles[t];
    return (vertices[f[0]] + vertices[f[1]] + vertices[f[2]]) / 3.0;
  }
  double segment_length(int s) const {
    return (vertices[segments[s][1]] - vertices[segments[s][0]]).norm();
  }

  // Total n-dimensional measure: area for surfaces, length for curves.
  double total_measure() const {
    double m = 0.0;
    if (is_curve()) {
      for (int s = 0; s < (int)segments.size(); ++s) m += segment_length(s);
    } else {
      for (int t = 0; t < (int)triangles.size(); ++t) m += triangle_area(t);
    }
    return m;
  }

  double min_edge_length() const {
    double m = kInf;
    if (is_curve()) {
      for (int s = 0; s < (int)segments.size(); ++s) m = std::min(m, segment_length(s));
      return m;
    }
    for (const Tri& f : triangles)
      for (int k = 0; k < 3; ++k)
        m = std::min(m, (vertices[f[k]] - vertices[f[(k + 1) % 3]]).norm());
    return m;
  }

  double mean_edge_length() const {
    double sum = 0.0;
    long count = 0;
    if (is_curve()) {
      for (int s = 0; s < (int)segments.size(); ++s) sum += segment_length(s);
      count = (long)segments.size();
    } else {
      for (const Tri& f : triangles)
        for (int k = 0; k < 3; ++k) {
          sum += (vertices[f[k]] - vertices[f[(k + 1) % 3]]).norm();
          ++count;
        }
    }
    return count ? sum / (double)count : 0.0;
  }

  Box3 bounding_box() const {
    Box3 b;
    for (const Vec3& v : vertices) b.expand(v);
    return b;
  }
  double diameter() const { return bounding_box().diagonal(); }
};

struct MeshTopology {
  bool manifold = true;   // every edge bounds at most two faces
  bool closed = true;     // no boundary edges
  bool oriented = true;   // adjacent faces wind consistently
  std::vector<std::pair<int, int>> boundary_edges;
  std::string issue;      // first violation, with the offending edge named
};

namespace detail {
inline std::pair<int, int> undirected(int a, int b) {
  return a < b ? std::make_pair(a, b) : std::make_pair(b, a);
}
}  // namespace detail

// Edge-based topology analysis.  For curves: manifold means every vertex has
// degree two at most, closed means every vertex has degree exactly two.
inline MeshTopology analyze_topology(const Mesh& mesh) {
  MeshTopology topo;
  auto flag = [&](bool& field, const std::string& msg) {
    if (field) {
      field = false;
      if (topo.issue.empty()) topo.issue = msg;
    }
  };

  if (mesh.is_curve()) {
    std::vector<int> degree(mesh.vertices.size(), 0);
    for (const Seg& s : mesh.segments) {
      ++degree[s[0]];
      ++degree[s[1]];
    }
    for (int v = 0; v < (int)degree.size(); ++v) {
      if (degree[v] > 2)
        flag(topo.manifold, cat("vertex ", v, " has segment degree ", degree[v]));
      else if (degree[v] == 1)
        flag(topo.closed, cat("vertex ", v, " is a curve endpoint"));
    }
    return topo;
  }

  // edge -> (count, first directed orientation seen twice?)
  std::map<std::pair<int, int>, std::pair<int, int>> edges;  // count, directed count a<b
  for (const Tri& f : mesh.triangles) {
    for (int k = 0; k < 3; ++k) {
      const int a = f[k], b = f[(k + 1) % 3];
      auto& e = edges[detail::undirected(a, b)];
      ++e.first;
      if (a < b) ++e.second;
    }
  }
  for (const auto& [e, c] : edges) {
    if (c.first > 2)
      flag(topo.manifold, cat("edge (", e.first, ",", e.second, ") bounds ", c.first, " triangles"));
    else if (c.first == 1)
      topo.boundary_edges.push_back(e);
    else if (c.second != 1)
      // two faces traverse the edge in the same direction
      flag(topo.oriented, cat("edge (", e.first, ",", e.second, ") has inconsistent winding"));
  }
  if (!topo.boundary_edges.empty()) {
    const auto& e = topo.boundary_edges.front();
    flag(topo.closed, cat("edge (", e.first, ",", e.second, ") bounds a single triangle"));
    topo.closed = false;
  }
  return topo;
}

struct ValidateOptions {
  bool require_closed = false;
  bool require_oriented = true;
  double degenerate_area_rel = 1e-12;  // floor relative to the mean face area
};

// Throws invariant_error on non-finite vertices, out-of-range indices,
// non-manifold or inconsistently wound edges, and degenerate faces.
inline void require_valid(const Mesh& mesh, const ValidateOptions& opt = {}) {
  const int nv = (int)mesh.vertices.size();
  if (nv == 0) throw invariant_error("mesh has no vertices");
  if (mesh.triangles.empty() && mesh.segments.empty())
    throw invariant_error("mesh has no faces or segments");
  if (!mesh.triangles.empty() && !mesh.segments.empty())
    throw invariant_error("mesh mixes triangles and segments");

  for (int v = 0; v < nv; ++v)
    if (!finite(mesh.vertices[v]))
      throw invariant_error(cat("vertex ", v, " has a non-finite coordinate"));

  auto check_index = [&](int i, const char* what, int which) {
    if (i < 0 || i >= nv)
      throw invariant_error(cat(what, " ", which, " references vertex ", i,
                                " outside [0,", nv, ")"));
  };
  for (int t = 0; t < (int)mesh.triangles.size(); ++t) {
    const Tri& f = mesh.triangles[t];
    for (int k = 0; k < 3; ++k) check_index(f[k], "triangle", t);
    if (f[0] == f[1] || f[1] == f[2] || f[0] == f[2])
      throw invariant_error(cat("triangle ", t, " repeats a vertex"));
  }
  for (int s = 0; s < (int)mesh.segments.size(); ++s) {
    const Seg& g = mesh.segments[s];
    for (int k = 0; k < 2; ++k) check_index(g[k], "segment", s);
    if (g[0] == g[1]) throw invariant_error(cat("segment ", s, " repeats a vertex"));
  }

  if (!mesh.is_curve()) {
    double mean_area = 0.0;
    for (int t = 0; t < (int)mesh.triangles.size(); ++t) mean_area += mesh.triangle_area(t);
    mean_area /= (double)mesh.triangles.size();
    for (int t = 0; t < (int)mesh.triangles.size(); ++t)
      if (mesh.triangle_area(t) < opt.degenerate_area_rel * mean_area)
        throw invariant_error(cat("triangle ", t, " is degenerate (area ",
                                  mesh.triangle_area(t), ")"));
  } else {
    for (int s = 0; s < (int)mesh.segments.size(); ++s)
      if (mesh.segment_length(s) <= 0.0)
        throw invariant_error(cat("segment ", s, " has zero length"));
  }

  const MeshTopology topo = analyze_topology(mesh);
  if (!topo.manifold) throw invariant_error("non-manifold mesh: " + topo.issue);
  if (opt.require_oriented && !topo.oriented)
    throw invariant_error("inconsistent orientation: " + topo.issue);
  if (opt.require_closed && !topo.closed)
    throw invariant_error("mesh is not closed: " + topo.issue);
}

// Per-vertex connected component labels (0-based, contiguous), via the face
// and segment graphs.  Isolated vertices get their own components.
inline std::vector<int> connected_components(const Mesh& mesh, int* count = nullptr) {
  const int nv = (int)mesh.vertices.size();
  std::vector<int> parent(nv);
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  };
  auto unite = [&](int a, int b) { parent[find(a)] = find(b); };
  for (const Tri& f : mesh.triangles) {
    unite(f[0], f[1]);
    unite(f[1], f[2]);
  }
  for (const Seg& s : mesh.segments) unite(s[0], s[1]);

  std::vector<int> label(nv, -1);
  int next = 0;
  for (int v = 0; v < nv; ++v) {
    const int root = find(v);
    if (label[root] < 0) label[root] = next++;
    label[v] = label[root];
  }
  if (count) *count = next;
  return label;
}

// Splits a mesh into per-component meshes; vertex order within each component
// follows the original ordering.  `vertex_maps[k][i]` is the original index of
// vertex i of component k.
inline std::vector<Mesh> split_components(const Mesh& mesh,
                                          std::vector<std::vector<int>>* vertex_maps = nullptr) {
  int count = 0;
  const std::vector<int> label = connected_components(mesh, &count);
  std::vector<Mesh> parts(count);
  std::vector<std::vector<int>> maps(count);
  std::vector<int> local(mesh.vertices.size(), -1);
  for (int v = 0; v < (int)mesh.vertices.size(); ++v) {
    const int c = label[v];
    local[v] = (int)parts[c].vertices.size();
    parts[c].vertices.push_back(mesh.vertices[v]);
    maps[c].push_back(v);
  }
  for (const Tri& f : mesh.triangles)
    parts[label[f[0]]].triangles.push_back({local[f[0]], local[f[1]], local[f[2]]});
  for (const Seg& s : mesh.segments)
    parts[label[s[0]]].segments.push_back({local[s[0]], local[s[1]]});
  if (vertex_maps) *vertex_maps = std::move(maps);
  return parts;
}

// Concatenates meshes into one (indices offset); inputs must agree in kind.
inline Mesh merge_meshes(const std::vector<Mesh>& parts) {
  Mesh out;
  for (const Mesh& m : parts) {
    const int off = (int)out.vertices.size();
    out.vertices.insert(out.vertices.end(), m.vertices.begin(), m.vertices.end());
    for (const Tri& f : m.triangles)
      out.triangles.push_back({f[0] + off, f[1] + off, f[2] + off});
    for (const Seg& s : m.segments) out.segments.push_back({s[0] + off, s[1] + off});
  }
  return out;
}

// Exact bitwise equality of geometry and connectivity.
inline bool identical_meshes(const Mesh& a, const Mesh& b) {
  if (a.vertices.size() != b.vertices.size()) return false;
  if (a.triangles != b.triangles || a.segments != b.segments) return false;
  for (size_t i = 0; i < a.vertices.size(); ++i)
    if (a.vertices[i][0] != b.vertices[i][0] || a.vertices[i][1] != b.vertices[i][1] ||
        a.vertices[i][2] != b.vertices[i][2])
      return false;
  return true;
}

}  // namespace mcflab
