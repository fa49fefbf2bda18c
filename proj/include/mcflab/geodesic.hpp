#pragma once

#include <queue>

#include "mcflab/mesh.hpp"

namespace mcflab {

// Intrinsic distances from a source vertex to all vertices: Dijkstra on the
// edge graph augmented with Steiner points (two per edge) and all straight
// in-triangle connections between the nine nodes of each face.  Accuracy on
// smooth meshes is a low single-digit percentage.
class GeodesicField {
 public:
  explicit GeodesicField(const Mesh& mesh, int steiner_per_edge = 2) : mesh_(&mesh) {
    if (mesh.is_curve()) {
      build_curve_graph(mesh);
      return;
    }
    build_surface_graph(mesh, steiner_per_edge);
  }

  // Distances at the original vertices.  Throws when some vertex is
  // unreachable (disconnected input).
  std::vector<double> distances_from(int source_vertex) const {
    if (source_vertex < 0 || source_vertex >= (int)mesh_->vertices.size())
      throw invariant_error(cat("geodesic source vertex ", source_vertex, " out of range"));
    std::vector<double> dist(nodes_.size(), kInf);
    using Item = std::pair<double, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<Item>> heap;
    dist[source_vertex] = 0.0;
    heap.push({0.0, source_vertex});
    while (!heap.empty()) {
      const auto [d, u] = heap.top();
      heap.pop();
      if (d > dist[u]) continue;
      for (const auto& [v, w] : adjacency_[u]) {
        const double nd = d + w;
        if (nd < dist[v]) {
          dist[v] = nd;
          heap.push({nd, v});
        }
      }
    }
    std::vector<double> out(mesh_->vertices.size());
    int unreachable = 0;
    for (size_t v = 0; v < out.size(); ++v) {
      out[v] = dist[v];
      if (!std::isfinite(out[v])) ++unreachable;
    }
    if (unreachable > 0)
      throw invariant_error(cat("geodesic field: ", unreachable,
                                " vertices unreachable from vertex ", source_vertex,
                                " (disconnected mesh)"));
    return out;
  }

 private:
  void add_edge(int a, int b, double w) {
    adjacency_[a].push_back({b, w});
    adjacency_[b].push_back({a, w});
  }

  void build_curve_graph(const Mesh& mesh) {
    nodes_ = mesh.vertices;
    adjacency_.resize(nodes_.size());
    for (const Seg& s : mesh.segments)
      add_edge(s[0], s[1], (mesh.vertices[s[1]] - mesh.vertices[s[0]]).norm());
  }

  void build_surface_graph(const Mesh& mesh, int steiner) {
    nodes_ = mesh.vertices;
    std::map<std::pair<int, int>, std::vector<int>> edge_nodes;
    for (const Tri& f : mesh.triangles)
      for (int k = 0; k < 3; ++k) {
        const int a = f[k], b = f[(k + 1) % 3];
        const auto key = detail::undirected(a, b);
        if (edge_nodes.count(key)) continue;
        std::vector<int>& ids = edge_nodes[key];
        for (int s = 1; s <= steiner; ++s) {
          const double w = (double)s / (double)(steiner + 1);
          ids.push_back((int)nodes_.size());
          nodes_.push_back((1.0 - w) * mesh.vertices[key.first] + w * mesh.vertices[key.second]);
        }
      }
    adjacency_.resize(nodes_.size());
    std::vector<int> face_nodes;
    for (const Tri& f : mesh.triangles) {
      face_nodes.clear();
      for (int k = 0; k < 3; ++k) face_nodes.push_back(f[k]);
      for (int k = 0; k < 3; ++k) {
        const auto& ids = edge_nodes[detail::undirected(f[k], f[(k + 1) % 3])];
        face_nodes.insert(face_nodes.end(), ids.begin(), ids.end());
      }
      for (size_t i = 0; i < face_nodes.size(); ++i)
        for (size_t j = i + 1; j < face_nodes.size(); ++j)
          add_edge(face_nodes[i], face_nodes[j],
                   (nodes_[face_nodes[i]] - nodes_[face_nodes[j]]).norm());
    }
  }

  const Mesh* mesh_;
  std::vector<Vec3> nodes_;
  std::vector<std::vector<std::pair<int, double>>> adjacency_;
};

inline std::vector<double> geodesic_distances(const Mesh& mesh, int source_vertex,
                                              int steiner_per_edge = 2) {
  return GeodesicField(mesh, steiner_per_edge).distances_from(source_vertex);
}

}  // namespace mcflab
