#pragma once

#include "mcflab/closest_point.hpp"
#include "mcflab/differential.hpp"
#include "mcflab/normal_graph.hpp"

namespace mcflab {

struct ConcentrationPoint {
  Vec3 point = Vec3::Zero();
  double radius = 0.0;
  double mass = 0.0;
};

// sigma = |A|^2 d(area) as a per-vertex density with ambient ball queries.
struct CurvatureMeasure {
  std::vector<Vec3> position;
  std::vector<double> density;  // |A|^2 * vertex weight
  double total = 0.0;

  double ball_mass(const Vec3& p, double r) const {
    const double r2 = r * r;
    double m = 0.0;
    for (size_t i = 0; i < position.size(); ++i)
      if ((position[i] - p).squaredNorm() <= r2) m += density[i];
    return m;
  }
};

inline CurvatureMeasure curvature_measure(const Mesh& mesh,
                                          const DifferentialQuantities* dq_in = nullptr) {
  DifferentialQuantities local;
  const DifferentialQuantities* dq = dq_in;
  if (!dq) {
    local = differential_quantities(mesh);
    dq = &local;
  }
  CurvatureMeasure cm;
  cm.position = mesh.vertices;
  cm.density.resize(mesh.vertices.size());
  for (size_t i = 0; i < mesh.vertices.size(); ++i) {
    cm.density[i] = dq->second_fundamental_sq[i] * dq->vertex_weight[i];
    cm.total += cm.density[i];
  }
  return cm;
}

namespace detail {

inline bool lex_less(const Vec3& a, const Vec3& b) {
  return std::lexicographical_compare(a.data(), a.data() + 3, b.data(), b.data() + 3);
}

}  // namespace detail

// Greedy curvature-concentration detector: vertex-centered ambient balls of
// radius r, accepted in decreasing sigma-mass order while above eps0^2 and
// disjoint from the balls already taken.  Deterministic, ties by
// lexicographic center.
inline std::vector<ConcentrationPoint> curvature_concentration(
    const Mesh& mesh, double eps0, double r, const DifferentialQuantities* dq = nullptr) {
  const double mean_edge = mesh.mean_edge_length();
  if (!(r > 2.0 * mean_edge))
    throw guard_error(cat("concentration probe radius ", r,
                          " must exceed twice the mean edge length ", mean_edge));
  const CurvatureMeasure cm = curvature_measure(mesh, dq);

  std::vector<std::pair<double, int>> order(mesh.vertices.size());
  for (size_t i = 0; i < mesh.vertices.size(); ++i)
    order[i] = {cm.ball_mass(mesh.vertices[i], r), (int)i};
  std::sort(order.begin(), order.end(), [&](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return detail::lex_less(mesh.vertices[a.second], mesh.vertices[b.second]);
  });

  const double threshold = eps0 * eps0;
  std::vector<ConcentrationPoint> found;
  for (const auto& [mass, idx] : order) {
    if (!(mass > threshold)) break;
    const Vec3& p = mesh.vertices[idx];
    bool clear = true;
    for (const ConcentrationPoint& q : found)
      if ((p - q.point).norm() < 2.0 * r) {
        clear = false;
        break;
      }
    if (clear) found.push_back({p, r, mass});
  }
  return found;
}

struct Layer {
  Mesh mesh;
  std::vector<int> source_vertices;  // layer vertex -> index in the source mesh
  double mean_height = 0.0;
};

// Height-ordered sheet decomposition of a near-singular slice over a
// reference shrinker, away from the excluded concentration balls.
struct LayerReport {
  int multiplicity = 0;
  std::vector<Layer> layers;  // ordered by increasing mean signed height
  std::vector<ConcentrationPoint> exclusions;
  double excluded_area_fraction = 0.0;
  int ambiguous_vertices = 0;
  Mesh source;
  Mesh reference;
  std::vector<HeightSample> samples;  // per source vertex
  std::vector<int> assignment;        // source vertex -> layer index, -1 dropped

  const Layer& top() const {
    if (layers.empty()) throw invariant_error("layer report has no layers");
    return layers.back();
  }
};

inline LayerReport sheet_decomposition(const Mesh& m, const Mesh& reference,
                                       const std::vector<ConcentrationPoint>& exclusions = {},
                                       double collar = 0.0) {
  if (m.is_curve() || reference.is_curve())
    throw invariant_error("sheet decomposition is wired for surface meshes");
  const TriGrid grid(reference);
  if (!(collar > 0.0)) collar = 0.8 * reach_estimate(reference);

  LayerReport rep;
  rep.exclusions = exclusions;
  rep.source = m;
  rep.reference = reference;

  const int nv = (int)m.vertices.size();
  rep.samples.resize(nv);
  rep.assignment.assign(nv, -1);
  std::vector<char> retained(nv, 1);
  for (int v = 0; v < nv; ++v) {
    for (const ConcentrationPoint& e : exclusions)
      if ((m.vertices[v] - e.point).norm() <= e.radius) {
        retained[v] = 0;
        break;
      }
    rep.samples[v] = signed_height(m.vertices[v], grid);
    if (retained[v] && rep.samples[v].distance > collar) {
      retained[v] = 0;
      ++rep.ambiguous_vertices;
    }
  }
  if (rep.ambiguous_vertices > 0.05 * nv)
    throw invariant_error(cat("closest-point projection ambiguous for ", rep.ambiguous_vertices,
                              " of ", nv, " vertices (beyond the collar ", collar,
                              "); enlarge the collar or flow closer to the blow-up"));

  // connected components of the retained vertex set over the edge graph
  std::vector<int> parent(nv);
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  auto unite = [&](int a, int b) {
    if (retained[a] && retained[b]) parent[find(a)] = find(b);
  };
  for (const Tri& f : m.triangles)
    for (int k = 0; k < 3; ++k) unite(f[k], f[(k + 1) % 3]);

  std::map<int, std::vector<int>> groups;
  for (int v = 0; v < nv; ++v)
    if (retained[v]) groups[find(v)].push_back(v);

  std::vector<std::pair<double, std::vector<int>>> ordered;
  for (auto& [root, members] : groups) {
    double mean = 0.0;
    for (int v : members) mean += rep.samples[v].height;
    ordered.push_back({mean / (double)members.size(), std::move(members)});
  }
  std::sort(ordered.begin(), ordered.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  for (size_t k = 1; k < ordered.size(); ++k)
    if (!(ordered[k].first > ordered[k - 1].first))
      throw invariant_error(cat("layers ", k - 1, " and ", k,
                                " are not separated by mean height"));

  double kept_area = 0.0;
  const double total_area = m.total_measure();
  for (size_t k = 0; k < ordered.size(); ++k) {
    Layer layer;
    layer.mean_height = ordered[k].first;
    layer.source_vertices = ordered[k].second;
    std::vector<int> local(nv, -1);
    for (size_t i = 0; i < layer.source_vertices.size(); ++i) {
      local[layer.source_vertices[i]] = (int)i;
      layer.mesh.vertices.push_back(m.vertices[layer.source_vertices[i]]);
      rep.assignment[layer.source_vertices[i]] = (int)k;
    }
    for (int t = 0; t < (int)m.triangles.size(); ++t) {
      const Tri& f = m.triangles[t];
      if (local[f[0]] >= 0 && local[f[1]] >= 0 && local[f[2]] >= 0) {
        layer.mesh.triangles.push_back({local[f[0]], local[f[1]], local[f[2]]});
        kept_area += m.triangle_area(t);
      }
    }
    rep.layers.push_back(std::move(layer));
  }
  rep.multiplicity = (int)rep.layers.size();
  rep.excluded_area_fraction = std::max(0.0, 1.0 - kept_area / std::max(total_area, 1e-300));
  return rep;
}

inline bool tubular_containment(const Mesh& m, const Mesh& reference, double delta) {
  const double reach = reach_estimate(reference);
  if (!(delta > 0.0 && delta < reach))
    throw guard_error(cat("tube half-width ", delta, " must lie in (0, reach estimate ", reach,
                          ")"));
  const TriGrid grid(reference);
  for (const Vec3& v : m.vertices)
    if (!(grid.nearest(v).distance < delta)) return false;
  return true;
}

// Concentration detection followed by sheet decomposition; the layer count is
// the multiplicity estimate of the slice over the reference.
inline int multiplicity_estimate(const Mesh& m, const Mesh& reference, double eps0, double r) {
  const std::vector<ConcentrationPoint> exclusions = curvature_concentration(m, eps0, r);
  return sheet_decomposition(m, reference, exclusions).multiplicity;
}

}  // namespace mcflab
