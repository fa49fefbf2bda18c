#pragma once

#include <set>

#include "mcflab/closest_point.hpp"
#include "mcflab/differential.hpp"

namespace mcflab {

// Per-vertex scalar field on a surface, used as a normal perturbation
// direction.  `support` marks vertices where the field is allowed to be
// nonzero (bookkeeping for localized fields).
struct PerturbationField {
  std::vector<double> values;
  std::vector<bool> support;

  static PerturbationField constant(const Mesh& mesh, double value = 1.0) {
    PerturbationField f;
    f.values.assign(mesh.vertices.size(), value);
    f.support.assign(mesh.vertices.size(), true);
    return f;
  }

  double sup_norm() const {
    double s = 0.0;
    for (double v : values) s = std::max(s, std::abs(v));
    return s;
  }

  void validate(const Mesh& mesh) const {
    if (values.size() != mesh.vertices.size())
      throw invariant_error(cat("field has ", values.size(), " values for ",
                                mesh.vertices.size(), " vertices"));
    for (size_t i = 0; i < values.size(); ++i) {
      if (!std::isfinite(values[i]))
        throw invariant_error(cat("field value at vertex ", i, " is not finite"));
      if (!support.empty() && !support[i] && values[i] != 0.0)
        throw invariant_error(cat("field is nonzero at vertex ", i, " outside its support"));
    }
  }
};

// Transversal segment-triangle test; coplanar contacts are not detected.
namespace detail {
inline bool segment_hits_triangle(const Vec3& p, const Vec3& q, const Vec3& a, const Vec3& b,
                                  const Vec3& c) {
  const Vec3 d = q - p;
  const Vec3 e1 = b - a, e2 = c - a;
  const Vec3 pv = d.cross(e2);
  const double det = e1.dot(pv);
  if (std::abs(det) < 1e-16 * e1.norm() * e2.norm() * d.norm()) return false;
  const double inv = 1.0 / det;
  const Vec3 tv = p - a;
  const double u = tv.dot(pv) * inv;
  if (u < -1e-10 || u > 1.0 + 1e-10) return false;
  const Vec3 qv = tv.cross(e1);
  const double v = d.dot(qv) * inv;
  if (v < -1e-10 || u + v > 1.0 + 1e-10) return false;
  const double s = e2.dot(qv) * inv;
  return s > 1e-10 && s < 1.0 - 1e-10;
}

inline bool triangles_intersect(const Vec3& a0, const Vec3& a1, const Vec3& a2, const Vec3& b0,
                                const Vec3& b1, const Vec3& b2) {
  return segment_hits_triangle(a0, a1, b0, b1, b2) || segment_hits_triangle(a1, a2, b0, b1, b2) ||
         segment_hits_triangle(a2, a0, b0, b1, b2) || segment_hits_triangle(b0, b1, a0, a1, a2) ||
         segment_hits_triangle(b1, b2, a0, a1, a2) || segment_hits_triangle(b2, b0, a0, a1, a2);
}
}  // namespace detail

// True when no two triangles that do not share a vertex intersect
// transversally.  Names the first offending pair on request.
inline bool check_embedded(const Mesh& mesh, std::pair<int, int>* offending = nullptr) {
  if (mesh.is_curve()) return true;  // curve fixtures are planar polygons
  const TriGrid grid(mesh);
  std::set<std::pair<int, int>> tested;
  for (int t = 0; t < (int)mesh.triangles.size(); ++t) {
    Box3 tb;
    const Tri& f = mesh.triangles[t];
    for (int k = 0; k < 3; ++k) tb.expand(mesh.vertices[f[k]]);
    bool bad = false;
    grid.for_box(tb, [&](int o) {
      if (bad || o <= t) return;
      const Tri& g = mesh.triangles[o];
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
          if (f[i] == g[j]) return;  // adjacent triangles touch legitimately
      if (!tested.emplace(t, o).second) return;
      if (detail::triangles_intersect(mesh.vertices[f[0]], mesh.vertices[f[1]],
                                      mesh.vertices[f[2]], mesh.vertices[g[0]],
                                      mesh.vertices[g[1]], mesh.vertices[g[2]])) {
        bad = true;
        if (offending) *offending = {t, o};
      }
    });
    if (bad) return false;
  }
  return true;
}

// Tubular radius estimate: half the shortest normal-ray distance from any
// vertex to a triangle outside its own star.  A round sphere of radius R has
// reach ~ R (the far side is at distance 2R).  Returns +inf when no normal
// ray hits the mesh again (e.g. an open patch).
inline double reach_estimate(const Mesh& mesh, const DifferentialQuantities& dq) {
  const TriGrid grid(mesh);
  std::vector<std::vector<int>> star(mesh.vertices.size());
  for (int t = 0; t < (int)mesh.triangles.size(); ++t)
    for (int k = 0; k < 3; ++k) star[mesh.triangles[t][k]].push_back(t);

  double reach = kInf;
  for (int v = 0; v < (int)mesh.vertices.size(); ++v) {
    const auto& mine = star[v];
    auto skip = [&](int t) { return std::find(mine.begin(), mine.end(), t) != mine.end(); };
    for (int sign = -1; sign <= 1; sign += 2) {
      const Vec3 dir = (double)sign * dq.normal[v];
      const ClosestHit hit = grid.raycast(mesh.vertices[v], dir, 1e-9, skip);
      if (hit.triangle >= 0) reach = std::min(reach, 0.5 * hit.distance);
    }
  }
  return reach;
}

inline double reach_estimate(const Mesh& mesh) {
  return reach_estimate(mesh, differential_quantities(mesh));
}

// Normal graph surface: vertices move to x + eps f(x) n(x), connectivity
// unchanged.  Guards: eps |f| must stay below half the estimated reach, and
// the result must remain embedded.
inline Mesh build_normal_graph(const Mesh& mesh, const PerturbationField& f, double eps,
                               const DifferentialQuantities* dq_in = nullptr,
                               bool verify_embedded = true) {
  f.validate(mesh);
  DifferentialQuantities local;
  const DifferentialQuantities* dq = dq_in;
  if (!dq) {
    local = differential_quantities(mesh);
    dq = &local;
  }
  const double height = std::abs(eps) * f.sup_norm();
  if (height > 0.0) {
    const double reach = reach_estimate(mesh, *dq);
    if (!(height < 0.5 * reach))
      throw guard_error(cat("normal graph height ", height, " exceeds half the reach estimate ",
                            reach));
  }

  Mesh out = mesh;
  for (int v = 0; v < (int)mesh.vertices.size(); ++v)
    out.vertices[v] = mesh.vertices[v] + (eps * f.values[v]) * dq->normal[v];

  if (verify_embedded && height > 0.0) {
    std::pair<int, int> pair;
    if (!check_embedded(out, &pair))
      throw guard_error(cat("normal graph self-intersects (triangles ", pair.first, " and ",
                            pair.second, ")"));
  }
  return out;
}

}  // namespace mcflab
