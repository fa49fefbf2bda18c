#pragma once

#include "mcflab/geodesic.hpp"
#include "mcflab/normal_graph.hpp"

namespace mcflab {

// Cutoff construction: centers p_j with pairwise-disjoint geodesic 2r-balls
// and the fixed ramp profile (1 on [0,1], 0 outside [0,2], quintic between).
struct CutoffSpec {
  std::vector<int> points;  // vertex indices of the cutoff centers
  double radius = 0.0;

  void validate(const Mesh& mesh) const {
    if (points.empty()) throw invariant_error("cutoff spec needs at least one center");
    if (!(radius > 0.0)) throw invariant_error(cat("cutoff radius must be positive, got ", radius));
    for (int p : points)
      if (p < 0 || p >= (int)mesh.vertices.size())
        throw invariant_error(cat("cutoff center vertex ", p, " out of range"));
    for (size_t i = 0; i < points.size(); ++i)
      for (size_t j = i + 1; j < points.size(); ++j)
        if (points[i] == points[j])
          throw invariant_error(cat("cutoff center vertex ", points[i], " listed twice"));
  }
};

struct LocalizedField {
  PerturbationField field;  // g * f
  std::vector<double> g;    // cutoff factor, 0 on each B_r, 1 off each B_2r
  std::vector<std::vector<double>> center_distances;  // geodesic fields from the centers
};

// f_r = g f with g = 1 - sum_j phi(d_j / r).  The three pointwise properties
// hold exactly at vertices: f_r >= 0, f_r = 0 on each B_r(p_j), and f_r = f
// outside the union of the B_2r(p_j).
inline LocalizedField localize_field(const Mesh& mesh, const PerturbationField& f,
                                     const CutoffSpec& spec) {
  spec.validate(mesh);
  f.validate(mesh);
  const GeodesicField geo(mesh);
  LocalizedField out;
  for (int p : spec.points) out.center_distances.push_back(geo.distances_from(p));

  // disjointness of the 2r-balls: centers at least 4r apart
  for (size_t i = 0; i < spec.points.size(); ++i)
    for (size_t j = i + 1; j < spec.points.size(); ++j) {
      const double d = out.center_distances[i][spec.points[j]];
      if (d < 4.0 * spec.radius)
        throw invariant_error(cat("cutoff balls around vertices ", spec.points[i], " and ",
                                  spec.points[j], " overlap: geodesic distance ", d, " < ",
                                  4.0 * spec.radius));
    }

  const int nv = (int)mesh.vertices.size();
  out.g.resize(nv);
  out.field.values.resize(nv);
  out.field.support.assign(nv, false);
  for (int v = 0; v < nv; ++v) {
    double ramp = 0.0;
    for (const std::vector<double>& dist : out.center_distances)
      ramp += bump_profile(dist[v] / spec.radius);
    double g = 1.0 - ramp;
    if (g < -1e-9)
      throw invariant_error(cat("cutoff factor dropped below zero at vertex ", v,
                                " (overlapping ramps)"));
    g = std::clamp(g, 0.0, 1.0);
    out.g[v] = g;
    out.field.values[v] = g == 1.0 ? f.values[v] : g * f.values[v];
    out.field.support[v] = g > 0.0 && (f.support.empty() || f.support[v]);
  }
  return out;
}

}  // namespace mcflab
