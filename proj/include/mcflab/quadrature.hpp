#pragma once

#include "mcflab/measure.hpp"

namespace mcflab {

// Symmetric triangle rules in barycentric coordinates (weights sum to 1) and
// Gauss-Legendre segment rules on [0,1].  Order here means polynomial degree
// of exactness.
struct QuadRule {
  std::vector<std::array<double, 3>> tri_nodes;
  std::vector<double> tri_weights;
  std::vector<double> seg_nodes;
  std::vector<double> seg_weights;
};

inline QuadRule quad_rule(int order) {
  QuadRule r;
  switch (order) {
    case 1:
      r.tri_nodes = {{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0}};
      r.tri_weights = {1.0};
      r.seg_nodes = {0.5};
      r.seg_weights = {1.0};
      break;
    case 2:
    case 3: {
      const double a = 2.0 / 3.0, b = 1.0 / 6.0;
      r.tri_nodes = {{a, b, b}, {b, a, b}, {b, b, a}};
      r.tri_weights = {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
      const double g = 0.5 / std::sqrt(3.0);
      r.seg_nodes = {0.5 - g, 0.5 + g};
      r.seg_weights = {0.5, 0.5};
      break;
    }
    case 4:
    case 5:
    case 6: {
      // Dunavant degree-4 rule (6 points)
      const double a1 = 0.816847572980459, b1 = 0.091576213509771, w1 = 0.109951743655322;
      const double a2 = 0.108103018168070, b2 = 0.445948490915965, w2 = 0.223381589678011;
      r.tri_nodes = {{a1, b1, b1}, {b1, a1, b1}, {b1, b1, a1},
                     {a2, b2, b2}, {b2, a2, b2}, {b2, b2, a2}};
      r.tri_weights = {w1, w1, w1, w2, w2, w2};
      const double g = 0.5 * std::sqrt(3.0 / 5.0);
      r.seg_nodes = {0.5 - g, 0.5, 0.5 + g};
      r.seg_weights = {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};
      break;
    }
    default:
      throw invariant_error(cat("unsupported quadrature order ", order, " (use 1..6)"));
  }
  return r;
}

// Quadrature point cloud for a weighted measure: integrals become weighted
// sums over `points`.  Multiplicities are folded into the weights.
struct QuadCloud {
  std::vector<Vec3> points;
  std::vector<double> weights;       // multiplicity folded in
  std::vector<double> unit_weights;  // geometric weights, multiplicity one
  int dim = 2;                 // intrinsic dimension n of the support
  double total_weight = 0.0;   // weighted area (or length)
  Box3 support_box;            // bounding box of the mesh vertices
  double min_edge = kInf;

  void add(const Vec3& p, double w, double unit_w) {
    points.push_back(p);
    weights.push_back(w);
    unit_weights.push_back(unit_w);
    total_weight += w;
  }
};

inline QuadCloud build_quad_cloud(const WeightedMeasure& mu, int order = 3) {
  const QuadRule rule = quad_rule(order);
  QuadCloud cloud;
  cloud.dim = mu.dim();
  cloud.support_box = mu.bounding_box();
  cloud.min_edge = mu.min_edge_length();
  for (const WeightedComponent& c : mu.components) {
    const double m = (double)c.multiplicity;
    if (c.mesh.is_curve()) {
      for (int s = 0; s < (int)c.mesh.segments.size(); ++s) {
        const Vec3& a = c.mesh.vertices[c.mesh.segments[s][0]];
        const Vec3& b = c.mesh.vertices[c.mesh.segments[s][1]];
        const double len = (b - a).norm();
        for (size_t q = 0; q < rule.seg_nodes.size(); ++q)
          cloud.add(a + rule.seg_nodes[q] * (b - a), m * len * rule.seg_weights[q],
                    len * rule.seg_weights[q]);
      }
    } else {
      for (int t = 0; t < (int)c.mesh.triangles.size(); ++t) {
        const Tri& f = c.mesh.triangles[t];
        const Vec3 &a = c.mesh.vertices[f[0]], &b = c.mesh.vertices[f[1]],
                   &cc = c.mesh.vertices[f[2]];
        const double area = 0.5 * (b - a).cross(cc - a).norm();
        for (size_t q = 0; q < rule.tri_nodes.size(); ++q) {
          const auto& n = rule.tri_nodes[q];
          cloud.add(n[0] * a + n[1] * b + n[2] * cc, m * area * rule.tri_weights[q],
                    area * rule.tri_weights[q]);
        }
      }
    }
  }
  if (cloud.points.empty()) throw invariant_error("measure produced no quadrature points");
  return cloud;
}

inline QuadCloud build_quad_cloud(const Mesh& mesh, int order = 3) {
  return build_quad_cloud(WeightedMeasure::single(mesh), order);
}

}  // namespace mcflab
