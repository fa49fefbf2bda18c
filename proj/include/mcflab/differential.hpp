#pragma once

#include "mcflab/mesh.hpp"

namespace mcflab {

// Per-vertex differential data.  Sign conventions: `normal` is the outward
// unit normal (as wound), `mean_curvature` is positive for a convex surface
// with outward normals (sphere of radius R: H = 2/R), and `curvature_vector`
// equals H * normal, so the flow direction is -curvature_vector.  For curves
// the same conventions hold with H = kappa (circle: H = 1/R).
struct DifferentialQuantities {
  std::vector<Vec3> normal;
  std::vector<Vec3> curvature_vector;
  std::vector<double> mean_curvature;
  std::vector<double> second_fundamental_sq;  // |A|^2
  std::vector<double> vertex_weight;          // mixed Voronoi area (or half length)
  int dim = 2;

  double total_weight() const {
    double s = 0.0;
    for (double w : vertex_weight) s += w;
    return s;
  }
};

namespace detail {

inline double cot(const Vec3& u, const Vec3& v) {
  const double c = u.dot(v);
  const double s = u.cross(v).norm();
  return c / std::max(s, 1e-300);
}

inline void curve_quantities(const Mesh& mesh, DifferentialQuantities& dq) {
  const int nv = (int)mesh.vertices.size();
  std::vector<int> prev(nv, -1), next(nv, -1);
  for (const Seg& s : mesh.segments) {
    if (next[s[0]] != -1 || prev[s[1]] != -1)
      throw invariant_error("curve segments do not form simple directed polylines");
    next[s[0]] = s[1];
    prev[s[1]] = s[0];
  }
  for (int i = 0; i < nv; ++i) {
    if (prev[i] < 0 || next[i] < 0)
      throw invariant_error(cat("curve vertex ", i, " is not interior to a closed polyline"));
    const Vec3& xm = mesh.vertices[prev[i]];
    const Vec3& x = mesh.vertices[i];
    const Vec3& xp = mesh.vertices[next[i]];
    const double lm = (x - xm).norm(), lp = (xp - x).norm();
    const Vec3 tm = (x - xm) / lm, tp = (xp - x) / lp;
    // outward-pointing curvature vector of the polyline, exact on regular polygons
    const Vec3 K = (tm - tp) * (2.0 / (lm + lp));
    dq.curvature_vector[i] = K;
    dq.mean_curvature[i] = K.norm();
    dq.normal[i] = dq.mean_curvature[i] > 1e-14 ? Vec3(K / dq.mean_curvature[i]) : Vec3::Zero();
    dq.second_fundamental_sq[i] = dq.mean_curvature[i] * dq.mean_curvature[i];
    dq.vertex_weight[i] = 0.5 * (lm + lp);
  }
}

}  // namespace detail

// Cotangent mean curvature with Voronoi-mixed vertex areas and a per-vertex
// shape operator fit for |A|^2.  Quantities are reliable away from boundary
// vertices; closed meshes have none.
inline DifferentialQuantities differential_quantities(const Mesh& mesh) {
  DifferentialQuantities dq;
  const int nv = (int)mesh.vertices.size();
  dq.normal.assign(nv, Vec3::Zero());
  dq.curvature_vector.assign(nv, Vec3::Zero());
  dq.mean_curvature.assign(nv, 0.0);
  dq.second_fundamental_sq.assign(nv, 0.0);
  dq.vertex_weight.assign(nv, 0.0);
  dq.dim = mesh.dim();

  if (mesh.is_curve()) {
    detail::curve_quantities(mesh, dq);
    return dq;
  }

  // accumulation pass: angle-weighted normals, mixed areas, cotan sums
  std::vector<Vec3> laplace(nv, Vec3::Zero());  // sum w_ij (x_i - x_j)
  for (const Tri& f : mesh.triangles) {
    const Vec3& a = mesh.vertices[f[0]];
    const Vec3& b = mesh.vertices[f[1]];
    const Vec3& c = mesh.vertices[f[2]];
    const Vec3 fn = (b - a).cross(c - a);
    const double area = 0.5 * fn.norm();

    const Vec3* x[3] = {&a, &b, &c};
    double cot_c[3], angle[3];
    for (int k = 0; k < 3; ++k) {
      const Vec3 u = *x[(k + 1) % 3] - *x[k];
      const Vec3 v = *x[(k + 2) % 3] - *x[k];
      cot_c[k] = detail::cot(u, v);
      angle[k] = std::atan2(u.cross(v).norm(), u.dot(v));
    }

    const bool obtuse[3] = {cot_c[0] < 0.0, cot_c[1] < 0.0, cot_c[2] < 0.0};
    const bool any_obtuse = obtuse[0] || obtuse[1] || obtuse[2];
    for (int k = 0; k < 3; ++k) {
      const int i = f[k];
      dq.normal[i] += angle[k] * fn.normalized();
      if (any_obtuse)
        dq.vertex_weight[i] += obtuse[k] ? 0.5 * area : 0.25 * area;
      else {
        // each incident edge pairs with the cotangent of its opposite corner
        const double to_next = (*x[(k + 1) % 3] - *x[k]).squaredNorm();
        const double to_prev = (*x[(k + 2) % 3] - *x[k]).squaredNorm();
        dq.vertex_weight[i] += (to_next * cot_c[(k + 2) % 3] + to_prev * cot_c[(k + 1) % 3]) / 8.0;
      }
      // cotangent weights: edge (k -> k+1) carries cot of the opposite corner k+2
      const int j = f[(k + 1) % 3];
      laplace[i] += 0.5 * cot_c[(k + 2) % 3] * (mesh.vertices[i] - mesh.vertices[j]);
      laplace[j] += 0.5 * cot_c[(k + 2) % 3] * (mesh.vertices[j] - mesh.vertices[i]);
    }
  }
  for (int i = 0; i < nv; ++i) {
    const double norm = dq.normal[i].norm();
    if (norm > 1e-300) dq.normal[i] /= norm;
    // laplace holds (1/2) sum of (cot a + cot b)(x_i - x_j); dividing by the
    // mixed area gives the full mean curvature vector H n (sphere: |K| = 2/R)
    dq.curvature_vector[i] = laplace[i] / std::max(dq.vertex_weight[i], 1e-300);
    dq.mean_curvature[i] = dq.curvature_vector[i].dot(dq.normal[i]);
  }

  // |A|^2 from an osculating quadric: fit height over the tangent plane with
  // linear terms absorbing the normal estimation tilt, then take the shape
  // operator of the fitted graph.
  std::vector<std::vector<int>> neighbors(nv);
  {
    std::map<std::pair<int, int>, bool> seen;
    for (const Tri& f : mesh.triangles)
      for (int k = 0; k < 3; ++k) {
        const int i = f[k], j = f[(k + 1) % 3];
        if (!seen.emplace(detail::undirected(i, j), true).second) continue;
        neighbors[i].push_back(j);
        neighbors[j].push_back(i);
      }
  }
  std::vector<int> patch;
  for (int i = 0; i < nv; ++i) {
    const Vec3& n = dq.normal[i];
    Vec3 e1 = std::abs(n[0]) < 0.9 ? Vec3(1, 0, 0) : Vec3(0, 1, 0);
    e1 = (e1 - e1.dot(n) * n).normalized();
    const Vec3 e2 = n.cross(e1);

    patch = neighbors[i];
    if (patch.size() < 5) {  // low valence: widen to the two-ring
      for (int j : neighbors[i])
        for (int k : neighbors[j])
          if (k != i && std::find(patch.begin(), patch.end(), k) == patch.end())
            patch.push_back(k);
    }

    Eigen::Matrix<double, 5, 5> ata = Eigen::Matrix<double, 5, 5>::Zero();
    Eigen::Matrix<double, 5, 1> atb = Eigen::Matrix<double, 5, 1>::Zero();
    for (int j : patch) {
      const Vec3 dx = mesh.vertices[j] - mesh.vertices[i];
      const double u = dx.dot(e1), v = dx.dot(e2), h = dx.dot(n);
      Eigen::Matrix<double, 5, 1> row;
      row << u, v, 0.5 * u * u, u * v, 0.5 * v * v;
      ata += row * row.transpose();
      atb += row * h;
    }
    ata.diagonal().array() += 1e-12 * (ata.trace() + 1e-300);
    const Eigen::Matrix<double, 5, 1> q = ata.ldlt().solve(atb);
    // graph shape operator: S = g^{-1} II with g = I + grad grad^T
    const Eigen::Vector2d grad(q[0], q[1]);
    Eigen::Matrix2d hess;
    hess << q[2], q[3], q[3], q[4];
    const double w2 = 1.0 + grad.squaredNorm();
    const Eigen::Matrix2d g_inv =
        (Eigen::Matrix2d::Identity() - grad * grad.transpose() / w2);
    const Eigen::Matrix2d shape = g_inv * hess / std::sqrt(w2);
    dq.second_fundamental_sq[i] = (shape * shape).trace();
  }
  return dq;
}

struct ShrinkerResidual {
  double rms = 0.0;       // Gaussian-weighted root mean square of H - <x,n>/2
  double mean_h = 0.0;    // Gaussian-weighted mean of |H|
  double max_abs = 0.0;
  double relative() const { return rms / std::max(mean_h, 1e-300); }
};

// Residual of the self-shrinker equation H = <x,n>/2, weighted by the
// Gaussian exp(-|x|^2/4) and the vertex areas.
inline ShrinkerResidual shrinker_residual(const Mesh& mesh,
                                          const DifferentialQuantities& dq) {
  ShrinkerResidual out;
  double wsum = 0.0, rsum = 0.0, hsum = 0.0;
  for (int i = 0; i < (int)mesh.vertices.size(); ++i) {
    const double w = dq.vertex_weight[i] * std::exp(-mesh.vertices[i].squaredNorm() / 4.0);
    const double r = dq.mean_curvature[i] - mesh.vertices[i].dot(dq.normal[i]) / 2.0;
    wsum += w;
    rsum += w * r * r;
    hsum += w * std::abs(dq.mean_curvature[i]);
    out.max_abs = std::max(out.max_abs, std::abs(r));
  }
  if (wsum > 0.0) {
    out.rms = std::sqrt(rsum / wsum);
    out.mean_h = hsum / wsum;
  }
  return out;
}

inline ShrinkerResidual shrinker_residual(const Mesh& mesh) {
  return shrinker_residual(mesh, differential_quantities(mesh));
}

}  // namespace mcflab
