#pragma once

#include <queue>

#include "mcflab/mesh.hpp"

namespace mcflab {

// Closest point on triangle (a,b,c) to p, with barycentric coordinates.
inline Vec3 closest_point_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c,
                                   Vec3* bary = nullptr) {
  const Vec3 ab = b - a, ac = c - a, ap = p - a;
  const double d1 = ab.dot(ap), d2 = ac.dot(ap);
  auto out = [&](double u, double v, double w, const Vec3& q) {
    if (bary) *bary = Vec3(u, v, w);
    return q;
  };
  if (d1 <= 0.0 && d2 <= 0.0) return out(1, 0, 0, a);

  const Vec3 bp = p - b;
  const double d3 = ab.dot(bp), d4 = ac.dot(bp);
  if (d3 >= 0.0 && d4 <= d3) return out(0, 1, 0, b);

  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) {
    const double v = d1 / (d1 - d3);
    return out(1 - v, v, 0, a + v * ab);
  }

  const Vec3 cp = p - c;
  const double d5 = ab.dot(cp), d6 = ac.dot(cp);
  if (d6 >= 0.0 && d5 <= d6) return out(0, 0, 1, c);

  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) {
    const double w = d2 / (d2 - d6);
    return out(1 - w, 0, w, a + w * ac);
  }

  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
    const double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
    return out(0, 1 - w, w, b + w * (c - b));
  }

  const double denom = 1.0 / (va + vb + vc);
  const double v = vb * denom, w = vc * denom;
  return out(1 - v - w, v, w, a + ab * v + ac * w);
}

struct ClosestHit {
  double distance = kInf;
  Vec3 point = Vec3::Zero();
  Vec3 bary = Vec3::Zero();
  int triangle = -1;
};

// Uniform grid over triangles: nearest-point queries by expanding shells,
// ray queries by cell walking, box queries for pair pruning.
class TriGrid {
 public:
  explicit TriGrid(const Mesh& mesh) : mesh_(&mesh) {
    box_ = mesh.bounding_box();
    const Vec3 ext = (box_.extent().array() + 1e-12).matrix();
    const long nt = std::max<long>(1, (long)mesh.triangles.size());
    const double target = std::cbrt((double)nt);
    const double scale = ext.maxCoeff() / std::min(64.0, std::max(1.0, target));
    cell_ = std::max(scale, 1e-12);
    for (int k = 0; k < 3; ++k)
      dims_[k] = std::max(1, std::min(64, (int)std::ceil(ext[k] / cell_)));
    cells_.resize((size_t)dims_[0] * dims_[1] * dims_[2]);
    for (int t = 0; t < (int)mesh.triangles.size(); ++t) {
      Box3 tb;
      for (int k = 0; k < 3; ++k) tb.expand(mesh.vertices[mesh.triangles[t][k]]);
      visit_cells(tb, [&](size_t c) { cells_[c].push_back(t); });
    }
  }

  const Mesh& mesh() const { return *mesh_; }
  double cell_size() const { return cell_; }

  ClosestHit nearest(const Vec3& p) const {
    ClosestHit best;
    const std::array<int, 3> c0 = cell_of(p);
    const int max_ring =
        std::max({dims_[0], dims_[1], dims_[2]}) + 1;
    for (int ring = 0; ring <= max_ring; ++ring) {
      // cells in this ring can only help if their nearest face is closer
      if (best.triangle >= 0 && (double)(ring - 1) * cell_ > best.distance) break;
      bool any = false;
      for_ring(c0, ring, [&](size_t c) {
        any = true;
        for (int t : cells_[c]) test_triangle(p, t, best);
      });
      if (!any && ring > max_ring) break;
    }
    return best;
  }

  // First ray hit at parameter > t_min, ignoring triangles for which `skip`
  // returns true.  Direction need not be unit length.
  template <typename Skip>
  ClosestHit raycast(const Vec3& origin, const Vec3& dir, double t_min, Skip&& skip) const {
    ClosestHit best;
    const double dn = dir.norm();
    if (dn < 1e-300) return best;

    // clip the ray to the grid box
    double enter = 0.0, exit = kInf;
    for (int k = 0; k < 3; ++k) {
      if (std::abs(dir[k]) < 1e-300) {
        if (origin[k] < box_.lo[k] - cell_ || origin[k] > box_.hi[k] + cell_) return best;
        continue;
      }
      double s0 = (box_.lo[k] - origin[k]) / dir[k];
      double s1 = (box_.hi[k] - origin[k]) / dir[k];
      if (s0 > s1) std::swap(s0, s1);
      enter = std::max(enter, s0);
      exit = std::min(exit, s1);
    }
    if (enter > exit) return best;

    Vec3 pos = origin + enter * dir;
    std::array<int, 3> cell = cell_of(pos);
    std::array<int, 3> step;
    Vec3 t_next, t_delta;
    for (int k = 0; k < 3; ++k) {
      step[k] = dir[k] > 0.0 ? 1 : (dir[k] < 0.0 ? -1 : 0);
      if (step[k] == 0) {
        t_next[k] = kInf;
        t_delta[k] = kInf;
      } else {
        const double edge = box_.lo[k] + cell_ * (cell[k] + (step[k] > 0 ? 1 : 0));
        t_next[k] = (edge - origin[k]) / dir[k];
        t_delta[k] = cell_ / std::abs(dir[k]);
      }
    }
    double t_cell = enter;
    while (true) {
      for (int t : cells_[flat(cell)]) {
        if (skip(t)) continue;
        double hit_t;
        if (ray_triangle(origin, dir, t, t_min, hit_t) && hit_t < best.distance) {
          best.distance = hit_t;
          best.triangle = t;
          best.point = origin + hit_t * dir;
        }
      }
      const int axis = t_next[0] < t_next[1] ? (t_next[0] < t_next[2] ? 0 : 2)
                                             : (t_next[1] < t_next[2] ? 1 : 2);
      t_cell = t_next[axis];
      if (best.triangle >= 0 && best.distance < t_cell) break;
      if (t_cell > exit) break;
      cell[axis] += step[axis];
      if (cell[axis] < 0 || cell[axis] >= dims_[axis]) break;
      t_next[axis] += t_delta[axis];
    }
    return best;
  }

  // Calls fn(triangle_index) for triangles whose cells overlap `query`;
  // a triangle may be reported more than once.
  template <typename Fn>
  void for_box(const Box3& query, Fn&& fn) const {
    visit_cells(query, [&](size_t c) {
      for (int t : cells_[c]) fn(t);
    });
  }

 private:
  std::array<int, 3> cell_of(const Vec3& p) const {
    std::array<int, 3> c;
    for (int k = 0; k < 3; ++k) {
      const int i = (int)std::floor((p[k] - box_.lo[k]) / cell_);
      c[k] = std::min(std::max(i, 0), dims_[k] - 1);
    }
    return c;
  }
  size_t flat(const std::array<int, 3>& c) const {
    return ((size_t)c[2] * dims_[1] + c[1]) * dims_[0] + c[0];
  }

  template <typename Fn>
  void visit_cells(const Box3& b, Fn&& fn) const {
    const std::array<int, 3> lo = cell_of(b.lo), hi = cell_of(b.hi);
    for (int z = lo[2]; z <= hi[2]; ++z)
      for (int y = lo[1]; y <= hi[1]; ++y)
        for (int x = lo[0]; x <= hi[0]; ++x) fn(flat({x, y, z}));
  }

  template <typename Fn>
  void for_ring(const std::array<int, 3>& c0, int ring, Fn&& fn) const {
    const int x0 = c0[0] - ring, x1 = c0[0] + ring;
    const int y0 = c0[1] - ring, y1 = c0[1] + ring;
    const int z0 = c0[2] - ring, z1 = c0[2] + ring;
    for (int z = std::max(z0, 0); z <= std::min(z1, dims_[2] - 1); ++z)
      for (int y = std::max(y0, 0); y <= std::min(y1, dims_[1] - 1); ++y)
        for (int x = std::max(x0, 0); x <= std::min(x1, dims_[0] - 1); ++x) {
          const bool shell = x == x0 || x == x1 || y == y0 || y == y1 || z == z0 || z == z1;
          if (shell) fn(flat({x, y, z}));
        }
  }

  void test_triangle(const Vec3& p, int t, ClosestHit& best) const {
    const Tri& f = mesh_->triangles[t];
    Vec3 bary;
    const Vec3 q = closest_point_triangle(p, mesh_->vertices[f[0]], mesh_->vertices[f[1]],
                                          mesh_->vertices[f[2]], &bary);
    const double d = (q - p).norm();
    if (d < best.distance) {
      best.distance = d;
      best.point = q;
      best.bary = bary;
      best.triangle = t;
    }
  }

  bool ray_triangle(const Vec3& o, const Vec3& d, int t, double t_min, double& hit_t) const {
    const Tri& f = mesh_->triangles[t];
    const Vec3& a = mesh_->vertices[f[0]];
    const Vec3 e1 = mesh_->vertices[f[1]] - a, e2 = mesh_->vertices[f[2]] - a;
    const Vec3 pv = d.cross(e2);
    const double det = e1.dot(pv);
    if (std::abs(det) < 1e-14 * e1.norm() * e2.norm() * d.norm()) return false;
    const double inv = 1.0 / det;
    const Vec3 tv = o - a;
    const double u = tv.dot(pv) * inv;
    if (u < -1e-9 || u > 1.0 + 1e-9) return false;
    const Vec3 qv = tv.cross(e1);
    const double v = d.dot(qv) * inv;
    if (v < -1e-9 || u + v > 1.0 + 1e-9) return false;
    const double s = e2.dot(qv) * inv;
    if (s <= t_min) return false;
    hit_t = s;
    return true;
  }

  const Mesh* mesh_;
  Box3 box_;
  double cell_ = 1.0;
  std::array<int, 3> dims_ = {1, 1, 1};
  std::vector<std::vector<int>> cells_;
};

// Signed height of p over a closed reference surface: distance to the closest
// point, signed by the supporting face normal.
struct HeightSample {
  double height = 0.0;
  double distance = 0.0;
  Vec3 foot = Vec3::Zero();
  Vec3 bary = Vec3::Zero();
  int triangle = -1;
};

inline HeightSample signed_height(const Vec3& p, const TriGrid& ref) {
  const ClosestHit hit = ref.nearest(p);
  HeightSample h;
  h.distance = hit.distance;
  h.foot = hit.point;
  h.bary = hit.bary;
  h.triangle = hit.triangle;
  if (hit.triangle >= 0) {
    const Vec3 n = ref.mesh().triangle_normal(hit.triangle);
    h.height = (p - hit.point).dot(n) >= 0.0 ? hit.distance : -hit.distance;
  }
  return h;
}

// Generalized winding number of p with respect to an oriented triangle mesh
// (sum of signed solid angles over 4 pi); +-1 inside a closed surface wound
// outward, ~0 outside.
inline double winding_number(const Vec3& p, const Mesh& mesh) {
  double total = 0.0;
  for (const Tri& f : mesh.triangles) {
    const Vec3 a = mesh.vertices[f[0]] - p;
    const Vec3 b = mesh.vertices[f[1]] - p;
    const Vec3 c = mesh.vertices[f[2]] - p;
    const double la = a.norm(), lb = b.norm(), lc = c.norm();
    const double numer = a.dot(b.cross(c));
    const double denom = la * lb * lc + a.dot(b) * lc + b.dot(c) * la + c.dot(a) * lb;
    total += 2.0 * std::atan2(numer, denom);
  }
  return total / (4.0 * kPi);
}

// max over vertices of A of the distance to B, symmetrized.
inline double hausdorff_distance(const Mesh& a, const Mesh& b) {
  const TriGrid ga(a), gb(b);
  double d = 0.0;
  for (const Vec3& v : a.vertices) d = std::max(d, gb.nearest(v).distance);
  for (const Vec3& v : b.vertices) d = std::max(d, ga.nearest(v).distance);
  return d;
}

}  // namespace mcflab
