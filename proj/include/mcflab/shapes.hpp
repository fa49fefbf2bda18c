#pragma once

#include <map>

#include "mcflab/mesh.hpp"

namespace mcflab {

// Icosphere: midpoint-subdivided icosahedron projected to the sphere.  The
// base icosahedron is centrally symmetric and subdivision preserves that, so
// antipodal cancellation holds exactly for symmetric integrands.
inline Mesh make_icosphere(double radius, int subdivisions, const Vec3& center = Vec3::Zero()) {
  if (radius <= 0.0) throw invariant_error("sphere radius must be positive");
  if (subdivisions < 0 || subdivisions > 7)
    throw invariant_error("icosphere subdivision level out of range [0,7]");

  const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
  Mesh m;
  m.vertices = {
      {-1, phi, 0}, {1, phi, 0}, {-1, -phi, 0}, {1, -phi, 0},
      {0, -1, phi}, {0, 1, phi}, {0, -1, -phi}, {0, 1, -phi},
      {phi, 0, -1}, {phi, 0, 1}, {-phi, 0, -1}, {-phi, 0, 1},
  };
  m.triangles = {
      {0, 11, 5}, {0, 5, 1}, {0, 1, 7}, {0, 7, 10}, {0, 10, 11},
      {1, 5, 9}, {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
      {3, 9, 4}, {3, 4, 2}, {3, 2, 6}, {3, 6, 8}, {3, 8, 9},
      {4, 9, 5}, {2, 4, 11}, {6, 2, 10}, {8, 6, 7}, {9, 8, 1},
  };
  for (Vec3& v : m.vertices) v.normalize();

  for (int level = 0; level < subdivisions; ++level) {
    std::map<std::pair<int, int>, int> midpoint;
    auto mid = [&](int a, int b) {
      const auto key = detail::undirected(a, b);
      auto it = midpoint.find(key);
      if (it != midpoint.end()) return it->second;
      const int idx = (int)m.vertices.size();
      m.vertices.push_back((m.vertices[a] + m.vertices[b]).normalized());
      midpoint.emplace(key, idx);
      return idx;
    };
    std::vector<Tri> next;
    next.reserve(m.triangles.size() * 4);
    for (const Tri& f : m.triangles) {
      const int ab = mid(f[0], f[1]), bc = mid(f[1], f[2]), ca = mid(f[2], f[0]);
      next.push_back({f[0], ab, ca});
      next.push_back({f[1], bc, ab});
      next.push_back({f[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    m.triangles = std::move(next);
  }
  for (Vec3& v : m.vertices) v = center + radius * v;
  return m;
}

// Latitude/longitude sphere.  Less uniform than the icosphere but allows
// removing polar caps cleanly (see make_neck_fixture).
inline Mesh make_uv_sphere(double radius, int n_lat, int n_lon,
                           const Vec3& center = Vec3::Zero(), bool flip = false) {
  if (radius <= 0.0) throw invariant_error("sphere radius must be positive");
  if (n_lat < 3 || n_lon < 3) throw invariant_error("uv sphere needs n_lat,n_lon >= 3");
  Mesh m;
  m.vertices.push_back(center + Vec3(0, 0, radius));
  for (int i = 1; i < n_lat; ++i) {
    const double theta = kPi * (double)i / (double)n_lat;
    for (int j = 0; j < n_lon; ++j) {
      const double phi = 2.0 * kPi * (double)j / (double)n_lon;
      m.vertices.push_back(center + radius * Vec3(std::sin(theta) * std::cos(phi),
                                                  std::sin(theta) * std::sin(phi),
                                                  std::cos(theta)));
    }
  }
  m.vertices.push_back(center + Vec3(0, 0, -radius));
  const int south = (int)m.vertices.size() - 1;
  auto ring = [&](int i, int j) { return 1 + (i - 1) * n_lon + (j % n_lon); };
  for (int j = 0; j < n_lon; ++j) m.triangles.push_back({0, ring(1, j), ring(1, j + 1)});
  for (int i = 1; i + 1 < n_lat; ++i)
    for (int j = 0; j < n_lon; ++j) {
      m.triangles.push_back({ring(i, j), ring(i + 1, j), ring(i + 1, j + 1)});
      m.triangles.push_back({ring(i, j), ring(i + 1, j + 1), ring(i, j + 1)});
    }
  for (int j = 0; j < n_lon; ++j)
    m.triangles.push_back({south, ring(n_lat - 1, j + 1), ring(n_lat - 1, j)});
  if (flip)
    for (Tri& f : m.triangles) std::swap(f[1], f[2]);
  return m;
}

inline Mesh make_ellipsoid(const Vec3& semi_axes, int subdivisions) {
  if (semi_axes.minCoeff() <= 0.0) throw invariant_error("ellipsoid semi-axes must be positive");
  Mesh m = make_icosphere(1.0, subdivisions);
  for (Vec3& v : m.vertices) v = v.cwiseProduct(semi_axes);
  return m;
}

// Flat hexagonal disk in the z=0 plane: `rings` concentric vertex rings.
// Open surface (has boundary); used for planar oracles.
inline Mesh make_hex_disk(double radius, int rings) {
  if (rings < 1) throw invariant_error("hex disk needs at least one ring");
  Mesh m;
  m.vertices.push_back(Vec3::Zero());
  std::vector<int> ring_start = {0};
  for (int r = 1; r <= rings; ++r) {
    ring_start.push_back((int)m.vertices.size());
    const double rad = radius * (double)r / (double)rings;
    const int count = 6 * r;
    for (int k = 0; k < count; ++k) {
      const double ang = 2.0 * kPi * (double)k / (double)count;
      m.vertices.push_back(Vec3(rad * std::cos(ang), rad * std::sin(ang), 0.0));
    }
  }
  auto at = [&](int r, int k) {
    if (r == 0) return 0;
    return ring_start[r] + (k % (6 * r));
  };
  for (int k = 0; k < 6; ++k) m.triangles.push_back({0, at(1, k), at(1, k + 1)});
  for (int r = 1; r < rings; ++r) {
    // walk the outer ring, anchoring each sector corner to the inner ring
    int inner = 0;
    for (int k = 0; k < 6 * (r + 1); ++k) {
      const int pos = k % (r + 1);
      m.triangles.push_back({at(r + 1, k), at(r + 1, k + 1), at(r, inner)});
      if (pos < r) {
        m.triangles.push_back({at(r + 1, k + 1), at(r, inner + 1), at(r, inner)});
        ++inner;
      }
    }
  }
  return m;
}

// Closed polygonal circle in the z=0 plane (curve fixture, n = 1).
inline Mesh make_circle(double radius, int n, const Vec3& center = Vec3::Zero()) {
  if (radius <= 0.0) throw invariant_error("circle radius must be positive");
  if (n < 3) throw invariant_error("circle needs at least 3 segments");
  Mesh m;
  for (int k = 0; k < n; ++k) {
    const double ang = 2.0 * kPi * (double)k / (double)n;
    m.vertices.push_back(center + Vec3(radius * std::cos(ang), radius * std::sin(ang), 0.0));
  }
  for (int k = 0; k < n; ++k) m.segments.push_back({k, (k + 1) % n});
  return m;
}

// Two concentric spheres joined by a thin catenoid-like tube through aligned
// polar holes: a closed genus-0 surface whose curvature concentrates on the
// neck.  The inner sphere is wound inward so the surface bounds the shell.
inline Mesh make_neck_fixture(double r_inner, double r_outer, double neck_radius,
                              int n_lat = 24, int n_lon = 32) {
  if (!(0.0 < r_inner && r_inner < r_outer))
    throw invariant_error("neck fixture needs 0 < r_inner < r_outer");
  const double rim_inner = r_inner * std::sin(kPi / (double)n_lat);
  if (!(0.0 < neck_radius && neck_radius < 0.9 * rim_inner))
    throw invariant_error(cat("neck radius must lie in (0, ", 0.9 * rim_inner,
                              ") for this resolution"));

  // Build both spheres, drop one polar fan each (around +z), bridge the holes.
  auto open_sphere = [&](double radius, bool flip) {
    Mesh s = make_uv_sphere(radius, n_lat, n_lon, Vec3::Zero(), flip);
    // remove the north pole (vertex 0) and its triangle fan
    std::vector<Tri> kept;
    for (const Tri& f : s.triangles)
      if (f[0] != 0 && f[1] != 0 && f[2] != 0) kept.push_back({f[0] - 1, f[1] - 1, f[2] - 1});
    s.triangles = std::move(kept);
    s.vertices.erase(s.vertices.begin());
    return s;
  };
  Mesh outer = open_sphere(r_outer, false);
  Mesh inner = open_sphere(r_inner, true);

  const int off = (int)outer.vertices.size();
  Mesh m = merge_meshes({outer, inner});

  // The hole rims are the first latitude rings, vertices 0..n_lon-1 of each part.
  const double theta1 = kPi / (double)n_lat;
  const double ro = r_outer * std::sin(theta1), zo = r_outer * std::cos(theta1);
  const double ri = r_inner * std::sin(theta1), zi = r_inner * std::cos(theta1);

  // Tube profile from the outer hole rim down to the inner one, waist at
  // neck_radius halfway; cosine blend keeps the profile smooth enough.
  const int tube_rings = 8;
  std::vector<int> prev(n_lon);
  for (int j = 0; j < n_lon; ++j) prev[j] = j;  // outer rim ring
  auto stitch = [&](const std::vector<int>& upper, const std::vector<int>& lower) {
    // winding complements the fans removed from the spheres
    for (int j = 0; j < n_lon; ++j) {
      const int jn = (j + 1) % n_lon;
      m.triangles.push_back({upper[j], upper[jn], lower[jn]});
      m.triangles.push_back({upper[j], lower[jn], lower[j]});
    }
  };
  for (int k = 1; k <= tube_rings; ++k) {
    const double s = (double)k / (double)(tube_rings + 1);
    const double z = zo + (zi - zo) * s;
    const double ends = ro + (ri - ro) * s;
    const double waist = 0.5 - 0.5 * std::cos(2.0 * kPi * s);  // 0 at ends, 1 mid
    const double rad = ends + (neck_radius - ends) * waist;
    std::vector<int> cur(n_lon);
    for (int j = 0; j < n_lon; ++j) {
      const double phi = 2.0 * kPi * (double)j / (double)n_lon;
      cur[j] = (int)m.vertices.size();
      m.vertices.push_back(Vec3(rad * std::cos(phi), rad * std::sin(phi), z));
    }
    stitch(prev, cur);
    prev = cur;
  }
  std::vector<int> inner_rim(n_lon);
  for (int j = 0; j < n_lon; ++j) inner_rim[j] = off + j;
  stitch(prev, inner_rim);
  return m;
}

// Rotationally symmetric torus built by revolving a closed profile curve in
// the (r,z) half-plane around the z-axis.
inline Mesh revolve_profile(const std::vector<Eigen::Vector2d>& profile, int n_angular) {
  const int np = (int)profile.size();
  if (np < 3 || n_angular < 3) throw invariant_error("revolve needs >=3 profile and angular samples");
  Mesh m;
  for (int i = 0; i < np; ++i)
    for (int j = 0; j < n_angular; ++j) {
      const double phi = 2.0 * kPi * (double)j / (double)n_angular;
      m.vertices.push_back(Vec3(profile[i][0] * std::cos(phi),
                                profile[i][0] * std::sin(phi), profile[i][1]));
    }
  auto at = [&](int i, int j) { return (i % np) * n_angular + (j % n_angular); };
  for (int i = 0; i < np; ++i)
    for (int j = 0; j < n_angular; ++j) {
      m.triangles.push_back({at(i, j), at(i + 1, j), at(i + 1, j + 1)});
      m.triangles.push_back({at(i, j), at(i + 1, j + 1), at(i, j + 1)});
    }
  return m;
}

namespace detail {

// Profile curves of rotationally symmetric critical points of the Gaussian
// area are geodesics of the conformal metric lambda^2 (dr^2+dz^2) with
// lambda = r exp(-(r^2+z^2)/4); their Euclidean curvature satisfies
// kappa = <grad log lambda, nu>.
struct ProfileShot {
  std::vector<Eigen::Vector2d> half;  // from (a,0) going up, ending at z=0
  double end_angle = 0.0;             // tangent angle at the z=0 return
  bool ok = false;
};

inline ProfileShot shoot_profile(double a, double ds, int max_steps) {
  ProfileShot shot;
  auto rhs = [](const Eigen::Vector3d& s) {
    const double r = s[0], z = s[1], th = s[2];
    const double gr = 1.0 / r - 0.5 * r, gz = -0.5 * z;
    return Eigen::Vector3d(std::cos(th), std::sin(th),
                           -std::sin(th) * gr + std::cos(th) * gz);
  };
  Eigen::Vector3d s(a, 0.0, kPi / 2.0);
  shot.half.push_back({s[0], s[1]});
  for (int step = 0; step < max_steps; ++step) {
    const Eigen::Vector3d k1 = rhs(s);
    const Eigen::Vector3d k2 = rhs(s + 0.5 * ds * k1);
    const Eigen::Vector3d k3 = rhs(s + 0.5 * ds * k2);
    const Eigen::Vector3d k4 = rhs(s + ds * k3);
    const Eigen::Vector3d sn = s + (ds / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (sn[0] <= 1e-6) return shot;  // hit the axis, not a torus profile
    if (step > 3 && s[1] > 0.0 && sn[1] <= 0.0) {
      const double w = s[1] / (s[1] - sn[1]);  // linear event refinement
      const Eigen::Vector3d hit = s + w * (sn - s);
      shot.half.push_back({hit[0], 0.0});
      shot.end_angle = hit[2];
      shot.ok = true;
      return shot;
    }
    s = sn;
    shot.half.push_back({s[0], s[1]});
  }
  return shot;
}

inline std::vector<Eigen::Vector2d> resample_closed(const std::vector<Eigen::Vector2d>& pts,
                                                    int n) {
  std::vector<double> arc(pts.size(), 0.0);
  for (size_t i = 1; i < pts.size(); ++i) arc[i] = arc[i - 1] + (pts[i] - pts[i - 1]).norm();
  const double total = arc.back();
  std::vector<Eigen::Vector2d> out;
  out.reserve(n);
  size_t seg = 0;
  for (int k = 0; k < n; ++k) {
    const double target = total * (double)k / (double)n;
    while (seg + 1 < arc.size() && arc[seg + 1] < target) ++seg;
    const double denom = std::max(arc[seg + 1] - arc[seg], 1e-300);
    const double w = (target - arc[seg]) / denom;
    out.push_back(pts[seg] + w * (pts[seg + 1] - pts[seg]));
  }
  return out;
}

}  // namespace detail

// Rotationally symmetric torus satisfying H = <x,n>/2 approximately: the
// profile is found by shooting geodesics of the Gaussian-weighted half-plane
// metric and bisecting on the return angle.  Result is a closed genus-1 mesh.
inline Mesh make_shrinker_torus(int n_profile = 96, int n_angular = 160) {
  const double ds = 2e-4;
  const int max_steps = 200000;
  // A closed profile returns to z=0 with a vertical downward tangent.
  auto miss = [&](double a) {
    const detail::ProfileShot shot = detail::shoot_profile(a, ds, max_steps);
    if (!shot.ok) return kInf;
    double d = shot.end_angle + kPi / 2.0;
    while (d > kPi) d -= 2.0 * kPi;
    while (d < -kPi) d += 2.0 * kPi;
    return d;
  };
  // bracket the root in the starting radius
  double lo = 0.0, hi = 0.0, flo = 0.0;
  double prev_a = 0.0, prev_m = kInf;
  for (double a = 0.25; a <= 1.6; a += 0.05) {
    const double ma = miss(a);
    if (std::isfinite(prev_m) && std::isfinite(ma) && prev_m * ma < 0.0) {
      lo = prev_a;
      hi = a;
      flo = prev_m;
      break;
    }
    prev_a = a;
    prev_m = ma;
  }
  if (hi == 0.0) throw invariant_error("torus profile shooting failed to bracket a closed profile");
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double fm = miss(mid);
    if (!std::isfinite(fm)) throw invariant_error("torus profile shooting lost the bracket");
    if (flo * fm <= 0.0)
      hi = mid;
    else {
      lo = mid;
      flo = fm;
    }
    if (hi - lo < 1e-13) break;
  }
  const detail::ProfileShot shot = detail::shoot_profile(0.5 * (lo + hi), ds, max_steps);
  if (!shot.ok) throw invariant_error("torus profile shooting failed at the bisected radius");

  // close the profile by reflecting across z=0
  std::vector<Eigen::Vector2d> closed = shot.half;
  for (int i = (int)shot.half.size() - 2; i >= 1; --i)
    closed.push_back({shot.half[i][0], -shot.half[i][1]});
  return revolve_profile(detail::resample_closed(closed, n_profile), n_angular);
}

}  // namespace mcflab
