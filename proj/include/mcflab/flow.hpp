#pragma once

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "mcflab/closest_point.hpp"
#include "mcflab/differential.hpp"
#include "mcflab/entropy.hpp"
#include "mcflab/shapes.hpp"

namespace mcflab {

enum class FlowScheme { explicit_euler, semi_implicit };

inline const char* scheme_name(FlowScheme s) {
  return s == FlowScheme::explicit_euler ? "explicit" : "semi-implicit";
}

struct StepInfo {
  double t = 0.0;
  double max_displacement = 0.0;
  double min_angle_deg = 180.0;
  double area = 0.0;
  bool interpolated = false;
};

// Time-ordered snapshots of one flow, immutable once produced.
struct FlowTrajectory {
  std::vector<double> times;
  std::vector<Mesh> snapshots;
  std::vector<StepInfo> metadata;  // parallel to snapshots
  std::string scheme;
  bool stopped_early = false;
  std::string stop_reason;

  void validate() const {
    if (times.size() != snapshots.size() || times.size() != metadata.size())
      throw invariant_error("trajectory arrays out of sync");
    if (times.empty()) throw invariant_error("trajectory has no snapshots");
    for (size_t k = 1; k < times.size(); ++k) {
      if (!(times[k] > times[k - 1]))
        throw invariant_error(cat("trajectory times not strictly increasing at index ", k));
      // area is non-increasing along the flow; small relative slack absorbs
      // the first-order integrator error
      if (metadata[k].area > metadata[k - 1].area * (1.0 + 1e-6))
        throw invariant_error(cat("area increased between snapshots ", k - 1, " and ", k, " (",
                                  metadata[k - 1].area, " -> ", metadata[k].area, ")"));
    }
  }
};

inline double min_triangle_angle_deg(const Mesh& mesh) {
  double worst = 180.0;
  for (const Tri& f : mesh.triangles) {
    for (int k = 0; k < 3; ++k) {
      const Vec3 u = mesh.vertices[f[(k + 1) % 3]] - mesh.vertices[f[k]];
      const Vec3 v = mesh.vertices[f[(k + 2) % 3]] - mesh.vertices[f[k]];
      const double ang = std::atan2(u.cross(v).norm(), u.dot(v)) * 180.0 / kPi;
      worst = std::min(worst, ang);
    }
  }
  return worst;
}

// Largest stable explicit step: c (min edge)^2 / max_i |H_i| max incident edge.
inline double flow_timestep_bound(const Mesh& mesh, const DifferentialQuantities& dq,
                                  double cfl_factor = 0.25) {
  const double min_e = mesh.min_edge_length();
  double worst = 0.0;
  auto visit = [&](int i, int j) {
    const double len = (mesh.vertices[i] - mesh.vertices[j]).norm();
    worst = std::max(worst, std::abs(dq.mean_curvature[i]) * len);
    worst = std::max(worst, std::abs(dq.mean_curvature[j]) * len);
  };
  if (mesh.is_curve()) {
    for (const Seg& s : mesh.segments) visit(s[0], s[1]);
  } else {
    for (const Tri& f : mesh.triangles)
      for (int k = 0; k < 3; ++k) visit(f[k], f[(k + 1) % 3]);
  }
  if (!(worst > 0.0)) return kInf;
  return cfl_factor * min_e * min_e / worst;
}

using SparseMat = Eigen::SparseMatrix<double>;

// P1 cotangent stiffness; S x accumulates sum_j w_ij (x_i - x_j), which is the
// area-weighted (outward) curvature vector in this codebase's convention.
inline SparseMat cotan_stiffness(const Mesh& mesh) {
  const int nv = (int)mesh.vertices.size();
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(mesh.triangles.size() * 12);
  for (const Tri& f : mesh.triangles) {
    for (int k = 0; k < 3; ++k) {
      const int i = f[k], j = f[(k + 1) % 3], o = f[(k + 2) % 3];
      const double w = 0.5 * detail::cot(mesh.vertices[i] - mesh.vertices[o],
                                         mesh.vertices[j] - mesh.vertices[o]);
      trip.emplace_back(i, i, w);
      trip.emplace_back(j, j, w);
      trip.emplace_back(i, j, -w);
      trip.emplace_back(j, i, -w);
    }
  }
  SparseMat s(nv, nv);
  s.setFromTriplets(trip.begin(), trip.end());
  return s;
}

struct EvolveOptions {
  FlowScheme scheme = FlowScheme::explicit_euler;
  double cfl_factor = 0.25;
  int snapshot_every = 1;       // keep every k-th step (first and last always)
  double min_angle_deg = 1.0;   // quality floor, stop early below it
  double area_floor_rel = 1e-6; // numerical extinction threshold
  bool tangential_smoothing = false;
};

namespace detail {

inline void tangential_smooth(Mesh& mesh, const DifferentialQuantities& dq, double strength) {
  const int nv = (int)mesh.vertices.size();
  std::vector<Vec3> centroid(nv, Vec3::Zero());
  std::vector<int> degree(nv, 0);
  auto visit = [&](int i, int j) {
    centroid[i] += mesh.vertices[j];
    ++degree[i];
  };
  for (const Tri& f : mesh.triangles)
    for (int k = 0; k < 3; ++k) {
      visit(f[k], f[(k + 1) % 3]);
      visit(f[k], f[(k + 2) % 3]);
    }
  for (const Seg& s : mesh.segments) {
    visit(s[0], s[1]);
    visit(s[1], s[0]);
  }
  for (int i = 0; i < nv; ++i) {
    if (degree[i] == 0) continue;
    const Vec3 pull = centroid[i] / (double)degree[i] - mesh.vertices[i];
    const Vec3 n = dq.normal[i];
    mesh.vertices[i] += strength * (pull - pull.dot(n) * n);
  }
}

}  // namespace detail

// Mean curvature flow dx/dt = -H n by explicit Euler (default, CFL-guarded)
// or backward Euler with the cotangent operator frozen per step.  Stops early
// and reports when mesh quality collapses or the surface numerically
// vanishes; never continues silently past either.
inline FlowTrajectory evolve(const Mesh& input, double dt, int n_steps,
                             const EvolveOptions& opt = {}) {
  if (!(dt > 0.0)) throw invariant_error(cat("flow timestep must be positive, got ", dt));
  if (n_steps < 0) throw invariant_error("flow step count must be non-negative");
  require_valid(input);
  if (input.is_curve() && opt.scheme == FlowScheme::semi_implicit)
    throw invariant_error("semi-implicit scheme is only wired for surface meshes");

  DifferentialQuantities dq = differential_quantities(input);
  if (opt.scheme == FlowScheme::explicit_euler) {
    const double bound = flow_timestep_bound(input, dq, opt.cfl_factor);
    if (!(dt <= bound))
      throw guard_error(cat("timestep ", dt, " violates the stability bound ", bound,
                            "; suggested dt <= ", bound));
  }

  FlowTrajectory traj;
  traj.scheme = scheme_name(opt.scheme);
  if (opt.tangential_smoothing) traj.scheme += "+tangential-smoothing";
  const double area0 = input.total_measure();
  traj.times.push_back(0.0);
  traj.snapshots.push_back(input);
  traj.metadata.push_back({0.0, 0.0, min_triangle_angle_deg(input), area0, false});

  Mesh mesh = input;
  const int keep = std::max(1, opt.snapshot_every);
  for (int step = 1; step <= n_steps; ++step) {
    double max_disp = 0.0;
    if (opt.scheme == FlowScheme::explicit_euler) {
      for (int i = 0; i < (int)mesh.vertices.size(); ++i) {
        const Vec3 d = dt * dq.curvature_vector[i];
        max_disp = std::max(max_disp, d.norm());
        mesh.vertices[i] -= d;
      }
    } else {
      const int nv = (int)mesh.vertices.size();
      SparseMat sys = cotan_stiffness(mesh) * dt;
      for (int i = 0; i < nv; ++i) sys.coeffRef(i, i) += dq.vertex_weight[i];
      sys.makeCompressed();
      Eigen::SimplicialLDLT<SparseMat> solver(sys);
      if (solver.info() != Eigen::Success)
        throw invariant_error("semi-implicit system factorization failed");
      Eigen::MatrixXd rhs(nv, 3);
      for (int i = 0; i < nv; ++i) rhs.row(i) = dq.vertex_weight[i] * mesh.vertices[i].transpose();
      const Eigen::MatrixXd sol = solver.solve(rhs);
      for (int i = 0; i < nv; ++i) {
        const Vec3 next = sol.row(i).transpose();
        max_disp = std::max(max_disp, (next - mesh.vertices[i]).norm());
        mesh.vertices[i] = next;
      }
    }
    if (opt.tangential_smoothing) detail::tangential_smooth(mesh, dq, 0.5);

    dq = differential_quantities(mesh);
    const double t = dt * (double)step;
    const double area = mesh.total_measure();
    const double quality = min_triangle_angle_deg(mesh);

    std::string stop;
    if (!mesh.is_curve() && quality < opt.min_angle_deg)
      stop = cat("mesh quality collapsed at step ", step, " (min angle ", quality, " deg)");
    else if (area < opt.area_floor_rel * area0)
      stop = cat("numerical extinction at step ", step, " (area ", area, ")");
    else if (mesh.diameter() < 10.0 * mesh.min_edge_length())
      stop = cat("numerical extinction at step ", step, " (diameter below resolution)");
    else if (opt.scheme == FlowScheme::explicit_euler) {
      const double bound = flow_timestep_bound(mesh, dq, opt.cfl_factor);
      if (!(dt <= bound))
        stop = cat("timestep ", dt, " exceeds the stability bound ", bound, " at step ", step,
                   "; suggested dt <= ", bound);
    }

    if (!stop.empty() || step == n_steps || step % keep == 0) {
      traj.times.push_back(t);
      traj.snapshots.push_back(mesh);
      traj.metadata.push_back({t, max_disp, quality, area, false});
    }
    if (!stop.empty()) {
      traj.stopped_early = true;
      traj.stop_reason = stop;
      break;
    }
  }
  traj.validate();
  return traj;
}

// Closed-form round self-similar flow R(t) = sqrt(R0^2 - 2 n t); an icosphere
// (n=2) or regular polygon (n=1) scaled exactly, so all snapshots are similar
// copies of one tessellation.
inline FlowTrajectory analytic_shrinking_sphere(double r0, int n_dim,
                                                const std::vector<double>& times,
                                                int resolution = 4) {
  if (!(r0 > 0.0)) throw invariant_error("analytic sphere needs R0 > 0");
  if (n_dim != 1 && n_dim != 2) throw invariant_error("analytic sphere supports n = 1 or 2");
  if (times.empty()) throw invariant_error("analytic sphere needs at least one sample time");
  const double extinction = r0 * r0 / (2.0 * (double)n_dim);
  const Mesh unit = n_dim == 2 ? make_icosphere(1.0, resolution)
                               : make_circle(1.0, std::max(resolution, 3));
  FlowTrajectory traj;
  traj.scheme = "analytic-sphere";
  for (size_t k = 0; k < times.size(); ++k) {
    const double t = times[k];
    if (k > 0 && !(t > times[k - 1]))
      throw invariant_error("analytic sphere times must be strictly increasing");
    const double rsq = r0 * r0 - 2.0 * (double)n_dim * t;
    if (!(rsq > 0.0))
      throw invariant_error(cat("time ", t, " is at or beyond the extinction time ", extinction));
    const double radius = std::sqrt(rsq);
    Mesh m = unit;
    for (Vec3& v : m.vertices) v *= radius;
    traj.times.push_back(t);
    traj.metadata.push_back({t, 0.0, min_triangle_angle_deg(m), m.total_measure(), false});
    traj.snapshots.push_back(std::move(m));
  }
  traj.validate();
  return traj;
}

struct RescalingParams {
  double alpha = 1.0;
  Vec3 y = Vec3::Zero();
  double s = 0.0;

  void validate() const {
    if (!(alpha > 0.0)) throw invariant_error(cat("rescaling factor must be positive, got ", alpha));
  }
};

namespace detail {

// Snapshot at an arbitrary time inside the trajectory range; linear in vertex
// positions between the two bracketing snapshots, flagged when not exact.
inline Mesh sample_snapshot(const FlowTrajectory& traj, double t, bool* interpolated) {
  const double span = std::max(traj.times.back() - traj.times.front(), 1e-300);
  if (t < traj.times.front() - 1e-9 * span || t > traj.times.back() + 1e-9 * span)
    throw invariant_error(cat("requested time ", t, " outside trajectory range [",
                              traj.times.front(), ", ", traj.times.back(), "]"));
  t = std::clamp(t, traj.times.front(), traj.times.back());
  const auto it = std::lower_bound(traj.times.begin(), traj.times.end(), t);
  const int hi = std::min<int>((int)(it - traj.times.begin()), (int)traj.times.size() - 1);
  if (std::abs(traj.times[hi] - t) <= 1e-12 * std::max(1.0, std::abs(t))) {
    if (interpolated) *interpolated = false;
    return traj.snapshots[hi];
  }
  const int lo = std::max(hi - 1, 0);
  if (std::abs(traj.times[lo] - t) <= 1e-12 * std::max(1.0, std::abs(t))) {
    if (interpolated) *interpolated = false;
    return traj.snapshots[lo];
  }
  if (traj.snapshots[lo].vertices.size() != traj.snapshots[hi].vertices.size())
    throw invariant_error("cannot interpolate between snapshots with different connectivity");
  const double u = (t - traj.times[lo]) / (traj.times[hi] - traj.times[lo]);
  Mesh m = traj.snapshots[lo];
  for (size_t v = 0; v < m.vertices.size(); ++v)
    m.vertices[v] = (1.0 - u) * traj.snapshots[lo].vertices[v] + u * traj.snapshots[hi].vertices[v];
  if (interpolated) *interpolated = true;
  return m;
}

}  // namespace detail

// Parabolic rescaling alpha (M_{s + alpha^-2 t} - y): times map to
// alpha^2 (t_orig - s).  With sample_times given, the listed rescaled times
// are extracted (interpolating where needed); otherwise every snapshot maps.
inline FlowTrajectory parabolic_rescale(const FlowTrajectory& traj, const RescalingParams& p,
                                        const std::vector<double>& sample_times = {}) {
  p.validate();
  traj.validate();
  const double a2 = p.alpha * p.alpha;
  FlowTrajectory out;
  out.scheme = traj.scheme + "+rescaled";
  out.stopped_early = traj.stopped_early;
  out.stop_reason = traj.stop_reason;
  if (sample_times.empty()) {
    for (size_t k = 0; k < traj.snapshots.size(); ++k) {
      Mesh m = transform_mesh(traj.snapshots[k], p.y, p.alpha);
      StepInfo info = traj.metadata[k];
      info.t = a2 * (traj.times[k] - p.s);
      info.area = m.total_measure();
      info.max_displacement *= p.alpha;
      out.times.push_back(info.t);
      out.metadata.push_back(info);
      out.snapshots.push_back(std::move(m));
    }
  } else {
    for (size_t k = 0; k < sample_times.size(); ++k) {
      const double t = sample_times[k];
      if (k > 0 && !(t > sample_times[k - 1]))
        throw invariant_error("rescaling sample times must be strictly increasing");
      bool interpolated = false;
      Mesh m = detail::sample_snapshot(traj, p.s + t / a2, &interpolated);
      m = transform_mesh(m, p.y, p.alpha);
      StepInfo info;
      info.t = t;
      info.area = m.total_measure();
      info.min_angle_deg = min_triangle_angle_deg(m);
      info.interpolated = interpolated;
      out.times.push_back(t);
      out.metadata.push_back(info);
      out.snapshots.push_back(std::move(m));
    }
  }
  out.validate();
  return out;
}

// Gaussian density sequence t -> F_{x0, t_ref - t}(M_t) toward the spacetime
// point (x0, t_ref); non-increasing along any mean curvature flow, constant
// exactly on the self-similar shrinking sphere.
struct MonotonicityReport {
  Vec3 x0 = Vec3::Zero();
  double t_ref = 0.0;
  std::vector<double> times;
  std::vector<double> values;
  std::vector<int> violations;  // indices k with values[k+1] > values[k] + tol
  double tolerance_factor = 1e-4;

  std::string to_csv() const {
    std::ostringstream os;
    os << "t,F\n";
    os.precision(17);
    for (size_t k = 0; k < times.size(); ++k) os << times[k] << "," << values[k] << "\n";
    return os.str();
  }
};

inline MonotonicityReport monotonicity_report(const FlowTrajectory& traj, const Vec3& x0,
                                              double t_ref, int quad_order = 2) {
  traj.validate();
  if (!(t_ref > traj.times.back()))
    throw invariant_error(cat("reference time ", t_ref,
                              " must lie beyond the trajectory (max time ", traj.times.back(),
                              ")"));
  MonotonicityReport rep;
  rep.x0 = x0;
  rep.t_ref = t_ref;
  for (size_t k = 0; k < traj.snapshots.size(); ++k) {
    rep.times.push_back(traj.times[k]);
    rep.values.push_back(
        f_functional(build_quad_cloud(traj.snapshots[k], quad_order), x0, t_ref - traj.times[k]));
  }
  for (size_t k = 0; k + 1 < rep.values.size(); ++k)
    if (rep.values[k + 1] > rep.values[k] + rep.tolerance_factor * std::abs(rep.values[k]))
      rep.violations.push_back((int)k);
  return rep;
}

// Local-entropy barrier: if the localized entropy of the slice at time
// T - alpha^-2 over scales [a alpha^-2, b alpha^-2] stays below the target,
// no tangent flow of entropy >= target can arise in the matched time window
// [T + (a-1) alpha^-2, T + (b-1) alpha^-2] (right end infinite with b).
struct BarrierCertificate {
  double a = 0.0, b = 0.0;     // unit-window parameters, 0 < a < 1 < b (b may be inf)
  double alpha = 1.0;
  ScaleWindow window;          // scales actually searched, [a,b] / alpha^2
  double value = 0.0;          // local entropy of the slice over `window`
  double target = 0.0;
  bool granted = false;
  double excluded_from = 0.0;  // time offsets relative to the reference time T
  double excluded_to = 0.0;
  std::string verdict;         // "excluded" or "inconclusive"
};

inline BarrierCertificate barrier_certificate(const WeightedMeasure& slice, double alpha, double a,
                                              double b, double lambda_target,
                                              const OptimizerOptions& opt = {}) {
  if (!(alpha > 0.0)) throw invariant_error("barrier rescaling factor must be positive");
  const bool infinite = !std::isfinite(b);
  if (!(0.0 < a && a < 1.0) || (!infinite && !(b > 1.0)))
    throw invariant_error(cat("barrier window needs 0 < a < 1 < b, got a = ", a, ", b = ", b));
  if (!(lambda_target > 1.0))
    throw invariant_error(cat("barrier target must exceed 1, got ", lambda_target));

  const double inv_a2 = 1.0 / (alpha * alpha);
  BarrierCertificate cert;
  cert.a = a;
  cert.b = b;
  cert.alpha = alpha;
  cert.window = {a * inv_a2, infinite ? kInf : b * inv_a2};
  cert.value = local_entropy(slice, cert.window, opt).value;
  cert.target = lambda_target;
  cert.granted = cert.value < lambda_target;
  cert.excluded_from = (a - 1.0) * inv_a2;
  cert.excluded_to = infinite ? kInf : (b - 1.0) * inv_a2;
  cert.verdict = cert.granted ? "excluded" : "inconclusive";
  return cert;
}

inline BarrierCertificate barrier_certificate(const Mesh& slice, double alpha, double a, double b,
                                              double lambda_target,
                                              const OptimizerOptions& opt = {}) {
  return barrier_certificate(WeightedMeasure::single(slice), alpha, a, b, lambda_target, opt);
}

// Largest inscribed ball of the enclosed region and the matching avoidance
// bound: the flow cannot reach a point before the ball's round flow does.
struct ExtinctionBound {
  double gamma = 0.0;  // inscribed ball radius
  double delta = 0.0;  // gamma^2 / (2 n)
  Vec3 center = Vec3::Zero();
};

inline ExtinctionBound extinction_lower_bound(const Mesh& mesh) {
  if (mesh.is_curve()) throw invariant_error("extinction bound requires a closed surface mesh");
  const MeshTopology topo = analyze_topology(mesh);
  if (!topo.manifold || !topo.closed)
    throw invariant_error(cat("extinction bound requires a closed manifold surface: ",
                              topo.issue));
  const TriGrid grid(mesh);
  auto inside = [&](const Vec3& p) { return std::abs(winding_number(p, mesh)) > 0.5; };
  auto clearance = [&](const Vec3& p) { return grid.nearest(p).distance; };

  const Box3 box = mesh.bounding_box();
  const Vec3 ext = box.extent();
  std::vector<std::pair<double, Vec3>> seeds;
  Vec3 centroid = Vec3::Zero();
  for (const Vec3& v : mesh.vertices) centroid += v;
  centroid /= (double)mesh.vertices.size();
  if (inside(centroid)) seeds.push_back({clearance(centroid), centroid});
  const int res = 11;
  for (int i = 0; i < res; ++i)
    for (int j = 0; j < res; ++j)
      for (int k = 0; k < res; ++k) {
        const Vec3 p = box.lo + Vec3(((double)i + 0.5) / res * ext[0],
                                     ((double)j + 0.5) / res * ext[1],
                                     ((double)k + 0.5) / res * ext[2]);
        if (inside(p)) seeds.push_back({clearance(p), p});
      }
  if (seeds.empty())
    throw invariant_error("surface encloses no sampled interior (degenerate input)");
  std::sort(seeds.begin(), seeds.end(), [](const auto& l, const auto& r) {
    if (l.first != r.first) return l.first > r.first;
    return std::lexicographical_compare(r.second.data(), r.second.data() + 3, l.second.data(),
                                        l.second.data() + 3);
  });

  // pattern search from the best grid seeds
  ExtinctionBound best;
  const int tries = std::min<int>(3, (int)seeds.size());
  for (int s = 0; s < tries; ++s) {
    Vec3 p = seeds[s].second;
    double val = seeds[s].first;
    double step = ext.maxCoeff() / 8.0;
    while (step > 1e-7 * ext.maxCoeff()) {
      bool improved = false;
      for (int axis = 0; axis < 3 && !improved; ++axis)
        for (int dir = -1; dir <= 1 && !improved; dir += 2) {
          Vec3 q = p;
          q[axis] += step * (double)dir;
          if (!inside(q)) continue;
          const double v = clearance(q);
          if (v > val) {
            val = v;
            p = q;
            improved = true;
          }
        }
      if (!improved) step *= 0.5;
    }
    if (val > best.gamma) {
      best.gamma = val;
      best.center = p;
    }
  }
  best.delta = best.gamma * best.gamma / 4.0;  // 2 n = 4 for surfaces
  return best;
}

}  // namespace mcflab
