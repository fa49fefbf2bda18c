#pragma once

#include <algorithm>

#include "mcflab/functional.hpp"

namespace mcflab {

// Closed scale window [a, b] for local entropy; b may be infinite.
struct ScaleWindow {
  double a = 0.0;
  double b = kInf;

  static ScaleWindow all() { return {0.0, kInf}; }
  bool infinite() const { return !std::isfinite(b); }
  bool global() const { return a <= 0.0 && infinite(); }

  void validate() const {
    if (global()) return;
    if (!(a > 0.0) || !(b >= a))
      throw invariant_error(cat("scale window needs 0 < a <= b, got [", a, ", ", b, "]"));
  }
};

struct OptimizerOptions {
  int starts = 32;        // ascent starts taken from the seed grid
  int max_iters = 200;    // per start
  int t_grid = 10;        // log-spaced scale seeds
  int x_subsample = 32;   // vertex seeds (stride-sampled)
  int quad_order = 3;
  double rel_tol = 1e-13;
};

// Argmax certificate for sup F over centers and window scales.
struct EntropyWitness {
  double value = 0.0;
  Vec3 x0 = Vec3::Zero();
  double t0 = 0.0;
  ScaleWindow window;          // requested window ([0,inf) for global entropy)
  double t_lo = 0.0, t_hi = 0.0;  // effective scale bounds searched
  int starts = 0;
  long iterations = 0;
  double grad_norm = 0.0;      // |scaled gradient| at the reported optimum
};

inline Mesh transform_mesh(const Mesh& mesh, const Vec3& y, double alpha) {
  if (!(alpha > 0.0)) throw invariant_error("rescaling factor must be positive");
  Mesh out = mesh;
  for (Vec3& v : out.vertices) v = alpha * (v - y);
  return out;
}

inline WeightedMeasure transform_measure(const WeightedMeasure& mu, const Vec3& y, double alpha) {
  WeightedMeasure out = mu;
  for (WeightedComponent& c : out.components) c.mesh = transform_mesh(c.mesh, y, alpha);
  return out;
}

namespace detail {

struct Seed {
  double value;
  double t;
  Vec3 x;
};

inline bool seed_less(const Seed& p, const Seed& q) {
  if (p.value != q.value) return p.value > q.value;  // larger value first
  if (p.t != q.t) return p.t < q.t;
  for (int k = 0; k < 3; ++k)
    if (p.x[k] != q.x[k]) return p.x[k] < q.x[k];
  return false;
}

// Projected gradient ascent in (x0, log t0) with steps scaled by the natural
// Gaussian length sqrt(t); finishes with guarded Newton steps on the analytic
// gradient so witnesses sit at machine-accurate critical points.
inline Seed ascend(const QuadCloud& cloud, Seed seed, double t_lo, double t_hi,
                   const Box3& xbox, const OptimizerOptions& opt, long& iterations) {
  const double u_lo = std::log(t_lo), u_hi = std::log(t_hi);
  double u = std::min(std::max(std::log(seed.t), u_lo), u_hi);
  Vec3 x = xbox.clamp(seed.x);
  FGradient g = f_gradient(cloud, x, std::exp(u));
  double eta = 0.5;
  int flat_steps = 0;

  for (int it = 0; it < opt.max_iters && flat_steps < 2; ++it) {
    const double t = std::exp(u);
    const double scale = 2.0 * t / std::max(g.value, 1e-300);
    const Vec3 dx = scale * g.dx0;
    const double du = scale * g.dt0;  // dF/du = t dF/dt, scaled by 2/F
    bool accepted = false;
    for (int bt = 0; bt < 45; ++bt) {
      const Vec3 xn = xbox.clamp(x + eta * dx);
      const double un = std::min(std::max(u + eta * du, u_lo), u_hi);
      const FGradient gn = f_gradient(cloud, xn, std::exp(un));
      ++iterations;
      if (gn.value > g.value) {
        if (gn.value < g.value * (1.0 + opt.rel_tol))
          ++flat_steps;
        else
          flat_steps = 0;
        x = xn;
        u = un;
        g = gn;
        eta = std::min(eta * 1.4, 2.0);
        accepted = true;
        break;
      }
      eta *= 0.5;
    }
    if (!accepted) break;  // no uphill step at the smallest trial size
  }

  // Newton polish on (x, u) with a finite-difference Hessian of the analytic
  // gradient; accepted only while the value increases.
  for (int round = 0; round < 8; ++round) {
    const double t = std::exp(u);
    Eigen::Vector4d grad;
    grad << g.dx0[0], g.dx0[1], g.dx0[2], t * g.dt0;
    const double hx = 1e-5 * std::sqrt(t), hu = 1e-5;
    Eigen::Matrix4d hess;
    for (int k = 0; k < 4; ++k) {
      Vec3 xp = x, xm = x;
      double up = u, um = u;
      if (k < 3) {
        xp[k] += hx;
        xm[k] -= hx;
      } else {
        up += hu;
        um -= hu;
      }
      const FGradient gp = f_gradient(cloud, xp, std::exp(up));
      const FGradient gm = f_gradient(cloud, xm, std::exp(um));
      iterations += 2;
      const double h2 = k < 3 ? 2.0 * hx : 2.0 * hu;
      hess.col(k) << (gp.dx0[0] - gm.dx0[0]) / h2, (gp.dx0[1] - gm.dx0[1]) / h2,
          (gp.dx0[2] - gm.dx0[2]) / h2,
          (std::exp(up) * gp.dt0 - std::exp(um) * gm.dt0) / h2;
    }
    hess = 0.5 * (hess + hess.transpose()).eval();
    const Eigen::Vector4d step = hess.fullPivLu().solve(-grad);
    if (!step.allFinite()) break;
    const Vec3 xn = xbox.clamp(x + Vec3(step[0], step[1], step[2]));
    const double un = std::min(std::max(u + step[3], u_lo), u_hi);
    const FGradient gn = f_gradient(cloud, xn, std::exp(un));
    ++iterations;
    // accept fp-flat steps: near the optimum the value saturates while the
    // gradient still contracts quadratically
    if (gn.value < g.value * (1.0 - 4e-15)) break;
    const bool tiny = step.norm() < 1e-12 * (1.0 + std::sqrt(t));
    x = xn;
    u = un;
    g = gn;
    if (tiny) break;
  }

  Seed out;
  out.value = g.value;
  out.t = std::exp(u);
  out.x = x;
  return out;
}

struct OptimizerRun {
  Seed best;
  double t_lo = 0.0, t_hi = 0.0;
  int starts = 0;
  long iterations = 0;
  double grad_norm = 0.0;
};

inline OptimizerRun optimize_f(const QuadCloud& cloud, const std::vector<Vec3>& x_seeds,
                               const ScaleWindow& window, const OptimizerOptions& opt) {
  // effective scale bounds: never search below the mesh resolution scale
  const double mesh_floor = cloud.min_edge * cloud.min_edge;
  double t_lo = window.global() ? mesh_floor : std::max(window.a, mesh_floor);
  const double diam = std::max(cloud.support_box.diagonal(), cloud.min_edge);
  double t_hi_user = window.infinite() ? kInf : window.b;
  double t_hi0 = std::min(std::max(diam * diam, 4.0 * t_lo), t_hi_user);
  t_lo = std::min(t_lo, t_hi0);

  std::vector<double> ts;
  const int nt = std::max(2, opt.t_grid);
  if (t_hi0 > t_lo)
    for (int k = 0; k < nt; ++k)
      ts.push_back(std::exp(std::log(t_lo) + (std::log(t_hi0) - std::log(t_lo)) *
                                                 (double)k / (double)(nt - 1)));
  else
    ts.push_back(t_lo);

  std::vector<Seed> seeds;
  OptimizerRun run;
  auto eval_grid = [&](double t) {
    for (const Vec3& x : x_seeds) {
      seeds.push_back({f_functional(cloud, x, t), t, x});
      ++run.iterations;
    }
  };
  for (double t : ts) eval_grid(t);

  double floor_value = 0.0;
  for (const Seed& s : seeds) floor_value = std::max(floor_value, s.value);
  // mass bound: F(x, t) <= W / (4 pi t)^(n/2), so scales beyond t_cap cannot
  // improve on the best grid value
  const double n = (double)cloud.dim;
  const double t_cap = std::pow(
      cloud.total_weight / (std::pow(4.0 * kPi, 0.5 * n) * std::max(floor_value, 1e-300)),
      2.0 / n);
  double t_hi = std::min(t_hi_user, std::max(t_cap, t_lo));
  if (t_hi > t_hi0 * 1.0000001) {
    for (int k = 1; k <= 4; ++k)
      eval_grid(std::exp(std::log(t_hi0) + (std::log(t_hi) - std::log(t_hi0)) * (double)k / 4.0));
  } else {
    t_hi = std::min(t_hi, t_hi0);
  }

  std::sort(seeds.begin(), seeds.end(), seed_less);
  const int n_starts = std::min<int>(opt.starts, (int)seeds.size());

  run.t_lo = t_lo;
  run.t_hi = t_hi;
  run.starts = n_starts;
  run.best = seeds.front();
  bool have = false;
  for (int s = 0; s < n_starts; ++s) {
    const Seed candidate = ascend(cloud, seeds[s], t_lo, t_hi, cloud.support_box, opt,
                                  run.iterations);
    if (!have || seed_less(candidate, run.best)) {
      run.best = candidate;
      have = true;
    }
  }
  const FGradient g = f_gradient(cloud, run.best.x, run.best.t);
  const double scale = 2.0 * run.best.t / std::max(g.value, 1e-300);
  run.grad_norm = std::sqrt((scale * g.dx0).squaredNorm() + std::pow(scale * g.dt0, 2));
  return run;
}

inline std::vector<Vec3> gather_x_seeds(const WeightedMeasure& mu, const QuadCloud& cloud,
                                        int budget) {
  std::vector<Vec3> xs;
  // weighted centroid of the support
  Vec3 centroid = Vec3::Zero();
  for (size_t q = 0; q < cloud.points.size(); ++q) centroid += cloud.weights[q] * cloud.points[q];
  xs.push_back(centroid / cloud.total_weight);

  long total_vertices = 0;
  for (const WeightedComponent& c : mu.components) total_vertices += (long)c.mesh.vertices.size();
  const long stride = std::max<long>(1, total_vertices / std::max(budget, 1));
  long counter = 0;
  for (const WeightedComponent& c : mu.components)
    for (const Vec3& v : c.mesh.vertices) {
      if (counter % stride == 0) xs.push_back(v);
      ++counter;
    }
  return xs;
}

}  // namespace detail

// sup of F over all centers and window scales, with the argmax witness.
// Components with bitwise-identical geometry are merged first, so the
// entropy of m copies of a surface is exactly m times the entropy of one.
inline EntropyWitness local_entropy(const WeightedMeasure& mu_in, const ScaleWindow& window,
                                    const OptimizerOptions& opt = {}) {
  window.validate();
  const WeightedMeasure mu = mu_in.canonicalized();
  mu.validate();

  double factor = 1.0;
  WeightedMeasure work = mu;
  if (mu.components.size() == 1 && mu.components.front().multiplicity > 1) {
    factor = (double)mu.components.front().multiplicity;
    work.components.front().multiplicity = 1;
  }

  const QuadCloud cloud = build_quad_cloud(work, opt.quad_order);
  const std::vector<Vec3> xs = detail::gather_x_seeds(work, cloud, opt.x_subsample);
  const detail::OptimizerRun run = detail::optimize_f(cloud, xs, window, opt);

  EntropyWitness w;
  // re-evaluate so the reported value matches f_functional at the witness
  w.value = factor * f_functional(cloud, run.best.x, run.best.t);
  w.x0 = run.best.x;
  w.t0 = run.best.t;
  w.window = window;
  w.t_lo = run.t_lo;
  w.t_hi = run.t_hi;
  w.starts = run.starts;
  w.iterations = run.iterations;
  w.grad_norm = run.grad_norm;
  return w;
}

inline EntropyWitness entropy(const WeightedMeasure& mu, const OptimizerOptions& opt = {}) {
  return local_entropy(mu, ScaleWindow::all(), opt);
}

inline EntropyWitness entropy(const Mesh& mesh, const OptimizerOptions& opt = {}) {
  return entropy(WeightedMeasure::single(mesh), opt);
}

inline EntropyWitness local_entropy(const Mesh& mesh, const ScaleWindow& window,
                                    const OptimizerOptions& opt = {}) {
  return local_entropy(WeightedMeasure::single(mesh), window, opt);
}

// Defect of the rescaling identity: local entropy of alpha * (mu - y) over
// [a, b] must match local entropy of mu over [a, b] / alpha^2.
struct RescalingCheck {
  double lhs = 0.0, rhs = 0.0;
  double defect = 0.0;  // relative
  EntropyWitness lhs_witness, rhs_witness;
};

inline RescalingCheck rescaled_local_entropy_check(const WeightedMeasure& mu, const Vec3& y,
                                                   double alpha, const ScaleWindow& window,
                                                   const OptimizerOptions& opt = {}) {
  window.validate();
  if (window.global() || window.infinite())
    throw invariant_error("rescaling check needs a finite scale window");
  const double inv2 = 1.0 / (alpha * alpha);
  const RescalingCheck out = [&] {
    RescalingCheck c;
    c.lhs_witness = local_entropy(transform_measure(mu, y, alpha), window, opt);
    c.rhs_witness = local_entropy(mu, ScaleWindow{window.a * inv2, window.b * inv2}, opt);
    c.lhs = c.lhs_witness.value;
    c.rhs = c.rhs_witness.value;
    c.defect = std::abs(c.lhs - c.rhs) / std::max({std::abs(c.lhs), std::abs(c.rhs), 1e-300});
    return c;
  }();
  return out;
}

// sup over surface points x and radii r of mu(B_r(x)) / r^n.  Centers are the
// mesh vertices and face centroids (stride-sampled), radii a log grid between
// the mesh scale and the support diameter.
struct VolumeGrowthReport {
  double ratio = 0.0;
  Vec3 center = Vec3::Zero();
  double radius = 0.0;
};

inline VolumeGrowthReport volume_growth(const WeightedMeasure& mu, int center_budget = 512,
                                        int radii = 24) {
  mu.validate();
  const QuadCloud cloud = build_quad_cloud(mu, 2);

  std::vector<Vec3> centers;
  long total = 0;
  for (const WeightedComponent& c : mu.components)
    total += (long)c.mesh.vertices.size() +
             (long)(c.mesh.is_curve() ? c.mesh.segments.size() : c.mesh.triangles.size());
  const long stride = std::max<long>(1, total / std::max(center_budget, 1));
  long counter = 0;
  auto maybe_add = [&](const Vec3& p) {
    if (counter % stride == 0) centers.push_back(p);
    ++counter;
  };
  for (const WeightedComponent& c : mu.components) {
    for (const Vec3& v : c.mesh.vertices) maybe_add(v);
    if (c.mesh.is_curve())
      for (int s = 0; s < (int)c.mesh.segments.size(); ++s)
        maybe_add(0.5 * (c.mesh.vertices[c.mesh.segments[s][0]] +
                         c.mesh.vertices[c.mesh.segments[s][1]]));
    else
      for (int t = 0; t < (int)c.mesh.triangles.size(); ++t)
        maybe_add(c.mesh.triangle_centroid(t));
  }

  const double n = (double)cloud.dim;
  const double r_lo = 3.0 * mu.components.front().mesh.mean_edge_length();
  const double r_hi = std::max(1.2 * cloud.support_box.diagonal(), 2.0 * r_lo);

  // boundary-mollified ball masses: points within a halo of the sphere
  // |x - c| = r count fractionally, which removes the first-order counting
  // noise of the quadrature cloud
  std::vector<double> halo(cloud.points.size());
  for (size_t q = 0; q < cloud.points.size(); ++q)
    halo[q] = cloud.dim == 2 ? std::sqrt(cloud.unit_weights[q]) : cloud.unit_weights[q];

  VolumeGrowthReport best;
  std::vector<double> dist(cloud.points.size());
  for (const Vec3& x : centers) {
    for (size_t q = 0; q < cloud.points.size(); ++q)
      dist[q] = (cloud.points[q] - x).norm();
    for (int ri = 0; ri < radii; ++ri) {
      const double r = std::exp(std::log(r_lo) +
                                (std::log(r_hi) - std::log(r_lo)) * (double)ri /
                                    (double)(radii - 1));
      double mass = 0.0;
      for (size_t q = 0; q < cloud.points.size(); ++q) {
        const double s = (r - dist[q]) / halo[q] + 0.5;
        if (s >= 1.0)
          mass += cloud.weights[q];
        else if (s > 0.0)
          mass += s * cloud.weights[q];
      }
      const double ratio = mass / std::pow(r, n);
      if (ratio > best.ratio) {
        best.ratio = ratio;
        best.center = x;
        best.radius = r;
      }
    }
  }
  return best;
}

}  // namespace mcflab
