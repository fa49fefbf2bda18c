#pragma once

#include "mcflab/layers.hpp"

namespace mcflab {

// Normal-collar isotopy bounds: the moving graph stays inside the half-width
// beta1 slab, the ambient deformation inside beta2.  The collar profile is
// the fixed ramp scaled to equal 1 at 0 and vanish beyond |s| = beta2; its
// derivative bound is measured on a sample grid, never assumed.
struct IsotopyParams {
  double beta1 = 0.05;
  double beta2 = 0.2;

  void validate() const {
    if (!(0.0 < beta1 && beta1 < beta2))
      throw invariant_error(cat("isotopy bounds need 0 < beta1 < beta2, got ", beta1, ", ",
                                beta2));
  }

  double profile(double s) const { return bump_profile(2.0 * s / beta2); }
  double profile_deriv(double s) const {
    return bump_profile_deriv(2.0 * s / beta2) * (2.0 / beta2);
  }

  double measured_derivative_sup(int samples = 4001) const {
    double sup = 0.0;
    for (int k = 0; k < samples; ++k) {
      const double s = -beta2 + 2.0 * beta2 * (double)k / (double)(samples - 1);
      sup = std::max(sup, std::abs(profile_deriv(s)));
    }
    return sup;
  }
};

struct IsotopyResult {
  Mesh image;                // image of the s = 0 fiber, i.e. of the surface
  std::vector<double> s_grid;
  std::vector<std::vector<double>> fiber_image;  // per vertex: s -> s + t phi(s) f
  bool injective = true;
  double sup_dphi = 0.0;     // measured profile derivative bound
};

// Collar map h((x,s), t) = (x, s + t phi(s) f(x)) sampled on a fiber grid.
// Injectivity is a consequence of the derivative bound |Dphi| < 1/beta1
// together with t ||f|| <= beta1; both are enforced, and monotonicity along
// every sampled fiber is still checked explicitly.
inline IsotopyResult graph_isotopy(const Mesh& mesh, const PerturbationField& f, double t,
                                   const IsotopyParams& params, int fiber_samples = 21,
                                   const DifferentialQuantities* dq = nullptr) {
  params.validate();
  f.validate(mesh);
  if (!(t >= 0.0 && t <= 1.0))
    throw invariant_error(cat("isotopy time must lie in [0,1], got ", t));

  IsotopyResult out;
  out.sup_dphi = params.measured_derivative_sup();
  const double fmax = f.sup_norm();
  if (!(out.sup_dphi < 1.0 / params.beta1))
    throw guard_error(cat("profile derivative bound violated: sup|Dphi| = ", out.sup_dphi,
                          " >= 1/beta1 = ", 1.0 / params.beta1, "; sup|Dphi| * ||f|| = ",
                          out.sup_dphi * fmax));
  if (t * fmax > params.beta1 * (1.0 + 1e-12))
    throw guard_error(cat("graph offset t ||f|| = ", t * fmax,
                          " exceeds the collar half-width beta1 = ", params.beta1));
  if (t * fmax > (params.beta2 - params.beta1) * (1.0 + 1e-12))
    throw guard_error(cat("graph offset t ||f|| = ", t * fmax, " exceeds beta2 - beta1 = ",
                          params.beta2 - params.beta1));

  out.s_grid.resize(fiber_samples);
  for (int k = 0; k < fiber_samples; ++k)
    out.s_grid[k] = -params.beta2 +
                    2.0 * params.beta2 * (double)k / (double)(fiber_samples - 1);
  out.fiber_image.resize(mesh.vertices.size());
  for (size_t v = 0; v < mesh.vertices.size(); ++v) {
    std::vector<double>& fiber = out.fiber_image[v];
    fiber.resize(fiber_samples);
    for (int k = 0; k < fiber_samples; ++k) {
      const double s = out.s_grid[k];
      fiber[k] = s + t * params.profile(s) * f.values[v];
      if (k > 0 && !(fiber[k] > fiber[k - 1])) out.injective = false;
    }
  }

  // phi(0) = 1 exactly, so the s = 0 fiber image coincides bitwise with the
  // plain normal graph at height t f
  out.image = build_normal_graph(mesh, f, t * params.profile(0.0), dq);
  return out;
}

// Replace the height-ordered top layer by its isotopy image; every other
// layer (and every excluded vertex) keeps its bits.  eps = 0 returns the
// source mesh unchanged.
inline Mesh perturb_top_layer(const LayerReport& report, const PerturbationField& f_localized,
                              double eps, const IsotopyParams& params) {
  params.validate();
  if (report.multiplicity < 2)
    throw invariant_error(cat("top-layer perturbation needs multiplicity >= 2, got ",
                              report.multiplicity));
  f_localized.validate(report.reference);
  if (!(eps >= 0.0)) throw invariant_error("perturbation size must be non-negative");

  for (const ConcentrationPoint& e : report.exclusions)
    for (size_t v = 0; v < report.reference.vertices.size(); ++v)
      if ((report.reference.vertices[v] - e.point).norm() <= e.radius &&
          std::abs(f_localized.values[v]) > 1e-12)
        throw invariant_error(cat("localized field does not vanish inside the exclusion ball at (",
                                  e.point[0], ", ", e.point[1], ", ", e.point[2],
                                  "): vertex ", v, " carries ", f_localized.values[v]));

  const double sup_dphi = params.measured_derivative_sup();
  const double fmax = f_localized.sup_norm();
  if (!(sup_dphi < 1.0 / params.beta1))
    throw guard_error(cat("profile derivative bound violated: sup|Dphi| = ", sup_dphi,
                          " >= 1/beta1 = ", 1.0 / params.beta1));
  if (eps * fmax > std::min(params.beta1, params.beta2 - params.beta1) * (1.0 + 1e-12))
    throw guard_error(cat("perturbation height eps ||f|| = ", eps * fmax,
                          " does not fit the collar (beta1 = ", params.beta1, ", beta2 - beta1 = ",
                          params.beta2 - params.beta1, ")"));

  Mesh out = report.source;
  const Layer& top = report.top();
  double max_move = 0.0;
  for (int src : top.source_vertices) {
    const HeightSample& h = report.samples[src];
    if (h.triangle < 0) continue;
    const Tri& tri = report.reference.triangles[h.triangle];
    const double f_cp = h.bary[0] * f_localized.values[tri[0]] +
                        h.bary[1] * f_localized.values[tri[1]] +
                        h.bary[2] * f_localized.values[tri[2]];
    const Vec3 n = report.reference.triangle_normal(h.triangle).normalized();
    const Vec3 move = (eps * (params.profile(h.height) * f_cp)) * n;
    max_move = std::max(max_move, move.norm());
    out.vertices[src] += move;
  }

  if (max_move > 0.0) {
    std::pair<int, int> pair;
    if (!check_embedded(out, &pair))
      throw guard_error(cat("perturbed union self-intersects (triangles ", pair.first, " and ",
                            pair.second, ")"));
  }
  return out;
}

}  // namespace mcflab
