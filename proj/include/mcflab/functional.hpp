#pragma once

#include "mcflab/quadrature.hpp"

namespace mcflab {

// Gaussian area functional centered at (x0, t0), t0 > 0:
//   F(mu) = (4 pi t0)^(-n/2) * integral of exp(-|x - x0|^2 / (4 t0)) d mu.
// Evaluated by fixed-order quadrature over the mesh.  For a multiplicity-m
// component the value scales exactly by m (weights are linear in m).
inline double f_functional(const QuadCloud& cloud, const Vec3& x0, double t0) {
  if (!(t0 > 0.0)) throw invariant_error(cat("f_functional needs t0 > 0, got ", t0));
  const double inv4t = 1.0 / (4.0 * t0);
  const double pref = std::pow(4.0 * kPi * t0, -0.5 * (double)cloud.dim);
  double sum = 0.0;
  for (size_t q = 0; q < cloud.points.size(); ++q)
    sum += cloud.weights[q] * std::exp(-(cloud.points[q] - x0).squaredNorm() * inv4t);
  return pref * sum;
}

inline double f_functional(const WeightedMeasure& mu, const Vec3& x0, double t0,
                           int quad_order = 3) {
  return f_functional(build_quad_cloud(mu, quad_order), x0, t0);
}

inline double f_functional(const Mesh& mesh, const Vec3& x0, double t0, int quad_order = 3) {
  return f_functional(build_quad_cloud(mesh, quad_order), x0, t0);
}

struct FGradient {
  double value = 0.0;
  Vec3 dx0 = Vec3::Zero();
  double dt0 = 0.0;
};

// Analytic center-and-scale derivatives of the quadrature approximation
// (exact derivatives of the discrete sum, not discretized derivatives).
inline FGradient f_gradient(const QuadCloud& cloud, const Vec3& x0, double t0) {
  if (!(t0 > 0.0)) throw invariant_error(cat("f_gradient needs t0 > 0, got ", t0));
  const double n = (double)cloud.dim;
  const double inv4t = 1.0 / (4.0 * t0);
  const double pref = std::pow(4.0 * kPi * t0, -0.5 * n);
  double sum = 0.0, tsum = 0.0;
  Vec3 xsum = Vec3::Zero();
  for (size_t q = 0; q < cloud.points.size(); ++q) {
    const Vec3 d = cloud.points[q] - x0;
    const double r2 = d.squaredNorm();
    const double e = cloud.weights[q] * std::exp(-r2 * inv4t);
    sum += e;
    xsum += e * d;
    tsum += e * r2;
  }
  FGradient g;
  g.value = pref * sum;
  g.dx0 = pref * xsum / (2.0 * t0);
  g.dt0 = pref * (tsum / (4.0 * t0 * t0) - sum * n / (2.0 * t0));
  return g;
}

inline FGradient f_gradient(const WeightedMeasure& mu, const Vec3& x0, double t0,
                            int quad_order = 3) {
  return f_gradient(build_quad_cloud(mu, quad_order), x0, t0);
}

// Closed forms for round fixtures, used as oracles and for analytic flows.
// Sphere of radius R in R^3 (n = 2):  F = (R^2/t0) exp(-R^2/(4 t0)), maximal
// value 4/e at t0 = R^2/4.  Circle of radius R (n = 1):
// F = R sqrt(pi/t0) exp(-R^2/(4 t0)), maximal value sqrt(2 pi / e) at
// t0 = R^2/2.
inline double f_sphere_exact(double radius, double t0) {
  return radius * radius / t0 * std::exp(-radius * radius / (4.0 * t0));
}

inline double f_circle_exact(double radius, double t0) {
  return radius * std::sqrt(kPi / t0) * std::exp(-radius * radius / (4.0 * t0));
}

}  // namespace mcflab
