#include <catch2/catch_amalgamated.hpp>

#include "mcflab/functional.hpp"
#include "mcflab/shapes.hpp"

using namespace mcflab;

TEST_CASE("gaussian area of spheres matches the closed form") {
  // F(0, t0) for a radius-R sphere is (R^2/t0) exp(-R^2/(4 t0))
  const Mesh m = make_icosphere(2.0, 4);
  const QuadCloud cloud = build_quad_cloud(m);

  for (double t0 : {0.25, 0.5, 1.0, 2.0, 5.0}) {
    const double got = f_functional(cloud, Vec3::Zero(), t0);
    const double want = f_sphere_exact(2.0, t0);
    CHECK(got == Catch::Approx(want).epsilon(5e-3));
  }

  // the peak value 4/e at t0 = R^2/4
  CHECK(f_functional(cloud, Vec3::Zero(), 1.0) ==
        Catch::Approx(4.0 / std::exp(1.0)).epsilon(5e-3));

  // F -> 1 as t0 -> infinity is false; instead F ~ Area/(4 pi t0) -> 0
  CHECK(f_functional(cloud, Vec3::Zero(), 1e6) < 1e-4);
}

TEST_CASE("gaussian length of circles matches the closed form") {
  const double R = std::sqrt(2.0);
  const Mesh c = make_circle(R, 256);
  const QuadCloud cloud = build_quad_cloud(c);
  REQUIRE(cloud.dim == 1);

  for (double t0 : {0.5, 1.0, 2.0}) {
    CHECK(f_functional(cloud, Vec3::Zero(), t0) ==
          Catch::Approx(f_circle_exact(R, t0)).epsilon(2e-3));
  }
  // peak sqrt(2 pi / e) at t0 = R^2/2 = 1
  CHECK(f_functional(cloud, Vec3::Zero(), 1.0) ==
        Catch::Approx(std::sqrt(2.0 * kPi / std::exp(1.0))).epsilon(2e-3));
}

TEST_CASE("functional is translation equivariant and scales with multiplicity") {
  const Vec3 shift(0.7, -1.3, 2.1);
  const Mesh m = make_icosphere(1.0, 2);
  Mesh shifted = m;
  for (Vec3& v : shifted.vertices) v += shift;

  const double at_origin = f_functional(m, Vec3::Zero(), 0.8);
  const double at_shift = f_functional(shifted, shift, 0.8);
  CHECK(at_origin == Catch::Approx(at_shift).epsilon(1e-12));

  // integer multiplicity scales the measure weights linearly
  const double one = f_functional(WeightedMeasure::single(m, 1), Vec3::Zero(), 0.8);
  const double three = f_functional(WeightedMeasure::single(m, 3), Vec3::Zero(), 0.8);
  CHECK(three == Catch::Approx(3.0 * one).epsilon(1e-14));
}

TEST_CASE("quadrature order improves fidelity") {
  const Mesh m = make_icosphere(2.0, 2);
  const double want = f_sphere_exact(2.0, 0.7);
  const double err1 = std::abs(f_functional(m, Vec3::Zero(), 0.7, 1) - want);
  const double err3 = std::abs(f_functional(m, Vec3::Zero(), 0.7, 3) - want);
  // both rules see the same chordal geometry; the higher rule must not lose
  CHECK(err3 <= err1 * 1.5);
  const QuadCloud c1 = build_quad_cloud(m, 1), c6 = build_quad_cloud(m, 6);
  CHECK(c1.points.size() * 6 == c6.points.size());
  CHECK(c1.total_weight == Catch::Approx(c6.total_weight).epsilon(1e-13));
}

TEST_CASE("gradient matches central finite differences") {
  const Mesh m = make_icosphere(2.0, 3);
  const QuadCloud cloud = build_quad_cloud(m);
  const Vec3 x0(0.3, -0.2, 0.5);
  const double t0 = 0.9;

  const FGradient g = f_gradient(cloud, x0, t0);
  CHECK(g.value == Catch::Approx(f_functional(cloud, x0, t0)).epsilon(1e-15));

  const double ht = 1e-6 * t0;
  const double fd_t =
      (f_functional(cloud, x0, t0 + ht) - f_functional(cloud, x0, t0 - ht)) / (2.0 * ht);
  CHECK(g.dt0 == Catch::Approx(fd_t).epsilon(1e-7));

  for (int k = 0; k < 3; ++k) {
    Vec3 hp = x0, hm = x0;
    const double hx = 1e-6;
    hp[k] += hx;
    hm[k] -= hx;
    const double fd = (f_functional(cloud, hp, t0) - f_functional(cloud, hm, t0)) / (2.0 * hx);
    CHECK(g.dx0[k] == Catch::Approx(fd).margin(1e-9).epsilon(1e-7));
  }
}

TEST_CASE("spatial gradient vanishes at the symmetry center") {
  // the icosphere is centrally symmetric, so contributions cancel pairwise
  const Mesh m = make_icosphere(2.0, 4);
  const FGradient g = f_gradient(build_quad_cloud(m), Vec3::Zero(), 1.0);
  CHECK(g.dx0.norm() < 1e-10);
}

TEST_CASE("scale criticality sits within discretization error of t0 = 1") {
  // smooth shrinker sphere of radius 2: d/dt0 F(0, t0) = 0 exactly at t0 = 1.
  // the quadrature points sit slightly inside the sphere, so the discrete
  // critical scale shifts by O(h^2); locate it and compare.
  const Mesh m = make_icosphere(2.0, 4);
  const QuadCloud cloud = build_quad_cloud(m);

  const double drift = f_gradient(cloud, Vec3::Zero(), 1.0).dt0;
  CHECK(std::abs(drift) < 5e-3);  // bounded by discretization, not zero

  double t = 1.0;
  for (int it = 0; it < 60; ++it) {
    const double h = 1e-5;
    const double g = f_gradient(cloud, Vec3::Zero(), t).dt0;
    const double gp = f_gradient(cloud, Vec3::Zero(), t + h).dt0;
    const double slope = (gp - g) / h;
    const double step = -g / slope;
    t += step;
    if (std::abs(step) < 1e-14) break;
  }
  CHECK(std::abs(t - 1.0) < 0.01);
  CHECK(std::abs(f_gradient(cloud, Vec3::Zero(), t).dt0) < 1e-6);
}

TEST_CASE("t0 must be positive") {
  const Mesh m = make_icosphere(1.0, 1);
  CHECK_THROWS_AS(f_functional(m, Vec3::Zero(), 0.0), invariant_error);
  CHECK_THROWS_AS(f_functional(m, Vec3::Zero(), -1.0), invariant_error);
  CHECK_THROWS_AS(f_gradient(WeightedMeasure::single(m), Vec3::Zero(), -0.5), invariant_error);
}
