#include <catch2/catch_amalgamated.hpp>

#include "mcflab/shapes.hpp"
#include "mcflab/stability.hpp"

using namespace mcflab;

TEST_CASE("constant field is the radial mode on the shrinker sphere") {
  const Mesh sphere = make_icosphere(2.0, 3);
  const UnstableDirection dir = unstable_direction(sphere);
  CHECK(dir.sphere_shortcut);
  CHECK(dir.asphericity < 0.01);
  for (double v : dir.field.values) CHECK(v == 1.0);
  // L 1 = (|A|^2 + 1/2) 1 with |A|^2 = 1/2 on the radius-2 sphere
  CHECK(dir.eigenvalue == Catch::Approx(1.0).epsilon(0.02));
}

TEST_CASE("stability operator applied to constants reduces to the potential") {
  const Mesh sphere = make_icosphere(2.0, 3);
  const DifferentialQuantities dq = differential_quantities(sphere);
  const StabilityOperator op = build_stability_operator(sphere, dq);
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(op.size());
  // the weighted stiffness annihilates constants exactly (row sums vanish)
  CHECK((op.stiffness * ones).cwiseAbs().maxCoeff() < 1e-12);
  const Eigen::VectorXd l_one = op.apply(ones).cwiseQuotient(op.mass);
  double mean = l_one.sum() / (double)l_one.size();
  CHECK(mean == Catch::Approx(1.0).epsilon(0.01));
  CHECK((l_one.array() - 1.0).abs().maxCoeff() < 0.06);
}

TEST_CASE("sphere spectrum: radial mode 1, translation band 1/2") {
  const Mesh sphere = make_icosphere(2.0, 3);
  const StabilityOperator op =
      build_stability_operator(sphere, differential_quantities(sphere));
  const StabilitySpectrum spec = stability_spectrum(sphere, op, 4);
  REQUIRE(spec.eigenvalues.size() == 4);
  CHECK(spec.eigenvalues[0] == Catch::Approx(1.0).epsilon(0.02));
  // eigenvalue 1 - l(l+1)/R^2 with l = 1, R = 2, threefold degenerate
  for (int k = 1; k < 4; ++k)
    CHECK(spec.eigenvalues[k] == Catch::Approx(0.5).epsilon(0.05));
  CHECK(spec.top_residual < 1e-6);
  for (size_t k = 1; k < spec.eigenvalues.size(); ++k)
    CHECK(spec.eigenvalues[k] <= spec.eigenvalues[k - 1] + 1e-9);
}

TEST_CASE("slightly inflated sphere still takes the constant shortcut") {
  // radius 2.02 is not an exact shrinker but passes both gates
  const Mesh near = make_icosphere(2.02, 3);
  const UnstableDirection dir = unstable_direction(near);
  CHECK(dir.sphere_shortcut);
  CHECK(dir.shrinker_rel_residual < 0.05);
  for (double v : dir.field.values) CHECK(v == 1.0);
}

TEST_CASE("non-shrinkers are rejected before any eigenanalysis") {
  const Mesh ell = make_ellipsoid(Vec3(1.5, 2.0, 2.5), 2);
  CHECK_THROWS_WITH(unstable_direction(ell),
                    Catch::Matchers::ContainsSubstring("not a discrete shrinker"));
}

TEST_CASE("torus shrinker yields a positive most-unstable eigenfunction") {
  const Mesh torus = make_shrinker_torus(64, 96);
  const UnstableDirection dir = unstable_direction(torus);
  CHECK_FALSE(dir.sphere_shortcut);
  REQUIRE(dir.field.values.size() == torus.vertices.size());
  double lo = kInf, hi = 0.0;
  for (double v : dir.field.values) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  CHECK(lo > 0.0);
  CHECK(hi == Catch::Approx(1.0).epsilon(1e-12));
  CHECK(dir.eigenvalue > 0.5);

  const StabilityOperator op = build_stability_operator(torus, differential_quantities(torus));
  const StabilitySpectrum spec = stability_spectrum(torus, op, 1);
  CHECK(spec.top_residual < 1e-6);
}

TEST_CASE("unstable direction is deterministic") {
  const Mesh torus = make_shrinker_torus(48, 64);
  const UnstableDirection a = unstable_direction(torus);
  const UnstableDirection b = unstable_direction(torus);
  REQUIRE(a.field.values.size() == b.field.values.size());
  for (size_t i = 0; i < a.field.values.size(); ++i)
    CHECK(a.field.values[i] == b.field.values[i]);
  CHECK(a.eigenvalue == b.eigenvalue);
}
