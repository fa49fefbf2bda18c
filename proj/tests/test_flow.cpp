#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "mcflab/flow.hpp"
#include "mcflab/io.hpp"

using namespace mcflab;

namespace {

double mean_radius(const Mesh& m, const Vec3& c = Vec3::Zero()) {
  double sum = 0.0;
  for (const Vec3& v : m.vertices) sum += (v - c).norm();
  return sum / (double)m.vertices.size();
}

double max_radius_dev(const Mesh& m, double r, const Vec3& c = Vec3::Zero()) {
  double dev = 0.0;
  for (const Vec3& v : m.vertices) dev = std::max(dev, std::abs((v - c).norm() - r));
  return dev;
}

double asphericity(const Mesh& m) {
  Vec3 c = Vec3::Zero();
  double w = 0.0;
  for (int t = 0; t < (int)m.triangles.size(); ++t) {
    const double a = m.triangle_area(t);
    c += a * m.triangle_centroid(t);
    w += a;
  }
  c /= w;
  double lo = kInf, hi = 0.0, sum = 0.0;
  for (const Vec3& v : m.vertices) {
    const double r = (v - c).norm();
    lo = std::min(lo, r);
    hi = std::max(hi, r);
    sum += r;
  }
  return (hi - lo) / (sum / (double)m.vertices.size());
}

}  // namespace

TEST_CASE("analytic shrinking sphere matches the radius law") {
  const FlowTrajectory traj = analytic_shrinking_sphere(2.0, 2, {0.0, 0.25, 0.5, 0.75}, 3);
  REQUIRE(traj.snapshots.size() == 4);
  CHECK(mean_radius(traj.snapshots[0]) == Catch::Approx(2.0).epsilon(1e-12));
  CHECK(mean_radius(traj.snapshots[2]) == Catch::Approx(std::sqrt(2.0)).epsilon(1e-12));
  CHECK(mean_radius(traj.snapshots[3]) == Catch::Approx(1.0).epsilon(1e-12));
  // extinction time R0^2 / (2n) = 1 for R0 = 2, n = 2
  CHECK_THROWS_WITH(analytic_shrinking_sphere(2.0, 2, {1.0}),
                    Catch::Matchers::ContainsSubstring("extinction"));
  CHECK_THROWS_AS(analytic_shrinking_sphere(2.0, 2, {0.0, 1.5}), invariant_error);

  const FlowTrajectory curve = analytic_shrinking_sphere(std::sqrt(2.0), 1, {0.0, 0.5}, 128);
  CHECK(curve.snapshots[0].is_curve());
  CHECK(mean_radius(curve.snapshots[1]) == Catch::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("explicit flow tracks the shrinking sphere within one percent") {
  const Mesh sphere = make_icosphere(2.0, 3);
  EvolveOptions opt;
  opt.snapshot_every = 100;
  const FlowTrajectory traj = evolve(sphere, 1e-3, 500, opt);
  REQUIRE_FALSE(traj.stopped_early);
  REQUIRE(traj.times.back() == Catch::Approx(0.5));
  for (size_t k = 0; k < traj.snapshots.size(); ++k) {
    const double exact = std::sqrt(4.0 - 4.0 * traj.times[k]);
    CHECK(mean_radius(traj.snapshots[k]) == Catch::Approx(exact).epsilon(0.01));
    CHECK(max_radius_dev(traj.snapshots[k], exact) < 0.01 * exact);
  }
  // area non-increasing is part of the trajectory contract
  CHECK_NOTHROW(traj.validate());
}

TEST_CASE("explicit flow shrinks a polygonal circle exactly on the polygon law") {
  const Mesh circle = make_circle(std::sqrt(2.0), 128);
  EvolveOptions opt;
  opt.snapshot_every = 50;
  const FlowTrajectory traj = evolve(circle, 1e-4, 200, opt);
  const double exact = std::sqrt(2.0 - 2.0 * traj.times.back());
  CHECK(mean_radius(traj.snapshots.back()) == Catch::Approx(exact).epsilon(1e-3));
}

TEST_CASE("zero steps returns the input unchanged") {
  const Mesh sphere = make_icosphere(1.0, 2);
  const FlowTrajectory traj = evolve(sphere, 1e-3, 0);
  REQUIRE(traj.snapshots.size() == 1);
  CHECK(identical_meshes(traj.snapshots[0], sphere));
}

TEST_CASE("timestep guard rejects unstable explicit steps with a suggestion") {
  const Mesh sphere = make_icosphere(2.0, 3);
  CHECK_THROWS_WITH(evolve(sphere, 0.1, 10),
                    Catch::Matchers::ContainsSubstring("suggested dt"));
  CHECK_THROWS_AS(evolve(sphere, 0.1, 10), guard_error);
}

TEST_CASE("semi-implicit scheme is stable beyond the explicit bound") {
  const Mesh sphere = make_icosphere(2.0, 3);
  const double bound = flow_timestep_bound(sphere, differential_quantities(sphere));
  const double dt = 1.5 * bound;  // would be rejected by the explicit guard
  EvolveOptions opt;
  opt.scheme = FlowScheme::semi_implicit;
  const FlowTrajectory traj = evolve(sphere, dt, 3, opt);
  REQUIRE_FALSE(traj.stopped_early);
  const double exact = std::sqrt(4.0 - 4.0 * traj.times.back());
  CHECK(mean_radius(traj.snapshots.back()) == Catch::Approx(exact).epsilon(0.02));
}

TEST_CASE("ellipsoid rounds out under the flow") {
  const Mesh ell = make_ellipsoid(Vec3(1.8, 2.0, 2.2), 2);
  EvolveOptions opt;
  opt.snapshot_every = 50;
  const FlowTrajectory traj = evolve(ell, 1e-3, 300, opt);
  REQUIRE_FALSE(traj.stopped_early);
  for (size_t k = 1; k < traj.snapshots.size(); ++k)
    CHECK(asphericity(traj.snapshots[k]) <= asphericity(traj.snapshots[k - 1]) + 1e-9);
  CHECK(asphericity(traj.snapshots.back()) < 0.9 * asphericity(traj.snapshots.front()));
}

TEST_CASE("tangential smoothing flag is recorded and keeps the flow sane") {
  const Mesh sphere = make_icosphere(2.0, 2);
  EvolveOptions opt;
  opt.tangential_smoothing = true;
  opt.snapshot_every = 20;
  const FlowTrajectory traj = evolve(sphere, 1e-3, 60, opt);
  CHECK(traj.scheme == "explicit+tangential-smoothing");
  const double exact = std::sqrt(4.0 - 4.0 * traj.times.back());
  CHECK(mean_radius(traj.snapshots.back()) == Catch::Approx(exact).epsilon(0.02));
}

TEST_CASE("parabolic rescaling identity and self-similarity") {
  const FlowTrajectory traj = analytic_shrinking_sphere(2.0, 2, {0.0, 0.25, 0.5, 0.75}, 3);

  SECTION("alpha = 1, y = 0, s = 0 is the identity") {
    const FlowTrajectory same = parabolic_rescale(traj, {1.0, Vec3::Zero(), 0.0});
    REQUIRE(same.times.size() == traj.times.size());
    for (size_t k = 0; k < traj.times.size(); ++k) {
      CHECK(same.times[k] == traj.times[k]);
      CHECK(identical_meshes(same.snapshots[k], traj.snapshots[k]));
    }
  }

  SECTION("rescaling at extinction recovers the radius-2 slice at t = -1") {
    const FlowTrajectory r = parabolic_rescale(traj, {2.0, Vec3::Zero(), 1.0}, {-1.0});
    REQUIRE(r.snapshots.size() == 1);
    CHECK_FALSE(r.metadata[0].interpolated);  // 0.75 is an exact snapshot
    CHECK(mean_radius(r.snapshots[0]) == Catch::Approx(2.0).epsilon(1e-12));
  }

  SECTION("blow-up sequence converges to the radius-2 sphere") {
    const Mesh limit = make_icosphere(2.0, 3);
    for (int i = 1; i <= 4; ++i) {
      const double alpha = std::pow(2.0, (double)i);
      const double t_orig = 1.0 - 1.0 / (alpha * alpha);
      FlowTrajectory fine = analytic_shrinking_sphere(2.0, 2, {0.0, t_orig}, 3);
      const FlowTrajectory r = parabolic_rescale(fine, {alpha, Vec3::Zero(), 1.0}, {-1.0});
      CHECK(hausdorff_distance(r.snapshots[0], limit) < 1e-10);
    }
  }

  SECTION("off-snapshot sample times interpolate and are flagged") {
    const FlowTrajectory r = parabolic_rescale(traj, {1.0, Vec3::Zero(), 0.0}, {0.125});
    REQUIRE(r.snapshots.size() == 1);
    CHECK(r.metadata[0].interpolated);
    const double blended = 0.5 * (2.0 + std::sqrt(4.0 - 4.0 * 0.25));
    CHECK(mean_radius(r.snapshots[0]) == Catch::Approx(blended).epsilon(1e-12));
  }

  SECTION("sample times outside the trajectory are rejected") {
    CHECK_THROWS_WITH(parabolic_rescale(traj, {1.0, Vec3::Zero(), 0.0}, {0.9}),
                      Catch::Matchers::ContainsSubstring("outside trajectory range"));
  }
}

TEST_CASE("rescaled local entropy agrees with the window-scaled original") {
  const FlowTrajectory traj = analytic_shrinking_sphere(2.0, 2, {0.0, 0.25, 0.5}, 2);
  const RescalingParams p{2.0, Vec3(0.3, -0.1, 0.2), 0.5};
  const FlowTrajectory scaled = parabolic_rescale(traj, p);

  OptimizerOptions opt;
  opt.starts = 12;
  opt.x_subsample = 16;
  const ScaleWindow outer{0.8, 3.0};
  const double lhs = local_entropy(scaled.snapshots[1], outer, opt).value;
  const ScaleWindow inner{outer.a / (p.alpha * p.alpha), outer.b / (p.alpha * p.alpha)};
  const double rhs = local_entropy(traj.snapshots[1], inner, opt).value;
  CHECK(std::abs(lhs - rhs) < 1e-8 * std::max(1.0, std::abs(rhs)));
}

TEST_CASE("Gaussian density is constant on the self-similar sphere") {
  std::vector<double> times;
  for (int k = 0; k <= 9; ++k) times.push_back(0.1 * (double)k);
  const FlowTrajectory traj = analytic_shrinking_sphere(2.0, 2, times, 3);
  const MonotonicityReport rep = monotonicity_report(traj, Vec3::Zero(), 1.0);
  REQUIRE(rep.values.size() == times.size());
  const double target = 4.0 / std::exp(1.0);
  for (double v : rep.values) CHECK(v == Catch::Approx(target).epsilon(0.01));
  CHECK(rep.violations.empty());
  CHECK(rep.to_csv().rfind("t,F\n", 0) == 0);
}

TEST_CASE("monotonicity report rejects reference times inside the trajectory") {
  const FlowTrajectory traj = analytic_shrinking_sphere(2.0, 2, {0.0, 0.5}, 2);
  CHECK_THROWS_AS(monotonicity_report(traj, Vec3::Zero(), 0.4), invariant_error);
  const FlowTrajectory single = analytic_shrinking_sphere(2.0, 2, {0.25}, 2);
  const MonotonicityReport rep = monotonicity_report(single, Vec3(0.2, 0.0, 0.1), 2.0);
  CHECK(rep.values.size() == 1);
  CHECK(rep.violations.empty());
}

TEST_CASE("Gaussian density decreases along an evolved ellipsoid flow") {
  const Mesh ell = make_ellipsoid(Vec3(1.8, 2.0, 2.2), 2);
  EvolveOptions opt;
  opt.snapshot_every = 20;
  const FlowTrajectory traj = evolve(ell, 1e-3, 200, opt);

  std::mt19937 rng(7);
  std::uniform_real_distribution<double> coord(-0.3, 0.3), horizon(0.2, 1.0);
  for (int probe = 0; probe < 10; ++probe) {
    const Vec3 x0(coord(rng), coord(rng), coord(rng));
    const double t_ref = traj.times.back() + horizon(rng);
    const MonotonicityReport rep = monotonicity_report(traj, x0, t_ref);
    INFO("probe " << probe << " x0 = " << x0.transpose() << " t_ref = " << t_ref);
    CHECK(rep.violations.empty());
  }
}

TEST_CASE("local entropy with shifted windows is monotone under the flow") {
  const Mesh ell = make_ellipsoid(Vec3(1.8, 2.0, 2.2), 2);
  EvolveOptions eopt;
  eopt.snapshot_every = 25;
  const FlowTrajectory traj = evolve(ell, 2e-3, 100, eopt);

  OptimizerOptions opt;
  opt.starts = 12;
  opt.x_subsample = 16;
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> a_dist(0.45, 0.9), len_dist(0.4, 1.0);
  std::uniform_int_distribution<int> idx(0, (int)traj.snapshots.size() - 1);
  for (int trial = 0; trial < 5; ++trial) {
    int i1 = idx(rng), i2 = idx(rng);
    if (i1 > i2) std::swap(i1, i2);
    if (i1 == i2) i2 = std::min<int>(i1 + 1, (int)traj.snapshots.size() - 1);
    const double t1 = traj.times[i1], t2 = traj.times[i2];
    const double a = a_dist(rng), b = a + len_dist(rng);
    const double shift = t1 - t2;
    const double early = local_entropy(traj.snapshots[i1], {a, b}, opt).value;
    const double late = local_entropy(traj.snapshots[i2], {a + shift, b + shift}, opt).value;
    INFO("window [" << a << ", " << b << "] times " << t1 << " -> " << t2);
    CHECK(late <= early + 1e-3);
  }
}

TEST_CASE("barrier certificates follow the local-entropy threshold") {
  const Mesh sphere = make_icosphere(2.0, 3);
  OptimizerOptions opt;
  opt.starts = 12;
  opt.x_subsample = 16;
  const double target = 8.0 / std::exp(1.0);

  SECTION("single shrinker sphere is excluded trivially") {
    const BarrierCertificate cert = barrier_certificate(sphere, 1.0, 0.25, kInf, target, opt);
    CHECK(cert.granted);
    CHECK(cert.verdict == "excluded");
    CHECK(cert.value == Catch::Approx(4.0 / std::exp(1.0)).epsilon(0.01));
    CHECK(cert.excluded_from == Catch::Approx(-0.75));
    CHECK(std::isinf(cert.excluded_to));
  }

  SECTION("finite window and alpha scale the excluded interval") {
    const BarrierCertificate cert = barrier_certificate(sphere, 2.0, 0.5, 2.0, target, opt);
    CHECK(cert.window.a == Catch::Approx(0.125));
    CHECK(cert.window.b == Catch::Approx(0.5));
    CHECK(cert.excluded_from == Catch::Approx(-0.125));
    CHECK(cert.excluded_to == Catch::Approx(0.25));
  }

  SECTION("value at or above the target is inconclusive") {
    const BarrierCertificate cert = barrier_certificate(sphere, 1.0, 0.25, kInf, 1.05, opt);
    CHECK_FALSE(cert.granted);
    CHECK(cert.verdict == "inconclusive");
  }

  SECTION("malformed windows and targets are rejected") {
    CHECK_THROWS_AS(barrier_certificate(sphere, 1.0, 1.2, kInf, target, opt), invariant_error);
    CHECK_THROWS_AS(barrier_certificate(sphere, 1.0, 0.25, 0.8, target, opt), invariant_error);
    CHECK_THROWS_AS(barrier_certificate(sphere, 1.0, 0.25, kInf, 0.9, opt), invariant_error);
    CHECK_THROWS_AS(barrier_certificate(sphere, -1.0, 0.25, kInf, target, opt), invariant_error);
  }
}

TEST_CASE("inscribed ball extinction bound") {
  SECTION("sphere of radius 2") {
    const ExtinctionBound b = extinction_lower_bound(make_icosphere(2.0, 3));
    CHECK(b.gamma == Catch::Approx(2.0).epsilon(0.02));
    CHECK(b.delta == Catch::Approx(1.0).epsilon(0.03));
    CHECK(b.center.norm() < 0.05);
  }

  SECTION("thin ellipsoid is pinched by the short axis") {
    const ExtinctionBound b = extinction_lower_bound(make_ellipsoid(Vec3(2.0, 2.0, 0.2), 4));
    CHECK(b.gamma == Catch::Approx(0.2).epsilon(0.03));
    CHECK(b.delta == Catch::Approx(0.01).epsilon(0.06));
  }

  SECTION("two nested sheets: the inner sheet bounds the ball") {
    const Mesh pair = merge_meshes({make_icosphere(2.0, 3), make_icosphere(2.05, 3)});
    const ExtinctionBound b = extinction_lower_bound(pair);
    CHECK(b.gamma == Catch::Approx(2.0).epsilon(0.02));
    CHECK(b.delta == Catch::Approx(1.0).epsilon(0.03));
  }

  SECTION("open surfaces are rejected") {
    CHECK_THROWS_AS(extinction_lower_bound(make_hex_disk(1.0, 4)), invariant_error);
  }
}
