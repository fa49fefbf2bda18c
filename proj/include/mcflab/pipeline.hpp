#pragma once

#include <functional>

#include "mcflab/config.hpp"
#include "mcflab/cutoff.hpp"
#include "mcflab/isotopy.hpp"
#include "mcflab/layers.hpp"
#include "mcflab/stability.hpp"

namespace mcflab {

// A named stage of the end-to-end run failed.  CLI maps this to exit code 5.
class stage_error : public std::runtime_error {
 public:
  stage_error(std::string stage, const std::string& what)
      : std::runtime_error(cat("stage '", stage, "': ", what)), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

namespace detail {

inline json json_vec3(const Vec3& v) { return json::array({v[0], v[1], v[2]}); }

inline json json_scale(double x) { return std::isfinite(x) ? json(x) : json("inf"); }

}  // namespace detail

// Entropy comparison between the multiplicity-m measure over sigma and the
// measure with one sheet replaced by the graph of eps * f.
struct DropReport {
  double lambda_base = 0.0;
  double lambda_pert = 0.0;
  double margin = 0.0;
  double epsilon = 0.0;
  ScaleWindow window;     // global window means plain entropy
  bool usable = true;     // false when the rung was skipped (guard tripped)
  std::string note;

  json to_json() const {
    json j;
    j["lambda_base"] = lambda_base;
    j["lambda_pert"] = lambda_pert;
    j["margin"] = margin;
    j["epsilon"] = epsilon;
    j["window"] = window.global()
                      ? json(nullptr)
                      : json::array({window.a, detail::json_scale(window.b)});
    j["usable"] = usable;
    if (!note.empty()) j["note"] = note;
    return j;
  }
};

// lambda(m Sigma) vs lambda((m-1) Sigma + Sigma_{eps f}).  The base value is
// computed from the canonicalized m-fold measure, so eps = 0 gives margin 0
// bitwise (the two measures collapse to the same canonical form).
inline DropReport verify_entropy_drop(const Mesh& sigma, int m, const PerturbationField& f,
                                      double eps, const OptimizerOptions& opt = {},
                                      const ScaleWindow& window = {}) {
  if (m < 2) throw invariant_error(cat("entropy drop requires multiplicity >= 2, got ", m));
  if (!(eps >= 0.0)) throw invariant_error(cat("perturbation size must be >= 0, got ", eps));
  f.validate(sigma);

  const Mesh graph = build_normal_graph(sigma, f, eps);  // reach + embedding guards inside
  WeightedMeasure pert;
  pert.components.push_back({sigma, m - 1});
  pert.components.push_back({graph, 1});

  DropReport rep;
  rep.epsilon = eps;
  rep.window = window;
  if (window.global()) {
    rep.lambda_base = entropy(WeightedMeasure::single(sigma, m), opt).value;
    rep.lambda_pert = entropy(pert, opt).value;
  } else {
    rep.lambda_base = local_entropy(WeightedMeasure::single(sigma, m), window, opt).value;
    rep.lambda_pert = local_entropy(pert, window, opt).value;
  }
  rep.margin = rep.lambda_base - rep.lambda_pert;
  return rep;
}

// Evaluates the drop along a ladder of perturbation sizes.  Rungs whose
// graph construction trips a guard (reach or embedding) are reported as
// unusable instead of aborting the whole ladder.
inline std::vector<DropReport> entropy_drop_ladder(const Mesh& sigma, int m,
                                                   const PerturbationField& f,
                                                   const std::vector<double>& eps_ladder,
                                                   const OptimizerOptions& opt = {},
                                                   const ScaleWindow& window = {}) {
  std::vector<DropReport> out;
  for (double eps : eps_ladder) {
    try {
      out.push_back(verify_entropy_drop(sigma, m, f, eps, opt, window));
    } catch (const guard_error& e) {
      DropReport skipped;
      skipped.epsilon = eps;
      skipped.window = window;
      skipped.usable = false;
      skipped.note = e.what();
      skipped.margin = -kInf;
      out.push_back(std::move(skipped));
    }
  }
  return out;
}

// Everything the end-to-end run produced, in stage order.
struct PipelineReport {
  int m = 0;
  RunConfig config;
  std::vector<std::string> stages_completed;

  Mesh reference;
  Mesh fixture;
  UnstableDirection direction;
  std::vector<ConcentrationPoint> marked;  // concentration points, or fallback markers
  bool fallback_markers = false;
  CutoffSpec cutoff;
  LocalizedField localized;
  LayerReport layers;
  std::vector<DropReport> ladder;
  int chosen_rung = -1;
  Mesh perturbed;
  BarrierCertificate certificate;
  ExtinctionBound extinction;

  const DropReport& chosen() const {
    if (chosen_rung < 0 || chosen_rung >= (int)ladder.size())
      throw invariant_error("no usable perturbation size was chosen");
    return ladder[chosen_rung];
  }

  json to_json() const {
    json j;
    j["m"] = m;
    j["config"] = config.to_json();
    j["stages_completed"] = stages_completed;
    if (!stages_completed.empty()) {
      json dir;
      dir["eigenvalue"] = direction.eigenvalue;
      dir["sphere_shortcut"] = direction.sphere_shortcut;
      dir["shrinker_rel_residual"] = direction.shrinker_rel_residual;
      dir["asphericity"] = direction.asphericity;
      j["direction"] = dir;

      json marks = json::array();
      for (const ConcentrationPoint& p : marked) {
        json e;
        e["p"] = detail::json_vec3(p.point);
        e["r"] = p.radius;
        e["mass"] = p.mass;
        marks.push_back(e);
      }
      j["marked_points"] = marks;
      j["fallback_markers"] = fallback_markers;
      j["cutoff_radius"] = cutoff.radius;

      json lay;
      lay["multiplicity"] = layers.multiplicity;
      json heights = json::array();
      for (const Layer& l : layers.layers) heights.push_back(l.mean_height);
      lay["mean_heights"] = heights;
      lay["excluded_area_fraction"] = layers.excluded_area_fraction;
      lay["ambiguous_vertices"] = layers.ambiguous_vertices;
      j["layers"] = lay;

      json rungs = json::array();
      for (const DropReport& r : ladder) rungs.push_back(r.to_json());
      j["drop_ladder"] = rungs;
      if (chosen_rung >= 0) {
        j["chosen_epsilon"] = ladder[chosen_rung].epsilon;
        j["margin"] = ladder[chosen_rung].margin;
      }

      json cert;
      cert["a"] = certificate.a;
      cert["b"] = detail::json_scale(certificate.b);
      cert["alpha"] = certificate.alpha;
      cert["window"] = json::array(
          {certificate.window.a, detail::json_scale(certificate.window.b)});
      cert["value"] = certificate.value;
      cert["target"] = certificate.target;
      cert["granted"] = certificate.granted;
      cert["excluded_from"] = certificate.excluded_from;
      cert["excluded_to"] = detail::json_scale(certificate.excluded_to);
      cert["verdict"] = certificate.verdict;
      j["certificate"] = cert;

      json ext;
      ext["gamma"] = extinction.gamma;
      ext["delta"] = extinction.delta;
      ext["center"] = detail::json_vec3(extinction.center);
      j["extinction"] = ext;
    }
    return j;
  }
};

using StageCallback = std::function<void(const std::string&, const PipelineReport&)>;

// The perturb-then-certify composition: build the m-sheet fixture over the
// reference shrinker, find the unstable direction, localize it away from the
// marked points, verify the entropy drop along the eps ladder, move the top
// sheet, and certify the entropy barrier plus the extinction bound on the
// result.  Preconditions are rejected before any stage runs; once stages
// run, failures carry the stage name (exit code 5 at the CLI).
inline PipelineReport run_pipeline(const Mesh& reference, int m, const RunConfig& cfg,
                                   const StageCallback& on_stage = {}) {
  cfg.validate();
  if (m < 2)
    throw invariant_error(cat("pipeline requires multiplicity m >= 2, got ", m,
                              " (single sheets admit no layer perturbation)"));
  if (!(cfg.window_a > 0.0 && cfg.window_a < 1.0))
    throw invariant_error(cat("barrier window requires 0 < a < 1, got a = ", cfg.window_a));
  if (std::isfinite(cfg.window_b) && !(cfg.window_b > 1.0))
    throw invariant_error(cat("barrier window requires b > 1 (or inf), got b = ", cfg.window_b));
  if (reference.is_curve())
    throw invariant_error("pipeline operates on closed surfaces, not curves");

  PipelineReport rep;
  rep.m = m;
  rep.config = cfg;
  const OptimizerOptions opt = cfg.optimizer();

  const auto stage = [&](const char* name, const std::function<void()>& body) {
    try {
      body();
    } catch (const stage_error&) {
      throw;
    } catch (const std::exception& e) {
      throw stage_error(name, e.what());
    }
    rep.stages_completed.push_back(name);
    if (on_stage) on_stage(name, rep);
  };

  double reach = 0.0;
  stage("validate-reference", [&] {
    require_valid(reference);
    const MeshTopology topo = analyze_topology(reference);
    if (!topo.manifold || !topo.closed)
      throw invariant_error(cat("reference must be a closed manifold surface: ", topo.issue));
    reach = reach_estimate(reference);
    rep.reference = reference;
  });

  stage("build-fixture", [&] {
    const double top_height = (double)(m - 1) * cfg.sheet_gap;
    if (!(top_height < 0.5 * reach))
      throw guard_error(cat("fixture height (m-1) * sheet_gap = ", top_height,
                            " must stay below half the reference reach ", reach,
                            "; lower sheet_gap"));
    std::vector<Mesh> sheets;
    sheets.push_back(reference);
    const PerturbationField ones = PerturbationField::constant(reference);
    for (int jj = 1; jj < m; ++jj)
      sheets.push_back(build_normal_graph(reference, ones, (double)jj * cfg.sheet_gap));
    rep.fixture = merge_meshes(sheets);
  });

  stage("unstable-direction", [&] { rep.direction = unstable_direction(reference); });

  std::vector<ConcentrationPoint> exclusions;
  stage("concentration", [&] {
    const double r_probe = 5.0 * rep.fixture.mean_edge_length();
    // a chord-radius ball over a homogeneous m-sheet stack carries mass
    // (sigma_total / area) * m * pi r^2; flag only what exceeds that by the
    // configured ratio
    const CurvatureMeasure cm = curvature_measure(rep.fixture);
    const double background = cm.total / rep.fixture.total_measure() * (double)m * kPi *
                              r_probe * r_probe;
    const double eps0 = std::sqrt(cfg.concentration_threshold * background);
    exclusions = curvature_concentration(rep.fixture, eps0, r_probe);
    if (exclusions.empty()) {
      // homogeneous fixture: mark two antipodal extreme vertices so the
      // localization still produces a field vanishing near marked points
      rep.fallback_markers = true;
      int lo = 0, hi = 0;
      for (int v = 1; v < (int)reference.vertices.size(); ++v) {
        if (reference.vertices[v][0] < reference.vertices[lo][0]) lo = v;
        if (reference.vertices[v][0] > reference.vertices[hi][0]) hi = v;
      }
      const double r_mark = *std::min_element(cfg.r_ladder.begin(), cfg.r_ladder.end());
      rep.marked.push_back({reference.vertices[lo], r_mark, 0.0});
      rep.marked.push_back({reference.vertices[hi], r_mark, 0.0});
    } else {
      rep.marked = exclusions;
    }
  });

  stage("localize", [&] {
    rep.cutoff.points.clear();
    for (const ConcentrationPoint& p : rep.marked) {
      int best = 0;
      double best_d = kInf;
      for (int v = 0; v < (int)reference.vertices.size(); ++v) {
        const double d = (reference.vertices[v] - p.point).norm();
        if (d < best_d) best_d = d, best = v;
      }
      rep.cutoff.points.push_back(best);
    }
    // cover ambient exclusion balls by the geodesic cutoff with slack
    rep.cutoff.radius = rep.fallback_markers
                            ? *std::min_element(cfg.r_ladder.begin(), cfg.r_ladder.end())
                            : 1.5 * rep.marked.front().radius;
    rep.localized = localize_field(reference, rep.direction.field, rep.cutoff);
  });

  stage("sheet-decomposition", [&] {
    rep.layers = sheet_decomposition(rep.fixture, reference, exclusions);
    if (rep.layers.multiplicity != m)
      throw invariant_error(cat("fixture decomposes into ", rep.layers.multiplicity,
                                " layers, expected ", m));
  });

  stage("entropy-drop", [&] {
    rep.ladder = entropy_drop_ladder(reference, m, rep.localized.field, cfg.eps_ladder, opt);
    for (size_t k = 0; k < rep.ladder.size(); ++k) {
      const DropReport& r = rep.ladder[k];
      if (!r.usable || !(r.margin > 0.0)) continue;
      if (rep.chosen_rung < 0 || r.epsilon > rep.ladder[rep.chosen_rung].epsilon)
        rep.chosen_rung = (int)k;
    }
    if (rep.chosen_rung < 0)
      throw invariant_error("no ladder rung produced a positive entropy margin");
  });

  stage("perturb-top-layer", [&] {
    const double eps = rep.chosen().epsilon;
    IsotopyParams params;
    params.beta2 = std::max(5.0 * eps, 4.0 * (double)(m - 1) * cfg.sheet_gap);
    params.beta1 = 0.25 * params.beta2;
    rep.perturbed = perturb_top_layer(rep.layers, rep.localized.field, eps, params);
  });

  stage("barrier-certificate", [&] {
    rep.certificate = barrier_certificate(rep.perturbed, 1.0, cfg.window_a, cfg.window_b,
                                          rep.chosen().lambda_base, opt);
  });

  stage("extinction-bound", [&] { rep.extinction = extinction_lower_bound(rep.perturbed); });

  return rep;
}

}  // namespace mcflab
