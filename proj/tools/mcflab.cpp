// Command-line front end: entropy evaluation, mean curvature flow runs, and
// the end-to-end multiplicity pipeline.  Exit codes: 0 ok, 2 parse error,
// 3 invariant violation, 4 numeric guard, 5 pipeline stage failure.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

#include "mcflab/config.hpp"
#include "mcflab/io.hpp"
#include "mcflab/pipeline.hpp"

namespace {

namespace fs = std::filesystem;
using namespace mcflab;

WeightedMeasure load_measure(const std::string& path) {
  if (path.size() > 5 && path.substr(path.size() - 5) == ".json") return read_manifest(path);
  return WeightedMeasure::single(read_obj(path));
}

json witness_json(const EntropyWitness& w) {
  json out{{"value", w.value},
           {"x0", {w.x0[0], w.x0[1], w.x0[2]}},
           {"t0", w.t0},
           {"starts", w.starts},
           {"iterations", w.iterations},
           {"grad_norm", w.grad_norm},
           {"scale_bounds", {w.t_lo, w.t_hi}}};
  if (w.window.global())
    out["window"] = nullptr;
  else
    out["window"] = {{"a", w.window.a}, {"b", w.window.infinite() ? json() : json(w.window.b)}};
  return out;
}

int cmd_entropy(const std::string& input, const std::vector<std::string>& window_args,
                const std::string& out_path, int starts, int quad_order) {
  WeightedMeasure mu = load_measure(input);
  OptimizerOptions opt;
  opt.starts = starts;
  opt.quad_order = quad_order;

  ScaleWindow window = ScaleWindow::all();
  if (window_args.size() == 2)
    window = {detail::parse_config_double(window_args[0], "--window a"),
              detail::parse_config_double(window_args[1], "--window b")};

  const EntropyWitness w = window.global() ? entropy(mu, opt) : local_entropy(mu, window, opt);
  const json out = witness_json(w);
  std::cout << out.dump(2) << std::endl;
  if (!out_path.empty()) write_json(out_path, out);
  return 0;
}

std::string snapshot_name(int k) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "snapshot_%04d.obj", k);
  return buf;
}

FlowScheme parse_scheme(const std::string& name) {
  if (name == "explicit") return FlowScheme::explicit_euler;
  if (name == "semi_implicit") return FlowScheme::semi_implicit;
  throw parse_error(cat("scheme must be 'explicit' or 'semi_implicit', got '", name, "'"));
}

int cmd_flow(const std::string& input, double dt, int steps, const std::string& scheme,
             int snapshot_every, const std::string& out_dir) {
  const Mesh mesh = read_obj(input);
  EvolveOptions opt;
  opt.scheme = parse_scheme(scheme);
  opt.snapshot_every = snapshot_every;
  const FlowTrajectory traj = evolve(mesh, dt, steps, opt);

  fs::create_directories(out_dir);
  json index;
  index["input"] = fs::path(input).filename().string();
  index["scheme"] = traj.scheme;
  index["dt"] = dt;
  index["steps_requested"] = steps;
  index["stopped_early"] = traj.stopped_early;
  index["stop_reason"] = traj.stop_reason;
  json snaps = json::array();
  for (size_t k = 0; k < traj.snapshots.size(); ++k) {
    const std::string name = snapshot_name((int)k);
    write_obj((fs::path(out_dir) / name).string(), traj.snapshots[k]);
    const StepInfo& info = traj.metadata[k];
    snaps.push_back({{"file", name},
                     {"t", traj.times[k]},
                     {"area", info.area},
                     {"min_angle_deg", info.min_angle_deg},
                     {"max_displacement", info.max_displacement}});
  }
  index["snapshots"] = snaps;
  write_json((fs::path(out_dir) / "index.json").string(), index);
  std::cout << index.dump(2) << std::endl;
  return 0;
}

int cmd_pipeline(const std::string& input, int m, const std::string& config_path,
                 const std::string& out_dir) {
  const RunConfig cfg = config_path.empty() ? RunConfig{} : load_config(config_path);
  const Mesh reference = read_obj(input);
  fs::create_directories(out_dir);
  const auto artifact = [&](const char* name) { return (fs::path(out_dir) / name).string(); };

  // keep the partial report on disk after every stage, so a failed run
  // leaves the artifacts gathered so far
  const StageCallback on_stage = [&](const std::string& stage, const PipelineReport& rep) {
    if (stage == "validate-reference") write_obj(artifact("reference.obj"), rep.reference);
    if (stage == "build-fixture") write_obj(artifact("fixture.obj"), rep.fixture);
    if (stage == "perturb-top-layer") write_obj(artifact("perturbed.obj"), rep.perturbed);
    write_json(artifact("report.json"), rep.to_json());
  };

  try {
    const PipelineReport rep = run_pipeline(reference, m, cfg, on_stage);
    json out = rep.to_json();
    out["artifacts"] = {{"reference", "reference.obj"},
                        {"fixture", "fixture.obj"},
                        {"perturbed", "perturbed.obj"}};
    write_json(artifact("report.json"), out);
    std::cout << out.dump(2) << std::endl;
    return 0;
  } catch (const stage_error& e) {
    std::cerr << "stage failure: " << e.what() << "\nartifacts so far in " << out_dir
              << std::endl;
    return 5;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gaussian entropy laboratory for triangle meshes"};
  app.require_subcommand(1);

  std::string input, out_path;
  std::vector<std::string> window_args;
  int starts = 32, quad_order = 3;

  CLI::App* entropy_cmd = app.add_subcommand("entropy", "entropy / local entropy of a measure");
  entropy_cmd->add_option("input", input, "mesh .obj or measure manifest .json")->required();
  entropy_cmd->add_option("--window", window_args, "scale window a b (b may be inf)")
      ->expected(2);
  entropy_cmd->add_option("--out", out_path, "write the witness json here as well");
  entropy_cmd->add_option("--starts", starts, "optimizer starts");
  entropy_cmd->add_option("--quad-order", quad_order, "quadrature order (1..6)");

  std::string flow_input, flow_out, scheme = "explicit";
  double dt = 1e-3;
  int steps = 0, snapshot_every = 1;
  CLI::App* flow_cmd = app.add_subcommand("flow", "evolve a mesh by mean curvature flow");
  flow_cmd->add_option("input", flow_input, "mesh .obj")->required();
  flow_cmd->add_option("--dt", dt, "timestep")->required();
  flow_cmd->add_option("--steps", steps, "number of steps")->required();
  flow_cmd->add_option("--scheme", scheme, "explicit | semi_implicit");
  flow_cmd->add_option("--snapshot-every", snapshot_every, "keep every k-th step");
  flow_cmd->add_option("--out", flow_out, "output directory")->required();

  std::string pipe_input, pipe_out, config_path;
  int m = 0;
  CLI::App* pipe_cmd =
      app.add_subcommand("pipeline", "multiplicity perturbation pipeline on a shrinker");
  pipe_cmd->add_option("input", pipe_input, "reference shrinker mesh .obj")->required();
  pipe_cmd->add_option("--m", m, "sheet multiplicity (>= 2)")->required();
  pipe_cmd->add_option("--config", config_path, "key = value run configuration");
  pipe_cmd->add_option("--out", pipe_out, "output directory")->required();

  try {
    app.parse(argc, argv);
    if (entropy_cmd->parsed())
      return cmd_entropy(input, window_args, out_path, starts, quad_order);
    if (flow_cmd->parsed())
      return cmd_flow(flow_input, dt, steps, scheme, snapshot_every, flow_out);
    if (pipe_cmd->parsed()) return cmd_pipeline(pipe_input, m, config_path, pipe_out);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  } catch (const mcflab::parse_error& e) {
    std::cerr << "parse error: " << e.what() << std::endl;
    return 2;
  } catch (const mcflab::invariant_error& e) {
    std::cerr << "invariant violated: " << e.what() << std::endl;
    return 3;
  } catch (const mcflab::guard_error& e) {
    std::cerr << "guard tripped: " << e.what() << std::endl;
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 1;
  }
  return 0;
}
