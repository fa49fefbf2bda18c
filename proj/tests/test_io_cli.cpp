#include <catch2/catch_amalgamated.hpp>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "mcflab/io.hpp"
#include "mcflab/shapes.hpp"

namespace fs = std::filesystem;
using namespace mcflab;

namespace {

struct RunResult {
  int code = -1;
  std::string out, err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const fs::path& work_dir() {
  static const fs::path dir = [] {
    const fs::path d =
        fs::temp_directory_path() / ("mcflab_cli_" + std::to_string((long)::getpid()));
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

RunResult run_cli(const std::string& args) {
  const fs::path out = work_dir() / "stdout.txt";
  const fs::path err = work_dir() / "stderr.txt";
  const std::string cmd = cat('"', MCFLAB_CLI_PATH, "\" ", args, " > \"", out.string(),
                              "\" 2> \"", err.string(), '"');
  const int status = std::system(cmd.c_str());
  RunResult r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

std::string sphere_obj() {
  static const std::string p = [] {
    const fs::path q = work_dir() / "sphere2.obj";
    write_obj(q.string(), make_icosphere(2.0, 3));
    return q.string();
  }();
  return p;
}

std::string coarse_obj() {
  static const std::string p = [] {
    const fs::path q = work_dir() / "sphere2_coarse.obj";
    write_obj(q.string(), make_icosphere(2.0, 2));
    return q.string();
  }();
  return p;
}

}  // namespace

TEST_CASE("entropy command reports the closed-form sphere value") {
  const RunResult r = run_cli(cat("entropy \"", sphere_obj(), '"'));
  REQUIRE(r.code == 0);
  const json j = json::parse(r.out);
  CHECK(j["value"].get<double>() == Catch::Approx(1.47152).epsilon(0.01));
  CHECK(j["t0"].get<double>() == Catch::Approx(1.0).epsilon(0.15));
  CHECK(std::abs(j["x0"][0].get<double>()) < 0.05);
}

TEST_CASE("entropy command doubles with the manifest multiplicity") {
  const fs::path manifest = work_dir() / "manifest_m2.json";
  write_json(manifest.string(),
             json{{"components", {{{"mesh", "sphere2.obj"}, {"multiplicity", 2}}}}});
  sphere_obj();  // ensure the referenced mesh exists
  const RunResult r = run_cli(cat("entropy \"", manifest.string(), '"'));
  REQUIRE(r.code == 0);
  CHECK(json::parse(r.out)["value"].get<double>() == Catch::Approx(2.94304).epsilon(0.01));
}

TEST_CASE("entropy command takes scale windows with inf") {
  const RunResult r = run_cli(cat("entropy \"", sphere_obj(), "\" --window 4 inf"));
  REQUIRE(r.code == 0);
  CHECK(json::parse(r.out)["value"].get<double>() == Catch::Approx(0.77880).epsilon(0.01));
}

TEST_CASE("parse failures exit with code 2 and a line number") {
  const fs::path bad = work_dir() / "bad.obj";
  std::ofstream(bad) << "v 0 0 0\nv 1 2\nv 0 1 0\nf 1 2 3\n";
  const RunResult r = run_cli(cat("entropy \"", bad.string(), '"'));
  CHECK(r.code == 2);
  CHECK(r.err.find("line 2") != std::string::npos);

  CHECK(run_cli("entropy /nonexistent/mesh.obj").code == 2);
  CHECK(run_cli(cat("entropy \"", sphere_obj(), "\" --bogus-flag")).code == 2);
}

TEST_CASE("flow command writes an indexed snapshot directory") {
  const fs::path dir = work_dir() / "flow_run";
  const RunResult r = run_cli(cat("flow \"", sphere_obj(), "\" --dt 1e-3 --steps 60 ",
                                  "--snapshot-every 10 --out \"", dir.string(), '"'));
  REQUIRE(r.code == 0);
  const json index = json::parse(slurp(dir / "index.json"));
  REQUIRE(index["snapshots"].size() == 7);  // initial + every 10th of 60
  CHECK_FALSE(index["stopped_early"].get<bool>());
  const double area0 = index["snapshots"][0]["area"].get<double>();
  const double area1 = index["snapshots"][6]["area"].get<double>();
  CHECK(area1 < area0);
  for (const json& s : index["snapshots"])
    CHECK(fs::exists(dir / s["file"].get<std::string>()));

  // zero steps still produces a well-formed single-snapshot index
  const fs::path dir0 = work_dir() / "flow_zero";
  const RunResult r0 = run_cli(cat("flow \"", sphere_obj(), "\" --dt 1e-3 --steps 0 --out \"",
                                   dir0.string(), '"'));
  REQUIRE(r0.code == 0);
  CHECK(json::parse(slurp(dir0 / "index.json"))["snapshots"].size() == 1);
}

TEST_CASE("flow command tracks the round shrinking law") {
  const fs::path dir = work_dir() / "flow_long";
  const RunResult r = run_cli(cat("flow \"", sphere_obj(), "\" --dt 1e-3 --steps 500 ",
                                  "--snapshot-every 100 --out \"", dir.string(), '"'));
  REQUIRE(r.code == 0);
  const json index = json::parse(slurp(dir / "index.json"));
  const Mesh last =
      read_obj((dir / index["snapshots"].back()["file"].get<std::string>()).string());
  double mean_r = 0.0;
  for (const Vec3& v : last.vertices) mean_r += v.norm();
  mean_r /= (double)last.vertices.size();
  CHECK(mean_r == Catch::Approx(std::sqrt(2.0)).epsilon(0.01));  // R(0.5) for R0 = 2
}

TEST_CASE("unstable timesteps are refused with a suggestion") {
  const fs::path dir = work_dir() / "flow_bad_dt";
  const RunResult r = run_cli(cat("flow \"", sphere_obj(), "\" --dt 0.5 --steps 5 --out \"",
                                  dir.string(), '"'));
  CHECK(r.code == 4);
  CHECK(r.err.find("suggested dt") != std::string::npos);
}

TEST_CASE("pipeline command rejects m = 1 and broken configs") {
  const fs::path dir = work_dir() / "pipe_reject";
  CHECK(run_cli(cat("pipeline \"", coarse_obj(), "\" --m 1 --out \"", dir.string(), '"')).code ==
        3);

  const fs::path badcfg = work_dir() / "bad.cfg";
  std::ofstream(badcfg) << "colour = blue\n";
  const RunResult r = run_cli(cat("pipeline \"", coarse_obj(), "\" --m 2 --config \"",
                                  badcfg.string(), "\" --out \"", dir.string(), '"'));
  CHECK(r.code == 2);
  CHECK(r.err.find("bad.cfg:1") != std::string::npos);
}

TEST_CASE("pipeline command emits the certified report and artifacts") {
  const fs::path cfg_path = work_dir() / "fast.cfg";
  std::ofstream(cfg_path) << "starts = 8\nmax_iters = 80\n";
  const fs::path d1 = work_dir() / "pipe_run1";
  const RunResult r = run_cli(cat("pipeline \"", coarse_obj(), "\" --m 2 --config \"",
                                  cfg_path.string(), "\" --out \"", d1.string(), '"'));
  REQUIRE(r.code == 0);

  const json rep = json::parse(slurp(d1 / "report.json"));
  CHECK(rep["margin"].get<double>() > 0.0);
  CHECK(rep["certificate"]["granted"] == true);
  CHECK(rep["certificate"]["verdict"] == "excluded");
  const double gamma = rep["extinction"]["gamma"].get<double>();
  CHECK(rep["extinction"]["delta"].get<double>() ==
        Catch::Approx(gamma * gamma / 4.0).epsilon(1e-9));
  CHECK(rep["layers"]["multiplicity"] == 2);
  for (const char* name : {"reference.obj", "fixture.obj", "perturbed.obj"})
    CHECK(fs::exists(d1 / name));

  // determinism contract: identical config + input give byte-identical reports
  const fs::path d2 = work_dir() / "pipe_run2";
  const RunResult r2 = run_cli(cat("pipeline \"", coarse_obj(), "\" --m 2 --config \"",
                                   cfg_path.string(), "\" --out \"", d2.string(), '"'));
  REQUIRE(r2.code == 0);
  CHECK(slurp(d1 / "report.json") == slurp(d2 / "report.json"));
}
