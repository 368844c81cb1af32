#include "blowup/pipeline.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace blowup;
namespace fs = std::filesystem;

namespace {
RunConfig flat_config(const std::string& dir) {
  RunConfig c = parse_config("[surface]\ncatalog = flat:1\n[grid]\nn_y = 16\n");
  c.out_dir = (fs::temp_directory_path() / dir).string();
  fs::remove_all(c.out_dir);
  return c;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::string first_line(const fs::path& p) {
  std::ifstream f(p);
  std::string line;
  std::getline(f, line);
  return line;
}
}  // namespace

TEST_CASE("flat run writes the documented files") {
  const RunConfig c = flat_config("blowup_pipeline_flat");
  const RunManifest m = run_pipeline(c);
  CHECK(m.exit_code == kExitOk);
  CHECK(m.error.empty());
  CHECK(m.all_passed());
  for (const char* f : {"map.csv", "parametrix.csv", "solution_sy.csv", "solution_tx.csv", "manifest.json"})
    CHECK(fs::exists(fs::path(c.out_dir) / f));
  CHECK_FALSE(fs::exists(fs::path(c.out_dir) / "manifest.json.tmp"));
  CHECK(m.diagnostics["solve"]["iterations"] == 1);
  CHECK(m.diagnostics["verify"]["blowup_fit_max_error"].get<double>() < 1e-6);
  const auto j = nlohmann::json::parse(slurp(fs::path(c.out_dir) / "manifest.json"));
  CHECK(j["exit_code"] == 0);
  CHECK(j["checks"].size() == m.checks.size());
}

TEST_CASE("golden CSV headers") {
  const RunConfig c = flat_config("blowup_pipeline_headers");
  run_pipeline(c);
  CHECK(first_line(fs::path(c.out_dir) / "map.csv") == "s,y,t,x,lambda");
  CHECK(first_line(fs::path(c.out_dir) / "parametrix.csv") == "s,y,rho,E");
  CHECK(first_line(fs::path(c.out_dir) / "solution_sy.csv") == "s,y,v,w");
  CHECK(first_line(fs::path(c.out_dir) / "solution_tx.csv") == "t,x,u,u_t,u_x,s,y");
  CHECK(first_line(fs::path(c.out_dir) / "blowup_fit.csv") == "x,sigma,sigma_prime,fitted,target,relerr");
  CHECK(first_line(fs::path(c.out_dir) / "leapfrog.csv") == "x,u_leapfrog,u_solution,relerr");
}

TEST_CASE("reruns are byte identical, whatever the thread count") {
  RunConfig a = parse_config("[surface]\ncatalog = gauss:0.3,1.0\n[grid]\nn_y = 64\n[verify]\nleapfrog_points = 1001\n");
  RunConfig b = a;
  a.out_dir = (fs::temp_directory_path() / "blowup_det_a").string();
  b.out_dir = (fs::temp_directory_path() / "blowup_det_b").string();
  a.threads = 1;
  run_pipeline(a);
  run_pipeline(b);
  int compared = 0;
  for (const auto& e : fs::directory_iterator(a.out_dir)) {
    if (e.path().extension() != ".csv") continue;
    CHECK_MESSAGE(slurp(e.path()) == slurp(fs::path(b.out_dir) / e.path().filename()), e.path().filename());
    ++compared;
  }
  CHECK(compared >= 6);
  auto ja = nlohmann::json::parse(slurp(fs::path(a.out_dir) / "manifest.json"));
  auto jb = nlohmann::json::parse(slurp(fs::path(b.out_dir) / "manifest.json"));
  for (auto* j : {&ja, &jb}) {
    j->erase("timings");
    j->erase("config");
  }
  CHECK(ja == jb);
}

TEST_CASE("tilted surface records the boosted coefficient") {
  RunConfig c = parse_config("[surface]\ncatalog = tilt:0.5\n[grid]\nn_y = 16\n[verify]\nwindow_half = 0.1\n");
  c.out_dir = (fs::temp_directory_path() / "blowup_pipeline_tilt").string();
  const RunManifest m = run_pipeline(c);
  CHECK(m.exit_code == kExitOk);
  CHECK(m.diagnostics["verify"]["blowup_coefficient_mid"].get<double>() == doctest::Approx(0.9086).epsilon(1e-4));
}

TEST_CASE("stage selection and failures map to exit codes") {
  RunConfig c = flat_config("blowup_pipeline_stages");
  c.stages = {"kernel-selftest"};
  RunManifest m = run_pipeline(c);
  CHECK(m.exit_code == kExitOk);
  CHECK(m.timings.count("kernel-selftest"));
  CHECK_FALSE(m.timings.count("map"));
  CHECK_FALSE(m.timings.count("solve"));
  CHECK_FALSE(fs::exists(fs::path(c.out_dir) / "solution_sy.csv"));

  // a window wider than the solved layer cannot host the leapfrog line
  RunConfig t = parse_config("[surface]\ncatalog = tilt:0.5\n[grid]\nn_y = 16\n");
  t.out_dir = (fs::temp_directory_path() / "blowup_pipeline_window").string();
  m = run_pipeline(t);
  CHECK(m.exit_code == kExitVerification);
  CHECK(m.error.find("verify:") == 0);

  RunConfig bad = flat_config("blowup_pipeline_bad");
  bad.kind = "expression";
  bad.expression = "1 + ";
  bad.stages = {"map"};
  CHECK(run_pipeline(bad).exit_code == kExitConfig);

  bad.expression = "1.2 * x";
  CHECK(run_pipeline(bad).exit_code == kExitConfig);

  RunConfig blocked = flat_config("blowup_pipeline_blocked");
  const fs::path file = fs::temp_directory_path() / "blowup_pipeline_file";
  std::ofstream(file) << "x";
  blocked.out_dir = (file / "sub").string();
  CHECK(run_pipeline(blocked).exit_code == kExitConfig);

  CHECK(run_config("/nonexistent/run.ini").exit_code == kExitConfig);
}
