#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "nhsol/manifest.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string env(const char* name) {
  const char* v = std::getenv(name);
  return v ? v : "";
}

struct Result {
  int code = -1;
  std::string out, err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    bin_ = env("NHSOL_BIN");
    configs_ = env("NHSOL_CONFIGS");
    if (bin_.empty() || configs_.empty()) GTEST_SKIP() << "NHSOL_BIN / NHSOL_CONFIGS not set";
    std::random_device rd;
    tmp_ = fs::temp_directory_path() / ("nhsol-cli-" + std::to_string(rd()));
    fs::create_directories(tmp_);
  }
  void TearDown() override {
    if (!tmp_.empty()) fs::remove_all(tmp_);
  }

  fs::path config(const std::string& name) const { return fs::path(configs_) / (name + ".json"); }

  fs::path write_config(const std::string& name, const std::string& body) const {
    const fs::path p = tmp_ / (name + ".json");
    std::ofstream(p) << body;
    return p;
  }

  Result run(const std::string& args) const {
    const fs::path o = tmp_ / "stdout.txt", e = tmp_ / "stderr.txt";
    const std::string cmd = "\"" + bin_ + "\" " + args + " >\"" + o.string() + "\" 2>\"" + e.string() + "\"";
    const int st = std::system(cmd.c_str());
    Result r;
    r.code = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
    r.out = slurp(o);
    r.err = slurp(e);
    return r;
  }

  Result run(const std::string& command, const fs::path& cfg, const fs::path& out,
          const std::string& extra = "") const {
    return run(command + " --config \"" + cfg.string() + "\" --out \"" + out.string() + "\" " + extra);
  }

  std::string bin_, configs_;
  fs::path tmp_;
};

std::string first_line(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  return line;
}

std::vector<std::vector<double>> read_csv(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    std::vector<double> row;
    std::stringstream s(line);
    std::string cell;
    while (std::getline(s, cell, ',')) row.push_back(std::stod(cell));
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

TEST_F(Cli, CheckConstantOnFlatLiftSucceeds) {
  const Result r = run("check-constant", config("flat_lift"), tmp_ / "o");
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("constant"), std::string::npos);
  const json rep = json::parse(slurp(tmp_ / "o" / "constant_curvature.json"));
  EXPECT_TRUE(rep.is_object());
  EXPECT_TRUE(fs::exists(tmp_ / "o" / nhsol::kManifestName));
}

TEST_F(Cli, CurvedSpaceIsNotConstant) {
  EXPECT_EQ(run("check-constant", config("curved"), tmp_ / "a").code, 4);
  EXPECT_EQ(run("check-constant", config("em_curved"), tmp_ / "b").code, 4);
}

TEST_F(Cli, ConfigErrorsExitTwo) {
  Result r = run("flow", config("bad_level"), tmp_ / "a");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("flow.level"), std::string::npos) << r.err;

  r = run("flow");
  EXPECT_EQ(r.code, 2);

  r = run("flow", write_config("unknown", R"j({"flow": {"p": 1, "level": 0, "n_pts": 64, "length": 10,
    "t_end": 1, "initial": ["0"], "bogus": 1}})j"),
          tmp_ / "b");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("flow.bogus"), std::string::npos) << r.err;

  r = run("check-constant", write_config("single", R"j({"space": {"kind": "lagrangian_expr", "n": 2,
    "m": 2, "lagrangian": "y1^2 + y2^2"}, "geometry": {"points": [{"x": [0, 0], "y": [1, 1]}]}})j"),
          tmp_ / "c");
  EXPECT_EQ(r.code, 2);

  // a geometry-only config has no flow section
  EXPECT_EQ(run("flow", config("flat"), tmp_ / "d").code, 2);
  EXPECT_EQ(run("frobnicate --config x").code, 2);
}

TEST_F(Cli, DegenerateHessianExitsThreeAndNamesTheSample) {
  const auto cfg = write_config("degenerate", R"j({"space": {"kind": "lagrangian_expr", "n": 2, "m": 2,
    "lagrangian": "y1^2 + y1*y2 + 0.25*y2^2 + x1"},
    "geometry": {"points": [{"x": [0, 0], "y": [1, 1]}, {"x": [0.5, 0], "y": [1, 0]}]}})j");
  const Result r = run("geom", cfg, tmp_ / "o");
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("sample 0"), std::string::npos) << r.err;
  EXPECT_NE(r.err.find("degenerate"), std::string::npos) << r.err;
}

TEST_F(Cli, CoarseIdentityCheckFails) {
  const Result r = run("identity-check", config("identity_coarse"), tmp_ / "o");
  EXPECT_EQ(r.code, 4);
  EXPECT_NE(r.out.find("FAIL"), std::string::npos);
  EXPECT_EQ(run("identity-check", config("identity"), tmp_ / "p").code, 0);
}

TEST_F(Cli, DivergenceKeepsLastGoodState) {
  const auto cfg = write_config("div", R"j({"flow": {"p": 1, "level": 1, "n_pts": 64, "length": 10,
    "t_end": 1, "dt": 0.05, "initial": ["3*exp(-(l-5)^2)"]}})j");
  const Result r = run("flow", cfg, tmp_ / "o");
  EXPECT_EQ(r.code, 5);
  ASSERT_TRUE(fs::exists(tmp_ / "o" / "snapshot_last_good.csv"));
  const auto rows = read_csv(tmp_ / "o" / "snapshot_last_good.csv");
  ASSERT_EQ(rows.size(), 64u);
  for (const auto& row : rows)
    for (double x : row) EXPECT_TRUE(std::isfinite(x));
  const json run_json = json::parse(slurp(tmp_ / "o" / "run.json"));
  EXPECT_EQ(run_json["status"], "diverged");
  EXPECT_EQ(json::parse(slurp(tmp_ / "o" / nhsol::kManifestName))["exit_code"], 5);
}

TEST_F(Cli, GeometryOutputs) {
  ASSERT_EQ(run("geom", config("flat_lift"), tmp_ / "o").code, 0);
  const json rep = json::parse(slurp(tmp_ / "o" / "report_0000.json"));
  for (const char* key : {"point", "N", "W", "Gamma", "Torsion", "Curvature", "Ricci", "scalars", "dmetric"})
    EXPECT_TRUE(rep.contains(key)) << key;
  EXPECT_TRUE(fs::exists(tmp_ / "o" / "report_0015.json"));
  EXPECT_FALSE(fs::exists(tmp_ / "o" / "report_0016.json"));
  EXPECT_EQ(first_line(tmp_ / "o" / "geometry_summary.csv").rfind("sample,x1,x2,y1,y2,R_fwd,S_bwd", 0), 0u);
  EXPECT_EQ(read_csv(tmp_ / "o" / "geometry_summary.csv").size(), 16u);
}

TEST_F(Cli, FlowOutputSchemas) {
  ASSERT_EQ(run("flow", config("flow_convective"), tmp_ / "c").code, 0);
  EXPECT_EQ(first_line(tmp_ / "c" / "snapshot_00000.csv"), "l,v_1,v_2");
  EXPECT_EQ(first_line(tmp_ / "c" / "diagnostics.csv"), "tau,H0,H1,H2_printed,H2_periodic,mass_projection");
  const json meta = json::parse(slurp(tmp_ / "c" / "run.json"));
  EXPECT_EQ(meta["level"], 0);
  EXPECT_EQ(meta["integrator"]["scheme"], "rk4");

  ASSERT_EQ(run("flow", config("flow_sg"), tmp_ / "s").code, 0);
  EXPECT_EQ(first_line(tmp_ / "s" / "diagnostics.csv"),
            "tau,H0,H1,H2_printed,H2_periodic,mass_projection,constraint_residual,closure_mismatch");
  const auto diag = read_csv(tmp_ / "s" / "diagnostics.csv");
  ASSERT_EQ(diag.size(), 5u);
  for (const auto& row : diag) EXPECT_LT(row[6], 1e-6);
  EXPECT_EQ(json::parse(slurp(tmp_ / "s" / "run.json"))["integrator"]["frame"], "magnus4");
}

TEST_F(Cli, ConvectiveSnapshotIsTheShiftedInitialData) {
  ASSERT_EQ(run("flow", config("flow_convective"), tmp_ / "o").code, 0);
  const auto rows = read_csv(tmp_ / "o" / "snapshot_00002.csv");
  ASSERT_EQ(rows.size(), 128u);
  EXPECT_FALSE(fs::exists(tmp_ / "o" / "snapshot_00003.csv"));
  // v(l, 1) = v0(l + 1)
  double worst = 0;
  for (const auto& r : rows) {
    const double l = r[0] + 1.0;
    worst = std::max(worst, std::abs(r[1] - (std::sin(l) + 0.5 * std::cos(2 * l))));
    worst = std::max(worst, std::abs(r[2] - std::exp(std::cos(l))));
  }
  EXPECT_LT(worst, 1e-8);
}

TEST_F(Cli, ManifestHashesMatchFiles) {
  ASSERT_EQ(run("flow", config("flow_sg"), tmp_ / "o").code, 0);
  const json m = json::parse(slurp(tmp_ / "o" / nhsol::kManifestName));
  EXPECT_EQ(m["command"], "flow");
  EXPECT_EQ(m["exit_code"], 0);
  ASSERT_FALSE(m["files"].empty());
  std::size_t listed = 0;
  for (const auto& f : m["files"]) {
    const fs::path p = tmp_ / "o" / f["path"].get<std::string>();
    EXPECT_EQ(f["sha256"], nhsol::sha256_file(p)) << p;
    EXPECT_EQ(f["bytes"].get<std::uintmax_t>(), fs::file_size(p));
    ++listed;
  }
  std::size_t on_disk = 0;
  for (const auto& e : fs::directory_iterator(tmp_ / "o"))
    if (e.path().filename() != nhsol::kManifestName) ++on_disk;
  EXPECT_EQ(listed, on_disk);
}

TEST_F(Cli, VerifyDetectsTampering) {
  const fs::path out = tmp_ / "o";
  ASSERT_EQ(run("geom", config("flat_lift"), out).code, 0);
  Result r = run("geom", config("flat_lift"), out, "--verify");
  EXPECT_EQ(r.code, 0) << r.out << r.err;
  EXPECT_NE(r.out.find("all files match"), std::string::npos);

  std::ofstream(out / "report_0003.json", std::ios::app) << " ";
  r = run("geom", config("flat_lift"), out, "--verify");
  EXPECT_EQ(r.code, 4);
  EXPECT_NE(r.out.find("report_0003.json"), std::string::npos) << r.out;

  r = run("geom", config("flat_lift"), tmp_ / "empty", "--verify");
  EXPECT_EQ(r.code, 2);

  // a manifest from a different command is refused
  r = run("check-constant", config("flat_lift"), out, "--verify");
  EXPECT_EQ(r.code, 2);
}

TEST_F(Cli, RunsAreDeterministic) {
  for (const char* name : {"flow_mkdv", "flow_sg"}) {
    ASSERT_EQ(run("flow", config(name), tmp_ / "a").code, 0);
    ASSERT_EQ(run("flow", config(name), tmp_ / "b").code, 0);
    const json ma = json::parse(slurp(tmp_ / "a" / nhsol::kManifestName));
    const json mb = json::parse(slurp(tmp_ / "b" / nhsol::kManifestName));
    EXPECT_EQ(ma["files"], mb["files"]) << name;
    fs::remove_all(tmp_ / "a");
    fs::remove_all(tmp_ / "b");
  }
  ASSERT_EQ(run("geom", config("em"), tmp_ / "a").code, 0);
  ASSERT_EQ(run("geom", config("em"), tmp_ / "b").code, 0);
  EXPECT_EQ(json::parse(slurp(tmp_ / "a" / nhsol::kManifestName))["files"],
            json::parse(slurp(tmp_ / "b" / nhsol::kManifestName))["files"]);
}

TEST_F(Cli, SeedOverrideChangesSamples) {
  ASSERT_EQ(run("geom", config("flat_lift"), tmp_ / "a").code, 0);
  ASSERT_EQ(run("geom", config("flat_lift"), tmp_ / "b", "--seed 99").code, 0);
  EXPECT_NE(slurp(tmp_ / "a" / "geometry_summary.csv"), slurp(tmp_ / "b" / "geometry_summary.csv"));
  const json m = json::parse(slurp(tmp_ / "b" / nhsol::kManifestName));
  EXPECT_EQ(m["overrides"]["seed"], 99);
  EXPECT_EQ(run("geom", config("flat_lift"), tmp_ / "b", "--verify").code, 0);
}

TEST_F(Cli, VersionFlag) {
  const Result r = run("--version");
  EXPECT_EQ(r.code, 0);
  EXPECT_FALSE(r.out.empty());
}
