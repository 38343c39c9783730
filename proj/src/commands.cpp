#include "nhsol/commands.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <random>
#include <set>

#include "nhsol/manifest.hpp"
#include "nhsol/report.hpp"
#include "nhsol/sg_flow.hpp"
#include "nhsol/soliton.hpp"

namespace nhsol {

using nlohmann::json;

namespace {

// Geometry failure at a configured sample; exit code 3.
class SampleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A check that ran and came out negative; exit code 4.
class CheckFailed : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

const GeometryConfig& need_geometry(const RunConfig& cfg) {
  if (!cfg.space) throw ConfigError("space", "missing required section");
  if (!cfg.geometry) throw ConfigError("geometry", "missing required section");
  return *cfg.geometry;
}

const FlowConfig& need_flow(const RunConfig& cfg) {
  if (!cfg.flow) throw ConfigError("flow", "missing required section");
  return *cfg.flow;
}

std::string sample_name(std::size_t k) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "report_%04zu.json", k);
  return buf;
}

std::string snapshot_name(std::size_t k) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "snapshot_%05zu.csv", k);
  return buf;
}

// Runs the constancy check, translating failures to the exit-code contract.
ConstantCurvatureReport constancy(const RunConfig& cfg) {
  const GeometryConfig& g = need_geometry(cfg);
  if (g.points.size() < 2)
    throw ConfigError(g.sampled ? "geometry.count" : "geometry.points",
                      "constant-curvature check needs at least 2 samples");
  Geometry geo(cfg.space->space);
  try {
    return check_constant_curvature(geo, g.points, g.tol);
  } catch (const GeometryError& e) {
    throw SampleError(e.what());
  } catch (const EvalError& e) {
    throw SampleError(e.what());
  }
}

}  // namespace

int cmd_geom(const RunConfig& cfg, OutputDir& dir, std::ostream& out) {
  const GeometryConfig& g = need_geometry(cfg);
  Geometry geo(cfg.space->space);
  std::string summary = "sample";
  for (int i = 0; i < cfg.space->n; ++i) summary += ",x" + std::to_string(i + 1);
  for (int a = 0; a < cfg.space->m; ++a) summary += ",y" + std::to_string(a + 1);
  summary += ",R_fwd,S_bwd,total,max_abs_N,max_abs_R,max_abs_P,max_abs_S\n";
  for (std::size_t k = 0; k < g.points.size(); ++k) {
    GeometryReport r;
    try {
      r = geo.report(g.points[k]);
    } catch (const GeometryError& e) {
      throw SampleError("sample " + std::to_string(k) + ": " + e.what());
    } catch (const EvalError& e) {
      throw SampleError("sample " + std::to_string(k) + ": " + e.what());
    }
    if (cfg.output.json) dir.write(sample_name(k), to_json(r).dump(2) + "\n");
    summary += std::to_string(k);
    for (double x : r.point.x) summary += "," + format_double(x);
    for (double y : r.point.y) summary += "," + format_double(y);
    for (double v : {r.ricci.R_fwd, r.ricci.S_bwd, r.ricci.total, max_abs(r.N), max_abs(r.curvature.R),
                     max_abs(r.curvature.P), max_abs(r.curvature.S)})
      summary += "," + format_double(v);
    summary += "\n";
  }
  if (cfg.output.csv) dir.write("geometry_summary.csv", summary);
  dir.stage("geom", "ok", std::to_string(g.points.size()) + " samples");
  out << "geom: " << g.points.size() << " sample(s) written to " << dir.path().string() << "\n";
  return kExitOk;
}

int cmd_check_constant(const RunConfig& cfg, OutputDir& dir, std::ostream& out) {
  const ConstantCurvatureReport rep = constancy(cfg);
  dir.write("constant_curvature.json", to_json(rep).dump(2) + "\n");
  dir.stage("check-constant", rep.constant ? "ok" : "failed",
            rep.constant ? "constant within tol" : "curvature varies across samples");
  out << "check-constant: " << (rep.constant ? "constant" : "NOT constant") << " (tol "
      << format_double(rep.tol) << ")\n";
  for (const auto& c : rep.classes)
    out << "  " << c.name << ": max deviation " << format_double(c.max_deviation) << "\n";
  return rep.constant ? kExitOk : kExitCheckFailed;
}

namespace {

json run_metadata(const FlowConfig& f, double R_const, double dt, long long steps,
                  long long every) {
  json j;
  j["grid"] = {{"n_pts", f.grid.n_pts}, {"length", f.grid.length}, {"dl", f.grid.dl()}};
  j["level"] = f.level;
  j["side"] = std::string(1, f.side);
  j["p"] = f.p;
  j["constants"] = {{"R_const", R_const},
                    {"source", f.source == CurvatureSource::Manual ? "manual" : "from-geometry"}};
  j["integrator"] = {{"scheme", "rk4"},
                     {"dt", dt},
                     {"dt_mode", f.dt ? "fixed" : "auto"},
                     {"dt_factor", f.dt_factor},
                     {"steps", steps},
                     {"t_end", f.t_end},
                     {"snapshot_every_steps", every},
                     {"gauge", to_string(f.gauge)}};
  j["initial"] = f.initial_text;
  if (f.level == -1) {
    j["frame0"] = std::vector<double>(f.anchor.data(), f.anchor.data() + f.anchor.size());
    j["integrator"]["frame"] = "magnus4";
  }
  return j;
}

}  // namespace

int cmd_flow(const RunConfig& cfg, OutputDir& dir, std::ostream& out) {
  const FlowConfig& f = need_flow(cfg);

  double R_const = f.R_const;
  if (f.source == CurvatureSource::FromGeometry) {
    const ConstantCurvatureReport rep = constancy(cfg);
    dir.write("constant_curvature.json", to_json(rep).dump(2) + "\n");
    if (!rep.constant) {
      dir.stage("check-constant", "failed", "curvature varies across samples");
      dir.stage("flow", "skipped");
      out << "flow: curvature is not constant on the samples, flow not run\n";
      return kExitCheckFailed;
    }
    dir.stage("check-constant", "ok");
    R_const = f.side == 'h' ? rep.R_fwd : rep.S_bwd;
  }

  const Field v0 = initial_field(f);
  const double dt_target = f.dt ? *f.dt : auto_dt(f.grid, f.level < 0 ? 0 : f.level, f.dt_factor);
  const long long steps = std::max<long long>(1, static_cast<long long>(std::ceil(f.t_end / dt_target - 1e-9)));
  const double dt = f.t_end / static_cast<double>(steps);
  const long long every =
      std::max<long long>(1, std::llround(f.snapshot_interval / dt));

  const Engine eng(f.grid, f.gauge);
  std::vector<DiagnosticsRow> diag;
  std::size_t snap = 0;
  const bool frame = f.level == -1;

  const auto flush = [&](const std::string& status, const std::string& detail) {
    dir.write("diagnostics.csv", diagnostics_csv(diag, frame));
    json meta = run_metadata(f, R_const, dt, steps, every);
    meta["status"] = status;
    if (!detail.empty()) meta["detail"] = detail;
    meta["snapshots"] = snap;
    dir.write("run.json", meta.dump(2) + "\n");
  };

  VectorField1D v{f.grid, v0};
  FrameFlowState fr;
  if (frame) fr = reconstruct_frame(eng.spectral(), v0, f.anchor);
  double tau = 0.0;

  const auto record = [&](const Field& values, double t, const FrameFlowState* fs) {
    DiagnosticsRow row;
    row.h = hamiltonian_record(eng, values, t);
    if (fs) {
      row.frame = true;
      row.constraint_residual = fs->constraint_residual;
      row.closure_mismatch = fs->closure_mismatch;
    }
    diag.push_back(row);
    dir.write(snapshot_name(snap++), snapshot_csv(f.grid, values));
  };
  record(v.values, tau, frame ? &fr : nullptr);

  FlowState st;
  st.v = v;
  st.level = f.level;
  st.R_const = R_const;
  st.gauge = f.gauge;
  st.record_interval = 1e300;  // diagnostics are taken at snapshot steps below

  for (long long s = 1; s <= steps; ++s) {
    const double t_next = f.t_end * static_cast<double>(s) / static_cast<double>(steps);
    try {
      if (frame) {
        auto [nv, nf] = sg_flow_step(eng.spectral(), v, fr, R_const, dt);
        const double peak = nv.values.cwiseAbs().maxCoeff();
        if (!std::isfinite(peak) || peak > 1e8)
          throw Diverged("flow diverged at tau = " + std::to_string(t_next), FlowState{});
        v = std::move(nv);
        fr = std::move(nf);
      } else {
        st = step(eng, st, dt);
        v = st.v;
      }
    } catch (const Diverged& e) {
      dir.write("snapshot_last_good.csv", snapshot_csv(f.grid, v.values));
      flush("diverged", e.what());
      dir.stage("flow", "diverged", e.what());
      out << "flow: " << e.what() << "; last good state at tau = " << format_double(tau) << "\n";
      return kExitDiverged;
    } catch (const FrameConstraintError& e) {
      dir.write("snapshot_last_good.csv", snapshot_csv(f.grid, v.values));
      flush("diverged", e.what());
      dir.stage("flow", "diverged", e.what());
      out << "flow: " << e.what() << "; last good state at tau = " << format_double(tau) << "\n";
      return kExitDiverged;
    }
    tau = t_next;
    st.tau = tau;
    if (s % every == 0 || s == steps) record(v.values, tau, frame ? &fr : nullptr);
  }
  flush("ok", "");
  dir.stage("flow", "ok", std::to_string(steps) + " steps");

  const auto& first = diag.front().h;
  const auto& last = diag.back().h;
  const auto rel = [](double a, double b) { return std::abs(b - a) / std::max(std::abs(a), 1e-300); };
  out << "flow: level " << f.level << ", " << steps << " steps of dt " << format_double(dt) << ", "
      << snap << " snapshots\n";
  out << "  relative drift H0 " << format_double(rel(first.H0, last.H0)) << ", H1 "
      << format_double(rel(first.H1, last.H1)) << ", H2 printed "
      << format_double(rel(first.H2_printed, last.H2_printed)) << ", H2 periodic "
      << format_double(rel(first.H2_periodic, last.H2_periodic)) << "\n";
  if (frame)
    out << "  frame constraint " << format_double(fr.constraint_residual) << ", closure mismatch "
        << format_double(fr.closure_mismatch) << "\n";
  return kExitOk;
}

int cmd_identity_check(const RunConfig& cfg, OutputDir& dir, std::ostream& out) {
  const FlowConfig& f = need_flow(cfg);
  const IdentityReport rep = run_identity_battery(f.grid, f.p, f.gauge, cfg.identity);
  json j;
  j["grid"] = {{"n_pts", f.grid.n_pts}, {"length", f.grid.length}};
  j["p"] = f.p;
  j["gauge"] = to_string(f.gauge);
  j["seed"] = cfg.identity.seed;
  j["all_pass"] = rep.all_pass;
  j["identities"] = json::array();
  for (const auto& r : rep.results) {
    json e{{"name", r.name}, {"residual", r.residual}, {"tol", r.tol}, {"pass", r.pass}};
    if (!r.note.empty()) e["note"] = r.note;
    j["identities"].push_back(e);
    out << (r.pass ? "  pass " : "  FAIL ") << r.name << ": " << format_double(r.residual)
        << " (tol " << format_double(r.tol) << ")" << (r.note.empty() ? "" : "  [" + r.note + "]")
        << "\n";
  }
  dir.write("identities.json", j.dump(2) + "\n");
  std::string failing;
  for (const auto& r : rep.results)
    if (!r.pass) failing += (failing.empty() ? "" : ", ") + r.name;
  dir.stage("identity-check", rep.all_pass ? "ok" : "failed", failing);
  out << "identity-check: " << (rep.all_pass ? "all pass" : "failed: " + failing) << "\n";
  return rep.all_pass ? kExitOk : kExitCheckFailed;
}

namespace {

int dispatch(const std::string& command, const RunConfig& cfg, OutputDir& dir, std::ostream& out) {
  if (command == "geom") return cmd_geom(cfg, dir, out);
  if (command == "check-constant") return cmd_check_constant(cfg, dir, out);
  if (command == "flow") return cmd_flow(cfg, dir, out);
  if (command == "identity-check") return cmd_identity_check(cfg, dir, out);
  throw std::invalid_argument("unknown command " + command);
}

json overrides_json(const Overrides& ov) {
  json j = json::object();
  if (ov.tol) j["tol"] = *ov.tol;
  if (ov.seed) j["seed"] = *ov.seed;
  return j;
}

// Runs the command into `dir_path` and writes the manifest; returns the exit code.
int execute(const std::string& command, const RunConfig& cfg, const Overrides& ov,
            const std::filesystem::path& dir_path, std::ostream& out, std::ostream& err) {
  const auto t0 = std::chrono::steady_clock::now();
  OutputDir dir(dir_path);
  int code = kExitInternal;
  try {
    code = dispatch(command, cfg, dir, out);
  } catch (const ConfigError& e) {
    err << e.what() << "\n";
    dir.stage(command, "failed", e.what());
    code = kExitConfig;
  } catch (const SampleError& e) {
    err << "geometry error: " << e.what() << "\n";
    dir.stage(command, "failed", e.what());
    code = kExitGeometry;
  } catch (const FrameConstraintError& e) {
    err << "frame error: " << e.what() << "\n";
    dir.stage(command, "failed", e.what());
    code = kExitCheckFailed;
  }
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  json run;
  run["command"] = command;
  run["config"] = cfg.raw;
  run["overrides"] = overrides_json(ov);
  run["exit_code"] = code;
  dir.write_manifest(run, wall);
  return code;
}

std::filesystem::path scratch_dir() {
  std::random_device rd;
  for (int attempt = 0; attempt < 100; ++attempt) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "nhsol-verify-%08x", static_cast<unsigned>(rd()));
    auto p = std::filesystem::temp_directory_path() / buf;
    if (std::filesystem::create_directory(p)) return p;
  }
  throw std::runtime_error("cannot create a scratch directory");
}

int verify(const std::string& command, const CommandOptions& opts, std::ostream& out,
           std::ostream& err) {
  RunConfig probe = load_config_file(opts.config, opts.overrides);
  const auto manifest_path = probe.output.directory / kManifestName;
  std::ifstream in(manifest_path);
  if (!in) {
    err << "verify: no manifest at " << manifest_path.string() << "\n";
    return kExitConfig;
  }
  json manifest;
  try {
    manifest = json::parse(in);
  } catch (const json::parse_error& e) {
    err << "verify: unreadable manifest: " << e.what() << "\n";
    return kExitConfig;
  }
  if (manifest.value("command", "") != command) {
    err << "verify: manifest was produced by `" << manifest.value("command", "?") << "`, not `"
        << command << "`\n";
    return kExitConfig;
  }
  // Re-run with the overrides recorded in the manifest.
  Overrides ov = opts.overrides;
  const json& rec = manifest.value("overrides", json::object());
  if (rec.contains("tol")) ov.tol = rec["tol"].get<double>();
  if (rec.contains("seed")) ov.seed = rec["seed"].get<std::uint64_t>();
  const RunConfig cfg = load_config_file(opts.config, ov);

  const auto scratch = scratch_dir();
  std::ostringstream sink;
  const int code = execute(command, cfg, ov, scratch, sink, sink);

  int mismatches = 0;
  std::set<std::string> seen;
  for (const auto& f : manifest.value("files", json::array())) {
    const std::string name = f.value("path", "");
    seen.insert(name);
    const auto orig = probe.output.directory / name;
    const auto fresh = scratch / name;
    const std::string want = f.value("sha256", "");
    std::string have_orig, have_fresh;
    try {
      have_orig = sha256_file(orig);
    } catch (const std::exception&) {
      have_orig = "missing";
    }
    try {
      have_fresh = sha256_file(fresh);
    } catch (const std::exception&) {
      have_fresh = "missing";
    }
    if (have_orig != want) {
      out << "  changed on disk: " << name << "\n";
      ++mismatches;
    }
    if (have_fresh != want) {
      out << "  re-run differs: " << name << "\n";
      ++mismatches;
    }
  }
  for (const auto& e : std::filesystem::directory_iterator(scratch)) {
    const std::string name = e.path().filename().string();
    if (name != kManifestName && !seen.count(name)) {
      out << "  not in manifest: " << name << "\n";
      ++mismatches;
    }
  }
  if (manifest.value("exit_code", -1) != code) {
    out << "  exit code differs: " << manifest.value("exit_code", -1) << " vs " << code << "\n";
    ++mismatches;
  }
  std::filesystem::remove_all(scratch);
  out << "verify: " << (mismatches == 0 ? "all files match" : std::to_string(mismatches) + " mismatch(es)")
      << "\n";
  return mismatches == 0 ? kExitOk : kExitCheckFailed;
}

}  // namespace

int run_command(const std::string& command, const CommandOptions& opts, std::ostream& out,
                std::ostream& err) {
  try {
    if (opts.verify) return verify(command, opts, out, err);
    const RunConfig cfg = load_config_file(opts.config, opts.overrides);
    return execute(command, cfg, opts.overrides, cfg.output.directory, out, err);
  } catch (const ConfigError& e) {
    err << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitInternal;
  }
}

}  // namespace nhsol
