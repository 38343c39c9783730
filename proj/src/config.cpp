#include "nhsol/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "nhsol/parser.hpp"
#include "nhsol/sg_flow.hpp"
#include "nhsol/soliton.hpp"

namespace nhsol {

using nlohmann::json;

namespace {

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}
std::string index(const std::string& path, std::size_t i) {
  return path + "[" + std::to_string(i) + "]";
}

// Unknown keys are rejected so typos do not silently fall back to defaults.
void only_keys(const json& obj, const std::string& path, std::set<std::string> allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!allowed.count(it.key())) throw ConfigError(join(path, it.key()), "unknown field");
}

const json& object_at(const json& parent, const std::string& path, const std::string& key) {
  const std::string p = join(path, key);
  if (!parent.contains(key)) throw ConfigError(p, "missing required field");
  const json& v = parent.at(key);
  if (!v.is_object()) throw ConfigError(p, "expected an object");
  return v;
}

double number(const json& v, const std::string& path) {
  if (!v.is_number()) throw ConfigError(path, "expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw ConfigError(path, "expected a finite number");
  return d;
}

double number_at(const json& obj, const std::string& path, const std::string& key,
                 std::optional<double> fallback = std::nullopt) {
  if (!obj.contains(key)) {
    if (fallback) return *fallback;
    throw ConfigError(join(path, key), "missing required field");
  }
  return number(obj.at(key), join(path, key));
}

long long integer(const json& v, const std::string& path) {
  if (!v.is_number_integer()) throw ConfigError(path, "expected an integer");
  return v.get<long long>();
}

std::string string_at(const json& obj, const std::string& path, const std::string& key,
                      std::optional<std::string> fallback = std::nullopt) {
  if (!obj.contains(key)) {
    if (fallback) return *fallback;
    throw ConfigError(join(path, key), "missing required field");
  }
  const json& v = obj.at(key);
  if (!v.is_string()) throw ConfigError(join(path, key), "expected a string");
  return v.get<std::string>();
}

std::uint64_t seed_value(const json& v, const std::string& path) {
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0))
    throw ConfigError(path, "expected a non-negative integer");
  return v.get<std::uint64_t>();
}

Expr expr_value(const json& v, const std::string& path, const ParseOptions& opts) {
  if (v.is_number()) return Expr(number(v, path));
  if (!v.is_string()) throw ConfigError(path, "expected a number or an expression string");
  try {
    return parse_expr(v.get<std::string>(), opts);
  } catch (const ParseError& e) {
    throw ConfigError(path, e.what());
  }
}

ExprMat expr_matrix(const json& v, const std::string& path, std::size_t rows, std::size_t cols,
                    const ParseOptions& opts) {
  if (!v.is_array() || v.size() != rows)
    throw ConfigError(path, "expected " + std::to_string(rows) + " rows");
  ExprMat out(rows, ExprVec(cols));
  for (std::size_t i = 0; i < rows; ++i) {
    const json& row = v[i];
    if (!row.is_array() || row.size() != cols)
      throw ConfigError(index(path, i), "expected " + std::to_string(cols) + " entries");
    for (std::size_t j = 0; j < cols; ++j) out[i][j] = expr_value(row[j], index(index(path, i), j), opts);
  }
  return out;
}

Mat number_matrix(const json& v, const std::string& path, std::size_t rows, std::size_t cols) {
  if (!v.is_array() || v.size() != rows)
    throw ConfigError(path, "expected " + std::to_string(rows) + " rows");
  Mat out = zeros(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    const json& row = v[i];
    if (!row.is_array() || row.size() != cols)
      throw ConfigError(index(path, i), "expected " + std::to_string(cols) + " entries");
    for (std::size_t j = 0; j < cols; ++j) out[i][j] = number(row[j], index(index(path, i), j));
  }
  return out;
}

Vec number_vector(const json& v, const std::string& path, std::size_t size) {
  if (!v.is_array() || v.size() != size)
    throw ConfigError(path, "expected " + std::to_string(size) + " numbers");
  Vec out(size);
  for (std::size_t i = 0; i < size; ++i) out[i] = number(v[i], index(path, i));
  return out;
}

// Geometry-level failures during construction (e.g. asymmetric blocks) are
// configuration problems, so they surface as exit code 2 with the field.
template <class F>
auto build_or_config_error(const std::string& path, F&& f) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(path, e.what());
  } catch (const GeometryError& e) {
    throw ConfigError(path, e.what());
  }
}

SpaceConfig parse_space(const json& s) {
  const std::string P = "space";
  SpaceConfig out;
  out.kind = string_at(s, P, "kind");
  const auto dim = [&](const char* key) -> int {
    const std::string p = join(P, key);
    if (!s.contains(key)) throw ConfigError(p, "missing required field");
    const long long v = integer(s.at(key), p);
    if (v < 1 || v > 16) throw ConfigError(p, "dimension must be in 1..16");
    return static_cast<int>(v);
  };

  if (out.kind == "lagrangian_expr") {
    only_keys(s, P, {"kind", "n", "m", "lagrangian"});
    out.n = dim("n");
    out.m = dim("m");
    const std::string src = string_at(s, P, "lagrangian");
    LagrangianSpec spec;
    try {
      spec = parse(src, out.n, out.m);
    } catch (const ParseError& e) {
      throw ConfigError(join(P, "lagrangian"), e.what());
    } catch (const std::invalid_argument& e) {
      throw ConfigError(join(P, "n"), e.what());
    }
    if (out.m != out.n)
      throw ConfigError(join(P, "m"), "Lagrangian geometry needs m == n (tangent bundle)");
    out.space = build_or_config_error(join(P, "lagrangian"), [&] { return lagrangian_space(spec); });
  } else if (out.kind == "flat_lift") {
    only_keys(s, P, {"kind", "n", "m", "base_metric", "mode"});
    out.n = dim("n");
    out.m = s.contains("m") ? dim("m") : out.n;
    if (out.m != out.n) throw ConfigError(join(P, "m"), "flat lift needs m == n");
    const std::string mode = string_at(s, P, "mode", "tangent");
    if (mode != "tangent" && mode != "vector")
      throw ConfigError(join(P, "mode"), "expected \"tangent\" or \"vector\"");
    if (!s.contains("base_metric")) throw ConfigError(join(P, "base_metric"), "missing required field");
    ParseOptions opts{out.n, out.m, {}};
    const ExprMat g = expr_matrix(s.at("base_metric"), join(P, "base_metric"), out.n, out.n, opts);
    for (const auto& row : g)
      for (const auto& e : row)
        if (var_extent(e).fiber > 0)
          throw ConfigError(join(P, "base_metric"), "base metric may depend on x only");
    out.space = build_or_config_error(join(P, "base_metric"), [&] {
      return build_flat_lift(g, mode == "tangent" ? BundleMode::Tangent : BundleMode::Vector);
    });
  } else if (out.kind == "em") {
    only_keys(s, P, {"kind", "n", "m", "a", "A", "m0", "e0"});
    out.n = dim("n");
    out.m = s.contains("m") ? dim("m") : out.n;
    if (out.m != out.n) throw ConfigError(join(P, "m"), "electromagnetic space needs m == n");
    if (!s.contains("a")) throw ConfigError(join(P, "a"), "missing required field");
    if (!s.contains("A")) throw ConfigError(join(P, "A"), "missing required field");
    ParseOptions base_only{out.n, out.n, {}};
    const ExprMat a = expr_matrix(s.at("a"), join(P, "a"), out.n, out.n, base_only);
    const json& Aj = s.at("A");
    if (!Aj.is_array() || Aj.size() != static_cast<std::size_t>(out.n))
      throw ConfigError(join(P, "A"), "expected " + std::to_string(out.n) + " entries");
    ExprVec A(out.n);
    for (int i = 0; i < out.n; ++i) A[i] = expr_value(Aj[i], index(join(P, "A"), i), base_only);
    for (const auto& row : a)
      for (const auto& e : row)
        if (var_extent(e).fiber > 0) throw ConfigError(join(P, "a"), "a_ij may depend on x only");
    for (const auto& e : A)
      if (var_extent(e).fiber > 0) throw ConfigError(join(P, "A"), "A_i may depend on x only");
    const double m0 = number_at(s, P, "m0", 1.0);
    const double e0 = number_at(s, P, "e0", 1.0);
    if (m0 == 0.0) throw ConfigError(join(P, "m0"), "mass must be nonzero");
    out.space = build_or_config_error(P, [&] { return build_em_space(a, A, m0, e0).space; });
  } else if (out.kind == "constant_dmetric") {
    only_keys(s, P, {"kind", "n", "m", "g", "h", "N"});
    out.n = dim("n");
    out.m = dim("m");
    for (const char* k : {"g", "h", "N"})
      if (!s.contains(k)) throw ConfigError(join(P, k), "missing required field");
    const Mat g = number_matrix(s.at("g"), join(P, "g"), out.n, out.n);
    const Mat h = number_matrix(s.at("h"), join(P, "h"), out.m, out.m);
    const ExprMat N = expr_matrix(s.at("N"), join(P, "N"), out.m, out.n, ParseOptions{out.n, out.m, {}});
    out.space = build_or_config_error(P, [&] { return build_constant_dmetric(g, h, N); });
  } else {
    throw ConfigError(join(P, "kind"),
                      "expected one of lagrangian_expr, flat_lift, em, constant_dmetric");
  }
  return out;
}

GeometryConfig parse_geometry(const json& s, const SpaceConfig* space, const Overrides& ov) {
  const std::string P = "geometry";
  only_keys(s, P, {"points", "box", "count", "seed", "tol"});
  if (!space) throw ConfigError("space", "geometry section needs a space section");
  GeometryConfig out;
  out.tol = number_at(s, P, "tol", 1e-6);
  if (!(out.tol > 0.0)) throw ConfigError(join(P, "tol"), "tolerance must be positive");
  if (ov.tol) out.tol = *ov.tol;
  const std::size_t n = static_cast<std::size_t>(space->n);
  const std::size_t m = static_cast<std::size_t>(space->m);

  const bool has_points = s.contains("points");
  const bool has_box = s.contains("box");
  if (has_points == has_box)
    throw ConfigError(join(P, "points"), "give exactly one of `points` or `box`");

  if (has_points) {
    const json& pts = s.at("points");
    const std::string pp = join(P, "points");
    if (!pts.is_array() || pts.empty()) throw ConfigError(pp, "expected a non-empty array");
    for (std::size_t k = 0; k < pts.size(); ++k) {
      const std::string kp = index(pp, k);
      if (!pts[k].is_object()) throw ConfigError(kp, "expected an object with x and y");
      only_keys(pts[k], kp, {"x", "y"});
      if (!pts[k].contains("x")) throw ConfigError(join(kp, "x"), "missing required field");
      if (!pts[k].contains("y")) throw ConfigError(join(kp, "y"), "missing required field");
      BundlePoint bp;
      bp.x = number_vector(pts[k].at("x"), join(kp, "x"), n);
      bp.y = number_vector(pts[k].at("y"), join(kp, "y"), m);
      out.points.push_back(std::move(bp));
    }
    return out;
  }

  const json& box = s.at("box");
  const std::string bp = join(P, "box");
  if (!box.is_object()) throw ConfigError(bp, "expected an object with x and y ranges");
  only_keys(box, bp, {"x", "y"});
  const auto ranges = [&](const char* key, std::size_t count) {
    const std::string rp = join(bp, key);
    if (!box.contains(key)) throw ConfigError(rp, "missing required field");
    const Mat r = number_matrix(box.at(key), rp, count, 2);
    for (std::size_t i = 0; i < count; ++i)
      if (!(r[i][0] <= r[i][1])) throw ConfigError(index(rp, i), "expected [lo, hi] with lo <= hi");
    return r;
  };
  const Mat xr = ranges("x", n);
  const Mat yr = ranges("y", m);
  if (!s.contains("count")) throw ConfigError(join(P, "count"), "missing required field");
  const long long count = integer(s.at("count"), join(P, "count"));
  if (count < 1 || count > 100000) throw ConfigError(join(P, "count"), "expected 1..100000");
  out.seed = s.contains("seed") ? seed_value(s.at("seed"), join(P, "seed")) : 0;
  if (ov.seed) out.seed = *ov.seed;
  out.sampled = true;
  Rng rng(out.seed);
  for (long long k = 0; k < count; ++k) {
    BundlePoint p;
    for (std::size_t i = 0; i < n; ++i) p.x.push_back(rng.uniform(xr[i][0], xr[i][1]));
    for (std::size_t a = 0; a < m; ++a) p.y.push_back(rng.uniform(yr[a][0], yr[a][1]));
    out.points.push_back(std::move(p));
  }
  return out;
}

FlowConfig parse_flow(const json& s, const SpaceConfig* space) {
  const std::string P = "flow";
  only_keys(s, P, {"side", "level", "p", "n_pts", "length", "dt", "dt_factor", "t_end",
                   "snapshot_interval", "curvature", "initial", "gauge", "theta0", "frame0"});
  FlowConfig out;

  if (!s.contains("level")) throw ConfigError(join(P, "level"), "missing required field");
  const long long level = integer(s.at("level"), join(P, "level"));
  if (level < -1 || level > 2) throw ConfigError(join(P, "level"), "level must be one of -1, 0, 1, 2");
  out.level = static_cast<int>(level);

  const std::string side = string_at(s, P, "side", "h");
  if (side != "h" && side != "v") throw ConfigError(join(P, "side"), "expected \"h\" or \"v\"");
  out.side = side[0];

  if (s.contains("p")) {
    const long long p = integer(s.at("p"), join(P, "p"));
    if (p < 1 || p > 15) throw ConfigError(join(P, "p"), "expected 1..15");
    out.p = static_cast<int>(p);
  }
  if (space) {
    const int derived = (out.side == 'h' ? space->n : space->m) - 1;
    if (derived < 1) throw ConfigError(join(P, "side"), "this side has dimension 1, no flow field");
    if (out.p != 0 && out.p != derived)
      throw ConfigError(join(P, "p"), "must equal " + std::to_string(derived) + " for this space");
    out.p = derived;
  }
  if (out.p == 0) throw ConfigError(join(P, "p"), "missing: give `p` or a space section");

  if (!s.contains("n_pts")) throw ConfigError(join(P, "n_pts"), "missing required field");
  const long long np = integer(s.at("n_pts"), join(P, "n_pts"));
  if (np < 16 || np > (1 << 20) || (np & (np - 1)) != 0)
    throw ConfigError(join(P, "n_pts"), "must be a power of two >= 16");
  out.grid.n_pts = static_cast<int>(np);
  out.grid.length = number_at(s, P, "length");
  if (!(out.grid.length > 0.0)) throw ConfigError(join(P, "length"), "must be positive");

  out.t_end = number_at(s, P, "t_end");
  if (!(out.t_end > 0.0)) throw ConfigError(join(P, "t_end"), "must be positive");
  out.dt_factor = number_at(s, P, "dt_factor", 0.05);
  if (!(out.dt_factor > 0.0)) throw ConfigError(join(P, "dt_factor"), "must be positive");
  if (s.contains("dt")) {
    const json& d = s.at("dt");
    if (d.is_string()) {
      if (d.get<std::string>() != "auto") throw ConfigError(join(P, "dt"), "expected a number or \"auto\"");
    } else {
      out.dt = number(d, join(P, "dt"));
      if (!(*out.dt > 0.0)) throw ConfigError(join(P, "dt"), "must be positive");
    }
  }
  out.snapshot_interval = number_at(s, P, "snapshot_interval", out.t_end / 10.0);
  if (!(out.snapshot_interval > 0.0))
    throw ConfigError(join(P, "snapshot_interval"), "must be positive");

  const std::string gauge = string_at(s, P, "gauge", "line");
  if (gauge == "line") {
    out.gauge = Gauge::Line;
  } else if (gauge == "zero_mean") {
    out.gauge = Gauge::ZeroMean;
  } else {
    throw ConfigError(join(P, "gauge"), "expected \"line\" or \"zero_mean\"");
  }

  if (s.contains("curvature")) {
    const std::string cp = join(P, "curvature");
    const json& c = s.at("curvature");
    if (!c.is_object()) throw ConfigError(cp, "expected an object");
    only_keys(c, cp, {"source", "value"});
    const std::string src = string_at(c, cp, "source");
    if (src == "manual") {
      out.source = CurvatureSource::Manual;
      out.R_const = number_at(c, cp, "value");
    } else if (src == "from-geometry") {
      out.source = CurvatureSource::FromGeometry;
      if (c.contains("value")) throw ConfigError(join(cp, "value"), "not allowed with from-geometry");
      if (!space) throw ConfigError(join(cp, "source"), "from-geometry needs a space section");
    } else {
      throw ConfigError(join(cp, "source"), "expected \"manual\" or \"from-geometry\"");
    }
  }

  const std::string ip = join(P, "initial");
  if (!s.contains("initial")) throw ConfigError(ip, "missing required field");
  const json& init = s.at("initial");
  if (!init.is_array() || init.size() != static_cast<std::size_t>(out.p))
    throw ConfigError(ip, "expected " + std::to_string(out.p) + " expressions in l");
  ParseOptions opts;
  opts.max_base = 2;
  opts.max_fiber = 0;
  opts.aliases = {{"l", Var::x(0)}, {"Lambda", Var::x(1)}};
  for (std::size_t c = 0; c < init.size(); ++c) {
    out.initial.push_back(expr_value(init[c], index(ip, c), opts));
    out.initial_text.push_back(init[c].is_string() ? init[c].get<std::string>() : init[c].dump());
    if (var_extent(out.initial.back()).fiber > 0)
      throw ConfigError(index(ip, c), "initial data may depend on l and Lambda only");
  }

  if (s.contains("frame0") && s.contains("theta0"))
    throw ConfigError(join(P, "frame0"), "give at most one of theta0 and frame0");
  if (s.contains("frame0")) {
    const Vec f = number_vector(s.at("frame0"), join(P, "frame0"), static_cast<std::size_t>(out.p + 1));
    out.anchor = Eigen::Map<const Eigen::VectorXd>(f.data(), static_cast<Eigen::Index>(f.size()));
    if (std::abs(out.anchor.squaredNorm() - 1.0) > 1e-6)
      throw ConfigError(join(P, "frame0"), "frame must satisfy e_par^2 + |e_perp|^2 = 1 to 1e-6");
  } else {
    out.anchor = default_anchor(out.p, number_at(s, P, "theta0", 0.0));
  }
  return out;
}

IdentityConfig parse_identity(const json& s, const Overrides& ov) {
  const std::string P = "identity";
  only_keys(s, P, {"samples", "skew_pairs", "seed", "lambda", "tol"});
  IdentityConfig out;
  if (s.contains("samples")) {
    const long long v = integer(s.at("samples"), join(P, "samples"));
    if (v < 1 || v > 10000) throw ConfigError(join(P, "samples"), "expected 1..10000");
    out.samples = static_cast<int>(v);
  }
  if (s.contains("skew_pairs")) {
    const long long v = integer(s.at("skew_pairs"), join(P, "skew_pairs"));
    if (v < 1 || v > 10000) throw ConfigError(join(P, "skew_pairs"), "expected 1..10000");
    out.skew_pairs = static_cast<int>(v);
  }
  if (s.contains("seed")) out.seed = seed_value(s.at("seed"), join(P, "seed"));
  out.lambda = number_at(s, P, "lambda", 2.0);
  if (!(out.lambda > 0.0)) throw ConfigError(join(P, "lambda"), "must be positive");
  if (s.contains("tol")) {
    const std::string tp = join(P, "tol");
    const json& t = s.at("tol");
    if (!t.is_object()) throw ConfigError(tp, "expected an object");
    only_keys(t, tp, {"recursion", "skew", "composition", "scaling", "variational0", "variational1"});
    const auto tol = [&](const char* key, double& field) {
      field = number_at(t, tp, key, field);
      if (!(field > 0.0)) throw ConfigError(join(tp, key), "must be positive");
    };
    tol("recursion", out.tol_recursion);
    tol("skew", out.tol_skew);
    tol("composition", out.tol_composition);
    tol("scaling", out.tol_scaling);
    tol("variational0", out.tol_variational0);
    tol("variational1", out.tol_variational1);
  }
  if (ov.seed) out.seed = *ov.seed;
  if (ov.tol) {
    out.tol_recursion = out.tol_skew = out.tol_composition = out.tol_scaling = *ov.tol;
    out.tol_variational0 = out.tol_variational1 = *ov.tol;
  }
  return out;
}

OutputConfig parse_output(const json& s) {
  const std::string P = "output";
  only_keys(s, P, {"directory", "formats"});
  OutputConfig out;
  out.directory = string_at(s, P, "directory", "out");
  if (out.directory.empty()) throw ConfigError(join(P, "directory"), "must not be empty");
  if (s.contains("formats")) {
    const json& f = s.at("formats");
    const std::string fp = join(P, "formats");
    if (!f.is_array() || f.empty()) throw ConfigError(fp, "expected a non-empty array");
    out.json = out.csv = false;
    for (std::size_t i = 0; i < f.size(); ++i) {
      if (!f[i].is_string()) throw ConfigError(index(fp, i), "expected a string");
      const std::string v = f[i].get<std::string>();
      if (v == "json") {
        out.json = true;
      } else if (v == "csv") {
        out.csv = true;
      } else {
        throw ConfigError(index(fp, i), "expected \"json\" or \"csv\"");
      }
    }
  }
  return out;
}

}  // namespace

RunConfig load_config(const json& doc, const Overrides& ov) {
  if (!doc.is_object()) throw ConfigError("<document>", "expected a JSON object");
  only_keys(doc, "", {"space", "geometry", "flow", "identity", "output"});
  RunConfig cfg;
  cfg.raw = doc;
  if (doc.contains("space")) cfg.space = parse_space(object_at(doc, "", "space"));
  if (doc.contains("geometry"))
    cfg.geometry = parse_geometry(object_at(doc, "", "geometry"), cfg.space ? &*cfg.space : nullptr, ov);
  if (doc.contains("flow")) cfg.flow = parse_flow(object_at(doc, "", "flow"), cfg.space ? &*cfg.space : nullptr);
  cfg.identity = parse_identity(doc.contains("identity") ? object_at(doc, "", "identity") : json::object(), ov);
  if (doc.contains("output")) cfg.output = parse_output(object_at(doc, "", "output"));
  if (ov.out) cfg.output.directory = *ov.out;
  return cfg;
}

RunConfig load_config_file(const std::filesystem::path& path, const Overrides& ov) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("<document>", "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  json doc;
  try {
    doc = json::parse(ss.str());
  } catch (const json::parse_error& e) {
    throw ConfigError("<document>", std::string("invalid JSON: ") + e.what());
  }
  return load_config(doc, ov);
}

Field initial_field(const FlowConfig& flow) {
  const int n = flow.grid.n_pts;
  Field v(n, flow.p);
  for (int j = 0; j < n; ++j) {
    const double xs[2] = {flow.grid.node(j), flow.grid.length};
    Evaluator ev(std::span<const double>(xs, 2), std::span<const double>());
    for (int c = 0; c < flow.p; ++c) {
      double val;
      try {
        val = ev(flow.initial[static_cast<std::size_t>(c)]);
      } catch (const EvalError& e) {
        throw ConfigError("flow.initial[" + std::to_string(c) + "]",
                          std::string(e.what()) + " at l = " + std::to_string(flow.grid.node(j)));
      }
      if (!std::isfinite(val))
        throw ConfigError("flow.initial[" + std::to_string(c) + "]", "non-finite value");
      v(j, c) = val;
    }
  }
  return v;
}

}  // namespace nhsol
