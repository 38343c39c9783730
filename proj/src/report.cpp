#include "nhsol/report.hpp"

#include <charconv>
#include <cmath>

namespace nhsol {

using nlohmann::json;

json to_json(const BundlePoint& p) { return json{{"x", p.x}, {"y", p.y}}; }

json to_json(const GeometryReport& r) {
  const bool vec = r.mode == BundleMode::Vector;
  json j;
  j["kind"] = r.kind;
  j["mode"] = to_string(r.mode);
  j["n"] = r.n;
  j["m"] = r.m;
  j["point"] = to_json(r.point);
  j["dmetric"] = {{"g", r.dmetric.g}, {"h", r.dmetric.h}, {"g_inv", r.g_inv}, {"h_inv", r.h_inv}};
  if (!r.G.empty()) j["G"] = r.G;
  j["N"] = r.N;
  j["Omega"] = r.Omega;
  j["W"] = {{"vy", r.W.W_vy}, {"hh", r.W.W_hh}};
  json gamma = {{"L_h", r.connection.L_h}, {"C_v", r.connection.C_v}};
  if (vec) {
    gamma["L_v"] = r.connection.L_v;
    gamma["C_h"] = r.connection.C_h;
  }
  j["Gamma"] = gamma;
  j["Torsion"] = {{"T_hh", r.torsion.T_hh},
                  {"T_hv", r.torsion.T_hv},
                  {"T_vhh", r.torsion.T_vhh},
                  {"T_vvh", r.torsion.T_vvh},
                  {"T_vv", r.torsion.T_vv}};
  json curv = {{"R", r.curvature.R}, {"P", r.curvature.P}, {"S", r.curvature.S}};
  if (vec) {
    curv["R_v"] = r.curvature.R_v;
    curv["P_v"] = r.curvature.P_v;
    curv["S_h"] = r.curvature.S_h;
  }
  j["Curvature"] = curv;
  j["Ricci"] = {{"R_ij", r.ricci.R_ij},
                {"R_ia", r.ricci.R_ia},
                {"R_ai", r.ricci.R_ai},
                {"S_ab", r.ricci.S_ab}};
  j["scalars"] = {{"R_fwd", r.ricci.R_fwd}, {"S_bwd", r.ricci.S_bwd}, {"total", r.ricci.total}};
  return j;
}

json to_json(const ConstantCurvatureReport& r) {
  json j;
  j["constant"] = r.constant;
  j["tol"] = r.tol;
  j["samples"] = json::array();
  for (const auto& p : r.samples) j["samples"].push_back(to_json(p));
  j["classes"] = json::array();
  for (const auto& c : r.classes)
    j["classes"].push_back({{"name", c.name}, {"max_deviation", c.max_deviation}, {"max_abs", c.max_abs}});
  j["scalars"] = {{"R_fwd", r.R_fwd},
                  {"S_bwd", r.S_bwd},
                  {"R_fwd_spread", r.R_fwd_spread},
                  {"S_bwd_spread", r.S_bwd_spread}};
  return j;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string snapshot_csv(const Grid1D& grid, const Field& v) {
  std::string out = "l";
  for (Eigen::Index c = 0; c < v.cols(); ++c) out += ",v_" + std::to_string(c + 1);
  out += '\n';
  for (int j = 0; j < grid.n_pts; ++j) {
    out += format_double(grid.node(j));
    for (Eigen::Index c = 0; c < v.cols(); ++c) {
      out += ',';
      out += format_double(v(j, c));
    }
    out += '\n';
  }
  return out;
}

std::string diagnostics_csv(const std::vector<DiagnosticsRow>& rows, bool frame_columns) {
  std::string out = "tau,H0,H1,H2_printed,H2_periodic,mass_projection";
  if (frame_columns) out += ",constraint_residual,closure_mismatch";
  out += '\n';
  for (const auto& r : rows) {
    for (double x : {r.h.tau, r.h.H0, r.h.H1, r.h.H2_printed, r.h.H2_periodic}) {
      out += format_double(x);
      out += ',';
    }
    out += format_double(r.h.mass_projection);
    if (frame_columns) {
      out += ',' + format_double(r.constraint_residual);
      out += ',' + format_double(r.closure_mismatch);
    }
    out += '\n';
  }
  return out;
}

}  // namespace nhsol
