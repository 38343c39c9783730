#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nhsol/soliton.hpp"

namespace nhsol {

struct IdentityResult {
  std::string name;
  double residual = 0;
  double tol = 0;
  bool pass = false;
  std::string note;
};

struct IdentitySettings {
  int samples = 20;      // random fields for the recursion / composition checks
  int skew_pairs = 50;
  std::uint64_t seed = 1;
  double lambda = 2.0;
  double tol_recursion = 1e-6;
  double tol_skew = 1e-8;
  double tol_composition = 1e-7;
  double tol_scaling = 1e-6;
  double tol_variational0 = 1e-6;
  double tol_variational1 = 1e-4;
};

struct IdentityReport {
  Grid1D grid;
  int p = 0;
  Gauge gauge = Gauge::Line;
  std::vector<IdentityResult> results;
  bool all_pass = false;
};

// max_k |R(v_l) - (v_3l + 3/2 |v|^2 v_l)|_inf / |v_3l|_inf over packet fields.
double recursion_identity_residual(const Engine& eng, const Field& v);

// |<Ja,b> + <a,Jb>| / (|Ja| |b| + |a| |Jb|), discrete L2 norms; same for H.
double skew_residual_J(const Engine& eng, const Field& v, const Field& a, const Field& b);
double skew_residual_H(const Engine& eng, const Field& v, const Field& a, const Field& b);

// |R e - R_expanded e|_inf / |R e|_inf
double composition_residual(const Engine& eng, const Field& v, const Field& e);

// Level-1 rhs (R_const = 0) of v / lambda on a grid lambda times longer, compared
// index-wise with lambda^-4 rhs(v); relative to |rhs(v)|_inf.
double scaling_residual(const Grid1D& grid, Gauge gauge, const Field& v, double lambda);

IdentityReport run_identity_battery(const Grid1D& grid, int p, Gauge gauge,
                                    const IdentitySettings& s);

}  // namespace nhsol
