#pragma once

#include <string>
#include <vector>

#include "nhsol/geometry.hpp"

namespace nhsol {

// A^T g A = diag(signature) per block; columns of A are the orthonormal frame
// vectors expressed in the N-adapted frame.
struct OrthoFrame {
  Mat A_h;
  Mat A_v;
  Vec signature_h;
  Vec signature_v;
};

// Cholesky-style factor of one symmetric block, falling back to an
// eigen-decomposition for indefinite blocks. Throws DegenerateBlock.
Mat orthonormal_factor(const Mat& g, Vec* signature = nullptr);
OrthoFrame orthonormalize(const DMetric& dm);

struct ClassSpread {
  std::string name;          // R, P, S, R_v, P_v, S_h
  double max_deviation = 0;  // max over components and samples of |value - mean|
  double max_abs = 0;        // largest |value| seen
};

struct ConstantCurvatureReport {
  std::vector<BundlePoint> samples;
  std::vector<ClassSpread> classes;
  double tol = 1e-6;
  bool constant = false;
  double R_fwd = 0;  // sample means of the scalar curvatures
  double S_bwd = 0;
  double R_fwd_spread = 0;
  double S_bwd_spread = 0;
};

// Orthonormal-frame d-curvature at every sample; the verdict is "constant"
// when every class spread is below tol. Needs at least two samples.
ConstantCurvatureReport check_constant_curvature(Geometry& geo,
                                                 const std::vector<BundlePoint>& samples,
                                                 double tol = 1e-6);
ConstantCurvatureReport check_constant_curvature(const Space& space,
                                                 const std::vector<BundlePoint>& samples,
                                                 double tol = 1e-6);

// Identity d-metric blocks with N from the geodesic spray of g_base(x).
Space build_flat_lift(const ExprMat& g_base, BundleMode mode = BundleMode::Tangent);

// L = m0 a_ij(x) y^i y^j + e0 A_i(x) y^i, plus the closed-form N-connection
// N^i_j = Gamma^i_jk y^k - F^i_j (F_jk = e0/4 (d_k A_j - d_j A_k), F^i_j = g^ih F_jh,
// g = m0 a) computed independently of the Lagrangian pipeline.
struct EmSpace {
  Space space;
  ExprMat N_closed;  // [i][j] = N^i_j
  ExprArr3 christoffel;  // Gamma^i_jk of a
  ExprMat F;  // F_jk
};
EmSpace build_em_space(const ExprMat& a, const ExprVec& A, double m0, double e0);

// Levi-Civita symbols of a base metric, coded directly from the definition.
ExprArr3 christoffel(const ExprMat& g);

// Vector-bundle space with constant blocks and arbitrary N[a][i].
Space build_constant_dmetric(const Mat& g0, const Mat& h0, const ExprMat& N);

// Coordinate-basis metric of a d-metric with dual frame e^a = dy^a + N^a_i dx^i:
// [[g + N^T h N, N^T h], [h N, h]].
Mat coordinate_metric(const Mat& g, const Mat& h, const Mat& N);

// Constant N-connection N^e_j = h^eb g_jb (needs m == n).
Mat trivial_nconnection(const Mat& g0, const Mat& h0);

}  // namespace nhsol
